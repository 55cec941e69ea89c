#include "gpslam/gpslam.h"

#include "gpslam/cloud_io.hpp"
#include "gpslam/config.hpp"
#include "gpslam/error.hpp"
#include "gpslam/metrics.hpp"
#include "gpslam/pipeline.hpp"
#include "gpslam/registration.hpp"
#include "gpslam/scene.hpp"

#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

struct gpslam_config {
  gpslam::SlamConfig cfg;
};
struct gpslam_cloud {
  gpslam::PointCloud points;
};
struct gpslam_map {
  gpslam::GpMap map;
};
struct gpslam_scene {
  gpslam::SceneSpec scene;
};
struct gpslam_trajectory {
  std::vector<gpslam::TimedPose> poses;
};
struct gpslam_pipeline {
  std::unique_ptr<gpslam::Pipeline> pipeline;
  std::optional<gpslam::PipelineResult> result;
  std::uint64_t next_seq = 0;
};

namespace {

thread_local std::string g_last_error;

gpslam_status to_status(gpslam::ErrorCode code) {
  using gpslam::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return GPSLAM_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return GPSLAM_ERR_IO;
    case ErrorCode::Parse: return GPSLAM_ERR_PARSE;
    case ErrorCode::ReconstructionFailed: return GPSLAM_ERR_RECONSTRUCTION;
    case ErrorCode::NoCorrespondences: return GPSLAM_ERR_NO_CORRESPONDENCES;
    case ErrorCode::DegenerateGeometry: return GPSLAM_ERR_DEGENERATE;
    case ErrorCode::UndefinedResult: return GPSLAM_ERR_UNDEFINED_RESULT;
  }
  return GPSLAM_ERR_INTERNAL;
}

gpslam_status fail(gpslam_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
gpslam_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GPSLAM_OK;
  } catch (const gpslam::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(GPSLAM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GPSLAM_ERR_INTERNAL, e.what());
  }
}

#define GPSLAM_REQUIRE(cond)                                                       \
  do {                                                                             \
    if (!(cond)) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "null or invalid argument: " #cond); \
  } while (0)

gpslam::Pose to_pose(const gpslam_pose* p) {
  if (!p) return gpslam::Pose::identity();
  const Eigen::Quaterniond q(p->q[3], p->q[0], p->q[1], p->q[2]);
  if (!(q.norm() > 0.0)) throw gpslam::Error(gpslam::ErrorCode::InvalidArgument, "zero quaternion");
  return {q, Eigen::Vector3d(p->t[0], p->t[1], p->t[2])};
}

void from_pose(const gpslam::Pose& pose, gpslam_pose* out) {
  const auto& t = pose.translation();
  const auto& q = pose.rotation();
  out->t[0] = t.x();
  out->t[1] = t.y();
  out->t[2] = t.z();
  out->q[0] = q.x();
  out->q[1] = q.y();
  out->q[2] = q.z();
  out->q[3] = q.w();
}

}  // namespace

extern "C" {

const char* gpslam_version(void) { return "1.0.0"; }

const char* gpslam_last_error(void) { return g_last_error.c_str(); }

const char* gpslam_status_string(gpslam_status status) {
  switch (status) {
    case GPSLAM_OK: return "ok";
    case GPSLAM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GPSLAM_ERR_IO: return "i/o error";
    case GPSLAM_ERR_PARSE: return "parse error";
    case GPSLAM_ERR_RECONSTRUCTION: return "reconstruction failed";
    case GPSLAM_ERR_NO_CORRESPONDENCES: return "no correspondences";
    case GPSLAM_ERR_DEGENERATE: return "degenerate geometry";
    case GPSLAM_ERR_UNDEFINED_RESULT: return "undefined result";
    case GPSLAM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void gpslam_pose_identity(gpslam_pose* out) {
  if (out) from_pose(gpslam::Pose::identity(), out);
}

void gpslam_pose_from_xyz_rpy(double x, double y, double z, double roll, double pitch, double yaw,
                              gpslam_pose* out) {
  if (out) from_pose(gpslam::Pose::from_rpy(roll, pitch, yaw, {x, y, z}), out);
}

void gpslam_pose_compose(const gpslam_pose* a, const gpslam_pose* b, gpslam_pose* out) {
  if (out) from_pose(to_pose(a) * to_pose(b), out);
}

void gpslam_pose_inverse(const gpslam_pose* a, gpslam_pose* out) {
  if (out) from_pose(to_pose(a).inverse(), out);
}

double gpslam_pose_yaw(const gpslam_pose* a) { return to_pose(a).yaw(); }

/* Configuration */

gpslam_status gpslam_config_create(gpslam_config** out) {
  GPSLAM_REQUIRE(out);
  return guarded([&] { *out = new gpslam_config{}; });
}

gpslam_status gpslam_config_load(const char* path, gpslam_config** out) {
  GPSLAM_REQUIRE(path && out);
  return guarded([&] { *out = new gpslam_config{gpslam::load_config(path)}; });
}

gpslam_status gpslam_config_set(gpslam_config* cfg, const char* key, const char* value) {
  GPSLAM_REQUIRE(cfg && key && value);
  return guarded([&] {
    gpslam::SlamConfig updated = cfg->cfg;
    updated.set(key, value);
    updated.validate();
    cfg->cfg = updated;
  });
}

double gpslam_config_sigma2_thr(const gpslam_config* cfg) {
  return cfg ? cfg->cfg.match.sigma2_thr : gpslam::MatchConfig{}.sigma2_thr;
}

void gpslam_config_destroy(gpslam_config* cfg) { delete cfg; }

/* Clouds */

gpslam_status gpslam_cloud_create(gpslam_cloud** out) {
  GPSLAM_REQUIRE(out);
  return guarded([&] { *out = new gpslam_cloud{}; });
}

gpslam_status gpslam_cloud_load(const char* path, gpslam_cloud** out, size_t* rejected) {
  GPSLAM_REQUIRE(path && out);
  return guarded([&] {
    gpslam::CloudLoadReport report;
    auto cloud = std::make_unique<gpslam_cloud>();
    cloud->points = gpslam::load_cloud(path, &report);
    if (rejected) *rejected = report.rejected;
    *out = cloud.release();
  });
}

gpslam_status gpslam_cloud_save(const gpslam_cloud* cloud, const char* path) {
  GPSLAM_REQUIRE(cloud && path);
  return guarded([&] { gpslam::save_cloud(cloud->points, path); });
}

size_t gpslam_cloud_size(const gpslam_cloud* cloud) { return cloud ? cloud->points.size() : 0; }

gpslam_status gpslam_cloud_push(gpslam_cloud* cloud, double x, double y, double z) {
  GPSLAM_REQUIRE(cloud);
  const gpslam::Point3 p(x, y, z);
  if (!p.allFinite()) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "non-finite coordinate");
  return guarded([&] { cloud->points.push_back(p); });
}

gpslam_status gpslam_cloud_get(const gpslam_cloud* cloud, size_t index, double xyz[3]) {
  GPSLAM_REQUIRE(cloud && xyz);
  if (index >= cloud->points.size()) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "index out of range");
  const auto& p = cloud->points[index];
  xyz[0] = p.x();
  xyz[1] = p.y();
  xyz[2] = p.z();
  return GPSLAM_OK;
}

gpslam_status gpslam_cloud_transform(gpslam_cloud* cloud, const gpslam_pose* pose) {
  GPSLAM_REQUIRE(cloud && pose);
  return guarded([&] { cloud->points = gpslam::transform(to_pose(pose), cloud->points); });
}

void gpslam_cloud_destroy(gpslam_cloud* cloud) { delete cloud; }

/* Scenes */

gpslam_status gpslam_scene_load(const char* path, gpslam_scene** out) {
  GPSLAM_REQUIRE(path && out);
  return guarded([&] { *out = new gpslam_scene{gpslam::load_scene(path)}; });
}

size_t gpslam_scene_frame_count(const gpslam_scene* scene) {
  return scene ? scene->scene.sensor_path.size() : 0;
}

gpslam_status gpslam_scene_render(const gpslam_scene* scene, size_t index, gpslam_cloud** out) {
  GPSLAM_REQUIRE(scene && out);
  return guarded([&] { *out = new gpslam_cloud{gpslam::synth_scan(scene->scene, index)}; });
}

gpslam_status gpslam_scene_ground_truth(const gpslam_scene* scene, gpslam_trajectory** out) {
  GPSLAM_REQUIRE(scene && out);
  return guarded([&] { *out = new gpslam_trajectory{scene->scene.sensor_path}; });
}

void gpslam_scene_destroy(gpslam_scene* scene) { delete scene; }

/* Trajectories */

gpslam_status gpslam_trajectory_create(gpslam_trajectory** out) {
  GPSLAM_REQUIRE(out);
  return guarded([&] { *out = new gpslam_trajectory{}; });
}

gpslam_status gpslam_trajectory_load(const char* path, gpslam_trajectory** out) {
  GPSLAM_REQUIRE(path && out);
  return guarded([&] { *out = new gpslam_trajectory{gpslam::load_trajectory(path)}; });
}

gpslam_status gpslam_trajectory_save(const gpslam_trajectory* traj, const char* path) {
  GPSLAM_REQUIRE(traj && path);
  return guarded([&] { gpslam::save_trajectory(traj->poses, path); });
}

size_t gpslam_trajectory_size(const gpslam_trajectory* traj) {
  return traj ? traj->poses.size() : 0;
}

gpslam_status gpslam_trajectory_push(gpslam_trajectory* traj, double timestamp,
                                     const gpslam_pose* pose) {
  GPSLAM_REQUIRE(traj && pose);
  return guarded([&] { traj->poses.push_back({timestamp, to_pose(pose)}); });
}

gpslam_status gpslam_trajectory_get(const gpslam_trajectory* traj, size_t index,
                                    double* timestamp, gpslam_pose* pose) {
  GPSLAM_REQUIRE(traj);
  if (index >= traj->poses.size()) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "index out of range");
  if (timestamp) *timestamp = traj->poses[index].timestamp;
  if (pose) from_pose(traj->poses[index].pose, pose);
  return GPSLAM_OK;
}

void gpslam_trajectory_destroy(gpslam_trajectory* traj) { delete traj; }

/* Maps */

gpslam_status gpslam_map_build(const gpslam_config* cfg, const gpslam_cloud* cloud,
                               const gpslam_pose* pose, gpslam_map** out) {
  GPSLAM_REQUIRE(cfg && cloud && out);
  return guarded([&] {
    const auto& c = cfg->cfg;
    *out = new gpslam_map{gpslam::reconstruct_cloud(gpslam::transform(to_pose(pose), cloud->points),
                                                    c.grid, c.kernel, c.map)};
  });
}

gpslam_status gpslam_map_update(gpslam_map* map, const gpslam_cloud* cloud,
                                const gpslam_pose* pose) {
  GPSLAM_REQUIRE(map && cloud);
  return guarded([&] {
    const auto& m = map->map;
    const gpslam::GpMap frame = gpslam::reconstruct_cloud(
        gpslam::transform(to_pose(pose), cloud->points), m.grid(), m.kernel(), m.config());
    gpslam::update_map(map->map, frame);
  });
}

size_t gpslam_map_cell_count(const gpslam_map* map) { return map ? map->map.cells().size() : 0; }

size_t gpslam_map_sample_count(const gpslam_map* map) { return map ? map->map.sample_count() : 0; }

gpslam_status gpslam_map_export(const gpslam_map* map, const char* path, double max_variance) {
  GPSLAM_REQUIRE(map && path);
  return guarded([&] { gpslam::export_map(map->map, std::string(path), max_variance); });
}

void gpslam_map_destroy(gpslam_map* map) { delete map; }

/* Registration */

gpslam_status gpslam_register(const gpslam_config* cfg, const gpslam_cloud* scan,
                              const gpslam_map* map, const gpslam_pose* initial, gpslam_pose* out,
                              gpslam_register_info* info, gpslam_pose* trace,
                              size_t trace_capacity, size_t* trace_len) {
  GPSLAM_REQUIRE(cfg && scan && map && out);
  if (info) std::memset(info, 0, sizeof(*info));
  if (trace_len) *trace_len = 0;
  try {
    const gpslam::RegistrationResult r =
        gpslam::register_scan(scan->points, map->map, to_pose(initial), cfg->cfg.match);
    from_pose(r.pose, out);
    if (info) {
      info->outer_iterations = r.outer_iterations;
      info->converged = r.converged ? 1 : 0;
      info->correspondences = r.correspondences;
    }
    if (trace) {
      const size_t n = std::min(trace_capacity, r.pose_trace.size());
      for (size_t i = 0; i < n; ++i) from_pose(r.pose_trace[i], &trace[i]);
      if (trace_len) *trace_len = n;
    }
    g_last_error.clear();
    return GPSLAM_OK;
  } catch (const gpslam::DegenerateGeometryError& e) {
    if (info) {
      std::string names;
      for (const auto& n : e.unobservable()) names += (names.empty() ? "" : " ") + n;
      std::strncpy(info->unobservable, names.c_str(), sizeof(info->unobservable) - 1);
    }
    return fail(GPSLAM_ERR_DEGENERATE, e.what());
  } catch (const gpslam::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(GPSLAM_ERR_INTERNAL, e.what());
  }
}

/* Pipeline */

gpslam_status gpslam_pipeline_create(const gpslam_config* cfg, gpslam_pipeline** out) {
  GPSLAM_REQUIRE(cfg && out);
  return guarded([&] {
    auto pipe = std::make_unique<gpslam_pipeline>();
    pipe->pipeline = std::make_unique<gpslam::Pipeline>(cfg->cfg);
    *out = pipe.release();
  });
}

gpslam_status gpslam_pipeline_push(gpslam_pipeline* pipe, double timestamp,
                                   const gpslam_cloud* scan, gpslam_pose* live_pose) {
  GPSLAM_REQUIRE(pipe && scan);
  if (pipe->result) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "pipeline already finished");
  return guarded([&] {
    const gpslam::Pose live = pipe->pipeline->push({pipe->next_seq, timestamp, scan->points, {}});
    ++pipe->next_seq;
    if (live_pose) from_pose(live, live_pose);
  });
}

gpslam_status gpslam_pipeline_finish(gpslam_pipeline* pipe) {
  GPSLAM_REQUIRE(pipe);
  if (pipe->result) return GPSLAM_OK;
  return guarded([&] { pipe->result = pipe->pipeline->finish(); });
}

gpslam_status gpslam_pipeline_trajectory(const gpslam_pipeline* pipe, int refined,
                                         gpslam_trajectory** out) {
  GPSLAM_REQUIRE(pipe && out);
  if (!pipe->result) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "pipeline not finished");
  return guarded([&] {
    *out = new gpslam_trajectory{refined ? pipe->result->trajectory : pipe->result->core_trajectory};
  });
}

gpslam_status gpslam_pipeline_map(const gpslam_pipeline* pipe, int refined, gpslam_map** out) {
  GPSLAM_REQUIRE(pipe && out);
  if (!pipe->result) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "pipeline not finished");
  if (refined && !pipe->result->refined_map)
    return fail(GPSLAM_ERR_INVALID_ARGUMENT, "refinement was not enabled");
  return guarded([&] {
    *out = new gpslam_map{refined ? *pipe->result->refined_map : pipe->result->core_map};
  });
}

size_t gpslam_pipeline_frame_count(const gpslam_pipeline* pipe) {
  return pipe && pipe->result ? pipe->result->stats.size() : 0;
}

gpslam_status gpslam_pipeline_frame_stats(const gpslam_pipeline* pipe, size_t index,
                                          gpslam_frame_stats* out) {
  GPSLAM_REQUIRE(pipe && out);
  if (!pipe->result) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "pipeline not finished");
  if (index >= pipe->result->stats.size())
    return fail(GPSLAM_ERR_INVALID_ARGUMENT, "index out of range");
  const auto& s = pipe->result->stats[index];
  *out = {s.seq, s.t_preprocess_ms, s.t_match_ms, s.t_align_ms, s.t_update_ms, s.correspondences,
          s.degenerate ? 1 : 0};
  return GPSLAM_OK;
}

gpslam_status gpslam_pipeline_write_stats(const gpslam_pipeline* pipe, const char* path) {
  GPSLAM_REQUIRE(pipe && path);
  if (!pipe->result) return fail(GPSLAM_ERR_INVALID_ARGUMENT, "pipeline not finished");
  return guarded([&] {
    std::ofstream out(path);
    if (!out) throw gpslam::Error(gpslam::ErrorCode::Io, std::string("cannot open ") + path);
    gpslam::write_frame_stats(pipe->result->stats, out);
  });
}

size_t gpslam_pipeline_dropped_batches(const gpslam_pipeline* pipe) {
  return pipe && pipe->result ? pipe->result->dropped_batches : 0;
}

void gpslam_pipeline_destroy(gpslam_pipeline* pipe) { delete pipe; }

/* Evaluation */

gpslam_status gpslam_eval_mme(const gpslam_cloud* cloud, double radius, double* out) {
  GPSLAM_REQUIRE(cloud && out);
  return guarded([&] { *out = gpslam::mean_map_entropy(cloud->points, radius); });
}

gpslam_status gpslam_eval_traj(const gpslam_trajectory* estimated,
                               const gpslam_trajectory* ground_truth, double time_tolerance,
                               gpslam_traj_errors* out) {
  GPSLAM_REQUIRE(estimated && ground_truth && out);
  return guarded([&] {
    const auto e = gpslam::trajectory_error(estimated->poses, ground_truth->poses, time_tolerance);
    *out = {e.avg_translation_error, e.avg_xy_error, e.final_elevation_error,
            e.final_translation_error, e.associated};
  });
}

gpslam_status gpslam_eval_closest_rmse(const gpslam_cloud* source, const gpslam_cloud* target,
                                       const gpslam_pose* source_pose, double* out) {
  GPSLAM_REQUIRE(source && target && out);
  return guarded([&] {
    *out = gpslam::closest_point_rmse(source->points, target->points, to_pose(source_pose));
  });
}

}  // extern "C"
