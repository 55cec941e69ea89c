/*
 * C interface of the gpslam engine.
 *
 * Every object is an opaque handle created by a *_create / *_load / *_build
 * call and released with the matching *_destroy. Functions return a
 * gpslam_status; on failure gpslam_last_error() describes the problem for
 * the calling thread. Poses use the world frame convention of the library:
 * right-handed, z up, meters, quaternion stored as (x, y, z, w).
 */
#ifndef GPSLAM_H
#define GPSLAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GPSLAM_API __declspec(dllexport)
#else
#define GPSLAM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpslam_status {
  GPSLAM_OK = 0,
  GPSLAM_ERR_INVALID_ARGUMENT = 1,
  GPSLAM_ERR_IO = 2,
  GPSLAM_ERR_PARSE = 3,
  GPSLAM_ERR_RECONSTRUCTION = 4,
  GPSLAM_ERR_NO_CORRESPONDENCES = 5,
  GPSLAM_ERR_DEGENERATE = 6,
  GPSLAM_ERR_UNDEFINED_RESULT = 7,
  GPSLAM_ERR_INTERNAL = 99
} gpslam_status;

typedef struct gpslam_pose {
  double t[3];
  double q[4]; /* x, y, z, w */
} gpslam_pose;

typedef struct gpslam_config gpslam_config;
typedef struct gpslam_cloud gpslam_cloud;
typedef struct gpslam_map gpslam_map;
typedef struct gpslam_scene gpslam_scene;
typedef struct gpslam_trajectory gpslam_trajectory;
typedef struct gpslam_pipeline gpslam_pipeline;

GPSLAM_API const char* gpslam_version(void);
GPSLAM_API const char* gpslam_last_error(void);
GPSLAM_API const char* gpslam_status_string(gpslam_status status);

/* Poses */
GPSLAM_API void gpslam_pose_identity(gpslam_pose* out);
/* Angles in radians, applied as yaw * pitch * roll. */
GPSLAM_API void gpslam_pose_from_xyz_rpy(double x, double y, double z, double roll, double pitch,
                                         double yaw, gpslam_pose* out);
GPSLAM_API void gpslam_pose_compose(const gpslam_pose* a, const gpslam_pose* b, gpslam_pose* out);
GPSLAM_API void gpslam_pose_inverse(const gpslam_pose* a, gpslam_pose* out);
GPSLAM_API double gpslam_pose_yaw(const gpslam_pose* a);

/* Configuration ("key = value" files) */
GPSLAM_API gpslam_status gpslam_config_create(gpslam_config** out);
GPSLAM_API gpslam_status gpslam_config_load(const char* path, gpslam_config** out);
GPSLAM_API gpslam_status gpslam_config_set(gpslam_config* cfg, const char* key, const char* value);
GPSLAM_API double gpslam_config_sigma2_thr(const gpslam_config* cfg);
GPSLAM_API void gpslam_config_destroy(gpslam_config* cfg);

/* Point clouds */
GPSLAM_API gpslam_status gpslam_cloud_create(gpslam_cloud** out);
/* `rejected` (optional) receives the number of non-finite records skipped. */
GPSLAM_API gpslam_status gpslam_cloud_load(const char* path, gpslam_cloud** out, size_t* rejected);
GPSLAM_API gpslam_status gpslam_cloud_save(const gpslam_cloud* cloud, const char* path);
GPSLAM_API size_t gpslam_cloud_size(const gpslam_cloud* cloud);
GPSLAM_API gpslam_status gpslam_cloud_push(gpslam_cloud* cloud, double x, double y, double z);
GPSLAM_API gpslam_status gpslam_cloud_get(const gpslam_cloud* cloud, size_t index, double xyz[3]);
GPSLAM_API gpslam_status gpslam_cloud_transform(gpslam_cloud* cloud, const gpslam_pose* pose);
GPSLAM_API void gpslam_cloud_destroy(gpslam_cloud* cloud);

/* Synthetic scenes (JSON description) */
GPSLAM_API gpslam_status gpslam_scene_load(const char* path, gpslam_scene** out);
GPSLAM_API size_t gpslam_scene_frame_count(const gpslam_scene* scene);
/* Sensor-frame scan from the index-th path pose. */
GPSLAM_API gpslam_status gpslam_scene_render(const gpslam_scene* scene, size_t index,
                                             gpslam_cloud** out);
GPSLAM_API gpslam_status gpslam_scene_ground_truth(const gpslam_scene* scene,
                                                   gpslam_trajectory** out);
GPSLAM_API void gpslam_scene_destroy(gpslam_scene* scene);

/* Trajectories ("timestamp tx ty tz qx qy qz qw" files) */
GPSLAM_API gpslam_status gpslam_trajectory_create(gpslam_trajectory** out);
GPSLAM_API gpslam_status gpslam_trajectory_load(const char* path, gpslam_trajectory** out);
GPSLAM_API gpslam_status gpslam_trajectory_save(const gpslam_trajectory* traj, const char* path);
GPSLAM_API size_t gpslam_trajectory_size(const gpslam_trajectory* traj);
GPSLAM_API gpslam_status gpslam_trajectory_push(gpslam_trajectory* traj, double timestamp,
                                                const gpslam_pose* pose);
GPSLAM_API gpslam_status gpslam_trajectory_get(const gpslam_trajectory* traj, size_t index,
                                               double* timestamp, gpslam_pose* pose);
GPSLAM_API void gpslam_trajectory_destroy(gpslam_trajectory* traj);

/* Gaussian-process maps */
/* Reconstructs `cloud` placed by `pose` (NULL for identity). */
GPSLAM_API gpslam_status gpslam_map_build(const gpslam_config* cfg, const gpslam_cloud* cloud,
                                          const gpslam_pose* pose, gpslam_map** out);
/* Reconstructs `cloud` placed by `pose` and fuses it into the map. */
GPSLAM_API gpslam_status gpslam_map_update(gpslam_map* map, const gpslam_cloud* cloud,
                                           const gpslam_pose* pose);
GPSLAM_API size_t gpslam_map_cell_count(const gpslam_map* map);
GPSLAM_API size_t gpslam_map_sample_count(const gpslam_map* map);
/* ASCII "x y z variance direction" lines for samples with variance <= max_variance. */
GPSLAM_API gpslam_status gpslam_map_export(const gpslam_map* map, const char* path,
                                           double max_variance);
GPSLAM_API void gpslam_map_destroy(gpslam_map* map);

/* Scan-to-map registration */
typedef struct gpslam_register_info {
  int outer_iterations;
  int converged;
  size_t correspondences;
  /* Space separated unobservable parameters on GPSLAM_ERR_DEGENERATE. */
  char unobservable[64];
} gpslam_register_info;

/* `trace` (optional) receives up to trace_capacity per-iteration poses;
 * `trace_len` the number written. `info` is optional. */
GPSLAM_API gpslam_status gpslam_register(const gpslam_config* cfg, const gpslam_cloud* scan,
                                         const gpslam_map* map, const gpslam_pose* initial,
                                         gpslam_pose* out, gpslam_register_info* info,
                                         gpslam_pose* trace, size_t trace_capacity,
                                         size_t* trace_len);

/* Odometry pipeline (core workflow plus optional refinement thread) */
typedef struct gpslam_frame_stats {
  uint64_t seq;
  double t_preprocess_ms;
  double t_match_ms;
  double t_align_ms;
  double t_update_ms;
  size_t correspondences;
  int degenerate;
} gpslam_frame_stats;

GPSLAM_API gpslam_status gpslam_pipeline_create(const gpslam_config* cfg, gpslam_pipeline** out);
/* Frames are numbered in push order. `live_pose` (optional) receives the
 * current estimate with the latest refinement correction applied. */
GPSLAM_API gpslam_status gpslam_pipeline_push(gpslam_pipeline* pipe, double timestamp,
                                              const gpslam_cloud* scan, gpslam_pose* live_pose);
GPSLAM_API gpslam_status gpslam_pipeline_finish(gpslam_pipeline* pipe);
/* The calls below need gpslam_pipeline_finish() first. */
GPSLAM_API gpslam_status gpslam_pipeline_trajectory(const gpslam_pipeline* pipe, int refined,
                                                    gpslam_trajectory** out);
GPSLAM_API gpslam_status gpslam_pipeline_map(const gpslam_pipeline* pipe, int refined,
                                             gpslam_map** out);
GPSLAM_API size_t gpslam_pipeline_frame_count(const gpslam_pipeline* pipe);
GPSLAM_API gpslam_status gpslam_pipeline_frame_stats(const gpslam_pipeline* pipe, size_t index,
                                                     gpslam_frame_stats* out);
/* One "seq t_preprocess_ms t_match_ms t_align_ms t_update_ms" line per frame. */
GPSLAM_API gpslam_status gpslam_pipeline_write_stats(const gpslam_pipeline* pipe,
                                                     const char* path);
GPSLAM_API size_t gpslam_pipeline_dropped_batches(const gpslam_pipeline* pipe);
GPSLAM_API void gpslam_pipeline_destroy(gpslam_pipeline* pipe);

/* Evaluation */
GPSLAM_API gpslam_status gpslam_eval_mme(const gpslam_cloud* cloud, double radius, double* out);

typedef struct gpslam_traj_errors {
  double avg_translation_error;
  double avg_xy_error;
  double final_elevation_error;
  double final_translation_error;
  size_t associated;
} gpslam_traj_errors;

GPSLAM_API gpslam_status gpslam_eval_traj(const gpslam_trajectory* estimated,
                                          const gpslam_trajectory* ground_truth,
                                          double time_tolerance, gpslam_traj_errors* out);
GPSLAM_API gpslam_status gpslam_eval_closest_rmse(const gpslam_cloud* source,
                                                  const gpslam_cloud* target,
                                                  const gpslam_pose* source_pose, double* out);

#ifdef __cplusplus
}
#endif

#endif /* GPSLAM_H */
