// Command line front end. Talks to the engine exclusively through gpslam.h.

#include "gpslam/gpslam.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CliError : std::runtime_error {
  int exit_code;
  CliError(const std::string& what, int code) : std::runtime_error(what), exit_code(code) {}
};

void check(gpslam_status s, const std::string& context) {
  if (s != GPSLAM_OK)
    throw CliError(context + ": " + gpslam_status_string(s) + ": " + gpslam_last_error(),
                   static_cast<int>(s));
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using Config = std::unique_ptr<gpslam_config, Deleter<gpslam_config, gpslam_config_destroy>>;
using Cloud = std::unique_ptr<gpslam_cloud, Deleter<gpslam_cloud, gpslam_cloud_destroy>>;
using Map = std::unique_ptr<gpslam_map, Deleter<gpslam_map, gpslam_map_destroy>>;
using Scene = std::unique_ptr<gpslam_scene, Deleter<gpslam_scene, gpslam_scene_destroy>>;
using Trajectory =
    std::unique_ptr<gpslam_trajectory, Deleter<gpslam_trajectory, gpslam_trajectory_destroy>>;
using Pipeline =
    std::unique_ptr<gpslam_pipeline, Deleter<gpslam_pipeline, gpslam_pipeline_destroy>>;

Config make_config(const std::string& path, const std::vector<std::string>& overrides) {
  gpslam_config* raw = nullptr;
  if (path.empty())
    check(gpslam_config_create(&raw), "config");
  else
    check(gpslam_config_load(path.c_str(), &raw), "config " + path);
  Config cfg(raw);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CliError("--set expects key=value, got '" + kv + "'", 1);
    check(gpslam_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
          "--set " + kv);
  }
  return cfg;
}

Cloud load_cloud(const std::string& path) {
  gpslam_cloud* raw = nullptr;
  size_t rejected = 0;
  check(gpslam_cloud_load(path.c_str(), &raw, &rejected), "load " + path);
  if (rejected > 0)
    std::fprintf(stderr, "warning: %s: skipped %zu non-finite points\n", path.c_str(), rejected);
  return Cloud(raw);
}

Trajectory load_trajectory(const std::string& path) {
  gpslam_trajectory* raw = nullptr;
  check(gpslam_trajectory_load(path.c_str(), &raw), "load " + path);
  return Trajectory(raw);
}

void print_pose(const char* label, const gpslam_pose& p) {
  std::printf("%s t=(%.6f %.6f %.6f) yaw=%.4f deg\n", label, p.t[0], p.t[1], p.t[2],
              gpslam_pose_yaw(&p) * 180.0 / kPi);
}

// Translation and rotation angle between two poses.
std::pair<double, double> pose_gap(const gpslam_pose& a, const gpslam_pose& b) {
  gpslam_pose inv, d;
  gpslam_pose_inverse(&a, &inv);
  gpslam_pose_compose(&inv, &b, &d);
  const double t = std::sqrt(d.t[0] * d.t[0] + d.t[1] * d.t[1] + d.t[2] * d.t[2]);
  const double w = std::min(1.0, std::abs(d.q[3]));
  return {t, 2.0 * std::acos(w) * 180.0 / kPi};
}

int cmd_synth(const std::string& scene_path, const std::string& out_dir) {
  gpslam_scene* raw = nullptr;
  check(gpslam_scene_load(scene_path.c_str(), &raw), "scene " + scene_path);
  Scene scene(raw);
  fs::create_directories(out_dir);
  gpslam_trajectory* gt_raw = nullptr;
  check(gpslam_scene_ground_truth(scene.get(), &gt_raw), "ground truth");
  Trajectory gt(gt_raw);

  std::ofstream stamps(fs::path(out_dir) / "timestamps.txt");
  if (!stamps) throw CliError("cannot write " + out_dir + "/timestamps.txt", GPSLAM_ERR_IO);
  stamps.precision(9);
  const size_t n = gpslam_scene_frame_count(scene.get());
  for (size_t i = 0; i < n; ++i) {
    gpslam_cloud* scan_raw = nullptr;
    check(gpslam_scene_render(scene.get(), i, &scan_raw), "render frame " + std::to_string(i));
    Cloud scan(scan_raw);
    char name[32];
    std::snprintf(name, sizeof(name), "scan_%06zu.pcd", i);
    const std::string path = (fs::path(out_dir) / name).string();
    check(gpslam_cloud_save(scan.get(), path.c_str()), "save " + path);
    double t = 0.0;
    check(gpslam_trajectory_get(gt.get(), i, &t, nullptr), "ground truth");
    stamps << t << '\n';
  }
  const std::string gt_path = (fs::path(out_dir) / "groundtruth.txt").string();
  check(gpslam_trajectory_save(gt.get(), gt_path.c_str()), "save " + gt_path);
  std::printf("wrote %zu scans to %s\n", n, out_dir.c_str());
  return 0;
}

int cmd_register(const std::string& source_path, const std::string& target_path,
                 const std::vector<double>& perturb, const Config& cfg) {
  Cloud source = load_cloud(source_path);
  Cloud target = load_cloud(target_path);

  gpslam_pose offset;
  gpslam_pose_from_xyz_rpy(perturb[0], perturb[1], perturb[2], 0.0, 0.0,
                           perturb[3] * kPi / 180.0, &offset);
  check(gpslam_cloud_transform(source.get(), &offset), "perturb");
  gpslam_pose expected;
  gpslam_pose_inverse(&offset, &expected);

  gpslam_map* map_raw = nullptr;
  check(gpslam_map_build(cfg.get(), target.get(), nullptr, &map_raw), "reconstruct target");
  Map map(map_raw);

  gpslam_pose identity, result;
  gpslam_pose_identity(&identity);
  gpslam_register_info info{};
  std::vector<gpslam_pose> trace(64);
  size_t trace_len = 0;
  const gpslam_status s = gpslam_register(cfg.get(), source.get(), map.get(), &identity, &result,
                                          &info, trace.data(), trace.size(), &trace_len);
  if (s == GPSLAM_ERR_DEGENERATE && info.unobservable[0])
    std::fprintf(stderr, "unobservable parameters: %s\n", info.unobservable);
  check(s, "register");

  double rmse = 0.0;
  check(gpslam_eval_closest_rmse(source.get(), target.get(), &identity, &rmse), "rmse");
  std::printf("iter 0 rmse=%.6f\n", rmse);
  for (size_t i = 0; i < trace_len; ++i) {
    check(gpslam_eval_closest_rmse(source.get(), target.get(), &trace[i], &rmse), "rmse");
    const auto [dt, dr] = pose_gap(expected, trace[i]);
    std::printf("iter %zu rmse=%.6f err_t=%.6f m err_r=%.4f deg ", i + 1, rmse, dt, dr);
    print_pose("pose", trace[i]);
  }
  const auto [dt, dr] = pose_gap(expected, result);
  std::printf("correspondences=%zu converged=%d outer_iterations=%d\n", info.correspondences,
              info.converged, info.outer_iterations);
  print_pose("final", result);
  std::printf("final error: %.6f m %.4f deg\n", dt, dr);
  return 0;
}

int cmd_eval_mme(const std::string& cloud_path, double radius) {
  Cloud cloud = load_cloud(cloud_path);
  double mme = 0.0;
  check(gpslam_eval_mme(cloud.get(), radius, &mme), "mme");
  std::printf("mme %.6f\n", mme);
  return 0;
}

int cmd_eval_traj(const std::string& est_path, const std::string& gt_path, double tolerance) {
  Trajectory est = load_trajectory(est_path);
  Trajectory gt = load_trajectory(gt_path);
  gpslam_traj_errors e{};
  check(gpslam_eval_traj(est.get(), gt.get(), tolerance, &e), "trajectory error");
  std::printf("associated %zu\n", e.associated);
  std::printf("avg_translation_error %.6f\n", e.avg_translation_error);
  std::printf("avg_xy_error %.6f\n", e.avg_xy_error);
  std::printf("final_elevation_error %.6f\n", e.final_elevation_error);
  std::printf("final_translation_error %.6f\n", e.final_translation_error);
  return 0;
}

bool is_cloud_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pcd" || ext == ".xyz";
}

struct ScanEntry {
  double timestamp;
  std::string path;
};

// A directory holds scans sorted by name plus an optional timestamps.txt
// (one value per scan). A file lists one scan per line, "path" or
// "timestamp path", relative paths resolved against the list file.
std::vector<ScanEntry> collect_scans(const std::string& input, double period) {
  std::vector<ScanEntry> scans;
  const fs::path in(input);
  if (fs::is_directory(in)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_regular_file() && is_cloud_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<double> stamps;
    if (std::ifstream ts(in / "timestamps.txt"); ts) {
      double t;
      while (ts >> t) stamps.push_back(t);
      if (stamps.size() != files.size())
        throw CliError("timestamps.txt has " + std::to_string(stamps.size()) + " entries for " +
                           std::to_string(files.size()) + " scans",
                       GPSLAM_ERR_PARSE);
    }
    for (size_t i = 0; i < files.size(); ++i)
      scans.push_back({stamps.empty() ? period * i : stamps[i], files[i].string()});
  } else {
    std::ifstream list(in);
    if (!list) throw CliError("cannot open " + input, GPSLAM_ERR_IO);
    std::string line;
    size_t n = 0;
    while (std::getline(list, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string a, b;
      ss >> a >> b;
      fs::path p = b.empty() ? fs::path(a) : fs::path(b);
      if (p.is_relative()) p = in.parent_path() / p;
      const double t = b.empty() ? period * n : std::stod(a);
      scans.push_back({t, p.string()});
      ++n;
    }
  }
  if (scans.empty()) throw CliError("no scans found in " + input, GPSLAM_ERR_INVALID_ARGUMENT);
  return scans;
}

int cmd_run(const std::string& input, Config& cfg, const std::string& refine,
            const std::string& map_out, const std::string& traj_out, const std::string& stats_out,
            double max_variance, bool verbose) {
  check(gpslam_config_set(cfg.get(), "refine_enabled", refine == "on" ? "true" : "false"),
        "--refine");
  const auto scans = collect_scans(input, 0.1);

  gpslam_pipeline* raw = nullptr;
  check(gpslam_pipeline_create(cfg.get(), &raw), "pipeline");
  Pipeline pipe(raw);
  for (size_t i = 0; i < scans.size(); ++i) {
    Cloud scan = load_cloud(scans[i].path);
    gpslam_pose live;
    check(gpslam_pipeline_push(pipe.get(), scans[i].timestamp, scan.get(), &live),
          "frame " + std::to_string(i));
    if (verbose) {
      char label[32];
      std::snprintf(label, sizeof(label), "frame %zu", i);
      print_pose(label, live);
    }
  }
  check(gpslam_pipeline_finish(pipe.get()), "finish");

  const int use_refined = refine == "on" ? 1 : 0;
  size_t degenerate = 0;
  for (size_t i = 0; i < gpslam_pipeline_frame_count(pipe.get()); ++i) {
    gpslam_frame_stats fs_{};
    check(gpslam_pipeline_frame_stats(pipe.get(), i, &fs_), "stats");
    degenerate += fs_.degenerate ? 1 : 0;
  }
  std::printf("frames %zu degenerate %zu dropped_batches %zu\n", scans.size(), degenerate,
              gpslam_pipeline_dropped_batches(pipe.get()));

  if (!traj_out.empty()) {
    gpslam_trajectory* traj = nullptr;
    check(gpslam_pipeline_trajectory(pipe.get(), use_refined, &traj), "trajectory");
    Trajectory t(traj);
    check(gpslam_trajectory_save(t.get(), traj_out.c_str()), "save " + traj_out);
  }
  if (!map_out.empty()) {
    gpslam_map* map = nullptr;
    check(gpslam_pipeline_map(pipe.get(), use_refined, &map), "map");
    Map m(map);
    check(gpslam_map_export(m.get(), map_out.c_str(), max_variance), "export " + map_out);
    std::printf("map cells %zu samples %zu\n", gpslam_map_cell_count(m.get()),
                gpslam_map_sample_count(m.get()));
  }
  if (!stats_out.empty())
    check(gpslam_pipeline_write_stats(pipe.get(), stats_out.c_str()), "stats " + stats_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process lidar odometry and mapping"};
  app.set_version_flag("--version", std::string(gpslam_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (key = value)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override a configuration key, key=value");
  };

  auto* synth = app.add_subcommand("synth", "render a synthetic scan sequence");
  std::string scene_path, out_dir;
  synth->add_option("--scene", scene_path, "scene description (JSON)")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* reg = app.add_subcommand("register", "register a perturbed source scan to a target");
  std::string source_path, target_path;
  std::vector<double> perturb{1.0, 0.0, 0.0, 5.0};
  reg->add_option("--source", source_path, "source cloud")->required()->check(CLI::ExistingFile);
  reg->add_option("--target", target_path, "target cloud")->required()->check(CLI::ExistingFile);
  reg->add_option("--perturb", perturb, "source offset: tx ty tz yaw_deg")
      ->expected(4)
      ->delimiter(' ');
  add_config(reg);

  auto* eval = app.add_subcommand("eval", "evaluation metrics");
  eval->require_subcommand(1);
  auto* mme = eval->add_subcommand("mme", "mean map entropy of a cloud");
  std::string mme_cloud;
  double radius = 1.5;
  mme->add_option("--cloud", mme_cloud, "point cloud")->required()->check(CLI::ExistingFile);
  mme->add_option("--radius", radius, "neighborhood radius (m)")->capture_default_str();
  auto* traj = eval->add_subcommand("traj", "trajectory error against ground truth");
  std::string est_path, gt_path;
  double tolerance = 0.02;
  traj->add_option("--est", est_path, "estimated trajectory")->required()->check(CLI::ExistingFile);
  traj->add_option("--gt", gt_path, "ground-truth trajectory")->required()->check(CLI::ExistingFile);
  traj->add_option("--tolerance", tolerance, "timestamp association tolerance (s)")->capture_default_str();

  auto* run = app.add_subcommand("run", "run odometry and mapping over a scan sequence");
  std::string input, map_out, traj_out, stats_out, refine = "off";
  double max_variance = 0.05;
  bool verbose = false;
  run->add_option("--input", input, "scan directory or scan list file")
      ->required()
      ->check(CLI::ExistingPath);
  run->add_option("--output-map", map_out, "exported map samples");
  run->add_option("--output-traj", traj_out, "estimated trajectory");
  run->add_option("--stats", stats_out, "per-frame timing report");
  run->add_option("--refine", refine, "refinement thread")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  run->add_option("--map-max-variance", max_variance, "export samples up to this variance")->capture_default_str();
  run->add_flag("-v,--verbose", verbose, "print the live pose of every frame");
  add_config(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(scene_path, out_dir);
    if (*reg) {
      if (perturb.size() != 4) throw CliError("--perturb needs 4 values", 1);
      return cmd_register(source_path, target_path, perturb, make_config(config_path, overrides));
    }
    if (*mme) return cmd_eval_mme(mme_cloud, radius);
    if (*traj) return cmd_eval_traj(est_path, gt_path, tolerance);
    if (*run) {
      Config cfg = make_config(config_path, overrides);
      return cmd_run(input, cfg, refine, map_out, traj_out, stats_out, max_variance, verbose);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
