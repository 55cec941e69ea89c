#include "gpslam/error.hpp"
#include "gpslam/metrics.hpp"
#include "gpslam/pipeline.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace gpslam;
using testing::kDeg;

namespace {

std::vector<FramePacket> packets(const testing::SyntheticRun& run) {
  std::vector<FramePacket> out;
  for (std::size_t i = 0; i < run.scans.size(); ++i)
    out.push_back({i, run.ground_truth[i].timestamp, run.scans[i], {}});
  return out;
}

bool same_trajectory(const std::vector<TimedPose>& a, const std::vector<TimedPose>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].timestamp != b[i].timestamp || a[i].pose.matrix() != b[i].pose.matrix()) return false;
  return true;
}

class FixedGuess final : public InitialGuessProvider {
 public:
  explicit FixedGuess(Pose p) : pose_(p) {}
  Pose predict(std::span<const TimedPose>, double) const override { return pose_; }

 private:
  Pose pose_;
};

}  // namespace

TEST_CASE("single frame stream") {
  const auto run = testing::render_run(testing::room_loop_scene(1));
  const CoreResult r = run_core(packets(run), SlamConfig{});
  REQUIRE(r.trajectory.size() == 1);
  CHECK(r.trajectory[0].pose.matrix() == Pose::identity().matrix());
  const GpMap ref = reconstruct_cloud(run.scans[0], GridConfig{}, KernelConfig{});
  CHECK(r.map.cells().size() == ref.cells().size());
  CHECK(r.map.sample_count() == ref.sample_count());
  CHECK_THROWS_AS(run_core(std::vector<FramePacket>{}, SlamConfig{}), Error);
}

TEST_CASE("static sensor stays put and sharpens the map") {
  SceneSpec scene = testing::room_loop_scene(1);
  for (int i = 1; i < 10; ++i)
    scene.sensor_path.push_back({0.1 * i, scene.sensor_path[0].pose});
  const auto run = testing::render_run(scene);

  CoreWorkflow core(SlamConfig{});
  std::map<std::tuple<int, int, int, int, int>, double> last;
  for (std::size_t i = 0; i < run.scans.size(); ++i) {
    FramePacket f{i, 0.1 * static_cast<double>(i), run.scans[i], {}};
    const FrameStats s = core.process(f);
    CHECK(!s.degenerate);
    const PoseDelta e = pose_difference(f.pose_estimate, Pose::identity());
    CHECK(e.translation < 0.02);
    CHECK(e.rotation < 0.2 * kDeg);
    for (const auto& [idx, cell] : core.map().cells())
      for (const auto& layer : cell.layers)
        if (layer)
          for (const auto& smp : layer->samples) {
            const auto key = std::make_tuple(idx.x, idx.y, idx.z, axis(smp.direction), smp.lattice_id);
            if (auto it = last.find(key); it != last.end()) CHECK(smp.variance <= it->second);
            last[key] = smp.variance;
          }
  }
}

TEST_CASE("straight corridor run") {
  SceneSpec scene;
  scene.primitives.push_back({PrimitiveKind::Box, Pose::from_translation({0, 0, 1.5}), {10, 2, 1.5}});
  scene.primitives.push_back({PrimitiveKind::Box, Pose::from_translation({-2, 1.4, 0.5}), {0.4, 0.6, 0.5}});
  scene.primitives.push_back({PrimitiveKind::Box, Pose::from_translation({2.5, -1.5, 0.8}), {0.5, 0.5, 0.8}});
  scene.primitives.push_back({PrimitiveKind::Cylinder, Pose::from_translation({5, 1.2, 1.5}), {0.3, 0.3, 1.5}});
  scene.primitives.push_back({PrimitiveKind::Box, Pose::from_rpy(0, 0, 0.4, {0.5, 1.6, 1.0}), {0.3, 0.3, 1.0}});
  for (int i = 0; i < 20; ++i)
    scene.sensor_path.push_back({0.1 * i, Pose::from_translation({-1.0 + 0.1 * i, 0.0, 1.2})});
  const auto run = testing::render_run(scene);
  const CoreResult r = run_core(packets(run), SlamConfig{});
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    const Pose est = r.trajectory[i - 1].pose.inverse() * r.trajectory[i].pose;
    const Pose gt = run.ground_truth[i - 1].pose.inverse() * run.ground_truth[i].pose;
    CHECK(pose_difference(est, gt).translation < 0.02);
  }
}

TEST_CASE("pose integration") {
  std::mt19937_64 rng(61);
  const Pose core = testing::random_pose(rng), sub = testing::random_pose(rng);
  CHECK(pose_difference(integrate_poses(core, core, sub), sub).translation < 1e-12);

  const Pose shifted = integrate_poses(Pose::identity(), Pose::from_translation({0.1, 0, 0}), sub);
  CHECK((shifted.translation() - sub.translation() - Eigen::Vector3d(0.1, 0, 0)).norm() < 1e-12);
  CHECK(pose_difference(shifted, Pose::from_translation({0.1, 0, 0}) * sub).rotation < 1e-12);

  for (int i = 0; i < 100; ++i) {
    const Pose c = testing::random_pose(rng), r = testing::random_pose(rng), s = testing::random_pose(rng);
    const Pose corrected = integrate_poses(c, r, s);
    const PoseDelta e = pose_difference(r.inverse() * corrected, c.inverse() * s);
    CHECK(e.translation < 1e-9);
    CHECK(e.rotation < 1e-9);
  }
}

TEST_CASE("refinement outcomes apply to their batch only") {
  std::vector<TimedPose> core;
  for (int i = 0; i < 6; ++i) core.push_back({0.1 * i, Pose::from_translation({0.1 * i, 0, 0})});
  const Pose shift = Pose::from_translation({0, 0.5, 0});
  const std::vector<RefinementOutcome> outcomes{
      {0, 2, core[2].pose, shift * core[2].pose, true},
      {3, 5, core[5].pose, shift * core[5].pose, false}};
  const auto refined = apply_refinement(core, outcomes);
  for (int i = 0; i < 3; ++i) CHECK(refined[i].pose.translation().y() == doctest::Approx(0.5));
  for (int i = 3; i < 6; ++i) CHECK(refined[i].pose.translation().y() == 0.0);
}

TEST_CASE("pipeline with refinement disabled equals the core run") {
  const auto run = testing::render_run(testing::room_loop_scene(12));
  const auto frames = packets(run);
  const SlamConfig cfg;
  const PipelineResult p = run_pipeline(frames, cfg);
  const CoreResult c = run_core(frames, cfg);
  CHECK(same_trajectory(p.trajectory, c.trajectory));
  CHECK(same_trajectory(p.core_trajectory, c.trajectory));
  CHECK(!p.refined_map.has_value());
  CHECK(p.stats.size() == frames.size());
  CHECK(p.core_map.sample_count() == c.map.sample_count());
}

TEST_CASE("refinement of single-frame batches reproduces the core run") {
  const auto run = testing::render_run(testing::room_loop_scene(12));
  SlamConfig cfg;
  cfg.pipeline.refine_enabled = true;
  cfg.pipeline.refine_async = false;
  cfg.pipeline.refine_batch = 1;
  cfg.pipeline.refine_outer_iters = cfg.pipeline.core_outer_iters;
  const PipelineResult p = run_pipeline(packets(run), cfg);
  REQUIRE(p.trajectory.size() == p.core_trajectory.size());
  for (std::size_t i = 0; i < p.trajectory.size(); ++i) {
    const PoseDelta e = pose_difference(p.trajectory[i].pose, p.core_trajectory[i].pose);
    CHECK(e.translation < 5e-3);
    CHECK(e.rotation < 0.1 * kDeg);
  }
}

TEST_CASE("refinement does not worsen a square loop") {
  const auto run = testing::render_run(testing::room_loop_scene(80));
  SlamConfig cfg;
  cfg.pipeline.refine_enabled = true;
  const PipelineResult p = run_pipeline(packets(run), cfg);
  CHECK(p.dropped_batches == 0);
  const auto core = trajectory_error(p.core_trajectory, run.ground_truth);
  const auto refined = trajectory_error(p.trajectory, run.ground_truth);
  CHECK(core.associated == 80);
  CHECK(refined.final_translation_error <= core.final_translation_error);
  CHECK(core.avg_translation_error < 0.05);
}

TEST_CASE("runs are reproducible") {
  const auto run = testing::render_run(testing::room_loop_scene(15));
  const auto frames = packets(run);
  SlamConfig cfg;
  cfg.pipeline.refine_enabled = true;
  cfg.pipeline.refine_async = false;
  const PipelineResult a = run_pipeline(frames, cfg);
  const PipelineResult b = run_pipeline(frames, cfg);
  CHECK(same_trajectory(a.trajectory, b.trajectory));
  CHECK(same_trajectory(a.core_trajectory, b.core_trajectory));

  // The worker thread changes when corrections arrive, not what they are.
  cfg.pipeline.refine_async = true;
  const PipelineResult c = run_pipeline(frames, cfg);
  CHECK(c.dropped_batches == 0);
  CHECK(same_trajectory(a.trajectory, c.trajectory));
}

TEST_CASE("bounded refinement queue") {
  const auto run = testing::render_run(testing::room_loop_scene(12));
  SlamConfig cfg;
  cfg.pipeline.refine_enabled = true;
  cfg.pipeline.refine_batch = 1;
  cfg.pipeline.refine_queue_capacity = 1;
  const PipelineResult p = run_pipeline(packets(run), cfg);
  CHECK(p.refinement.size() + p.dropped_batches == 12);
  CHECK(p.trajectory.size() == 12);
  CHECK(p.core_frame_drops == 0);
}

TEST_CASE("frame stream validation and failure handling") {
  const auto run = testing::render_run(testing::room_loop_scene(3));
  Pipeline pipe{SlamConfig{}};
  CHECK_THROWS_AS(pipe.push({1, 0.0, run.scans[0], {}}), Error);
  pipe.push({0, 0.0, run.scans[0], {}});
  CHECK_THROWS_AS(pipe.push({1, 0.0, run.scans[1], {}}), Error);  // timestamp not increasing
  pipe.push({1, 0.1, PointCloud{}, {}});                            // empty scan
  pipe.push({2, 0.2, run.scans[2], {}});
  const PipelineResult r = pipe.finish();
  CHECK(r.stats[1].degenerate);
  CHECK(!r.stats[2].degenerate);
  CHECK(r.trajectory.size() == 3);
  CHECK_THROWS_AS(pipe.finish(), Error);
}

TEST_CASE("custom initial guess provider") {
  const auto run = testing::render_run(testing::room_loop_scene(10));
  CoreWorkflow core(SlamConfig{}, std::make_unique<FixedGuess>(run.ground_truth[1].pose));
  FramePacket f0{0, 0.0, run.scans[0], {}}, f1{1, 0.1, run.scans[1], {}};
  core.process(f0);
  const FrameStats s = core.process(f1);
  CHECK(!s.degenerate);
  CHECK(pose_difference(f1.pose_estimate, run.ground_truth[1].pose).translation < 0.02);
}

TEST_CASE("timing report format") {
  std::vector<FrameStats> stats{{0, 1.0, 2.0, 3.0, 4.0, 10, 1, false},
                                {1, 0.5, 0.25, 0.125, 1.0626, 12, 2, false}};
  std::ostringstream out;
  write_frame_stats(stats, out);
  CHECK(out.str() ==
        "# seq t_preprocess_ms t_match_ms t_align_ms t_update_ms\n"
        "0 1.000 2.000 3.000 4.000\n"
        "1 0.500 0.250 0.125 1.063\n");
}
