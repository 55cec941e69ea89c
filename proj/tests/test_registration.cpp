#include "gpslam/error.hpp"
#include "gpslam/metrics.hpp"
#include "gpslam/registration.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gpslam;
using testing::kDeg;

namespace {

Layer flat_layer(const CellIndex& cell, Direction d, double value, double variance) {
  const TestLattice lat(cell, d, GridConfig{});
  Layer layer;
  layer.direction = d;
  for (LatticeId id = 0; id < lat.count(); ++id)
    layer.samples.push_back({d, id, lat.location(id), value, variance});
  return layer;
}

// Correspondences observing known geometry through pose `truth`.
std::vector<Correspondence> synthetic_correspondences(const Pose& truth, std::mt19937_64& rng,
                                                      int n) {
  std::vector<Correspondence> out;
  for (int i = 0; i < n; ++i) {
    Correspondence c;
    c.direction = kAllDirections[static_cast<std::size_t>(i % 3)];
    c.p_point = testing::random_point(rng, -5, 5);
    c.p_mean = coord(c.p_point, c.direction);
    c.q_mean = coord(truth * c.p_point, c.direction);
    c.p_var = 0.004;
    c.q_var = 0.006;
    out.push_back(c);
  }
  return out;
}

PointCloud room_scan(std::size_t index = 0) {
  const SceneSpec scene = testing::room_loop_scene(8);
  return synth_scan(scene, index);
}

}  // namespace

TEST_CASE("matching rules") {
  const CellIndex c0{0, 0, 0};
  MatchConfig cfg;

  SUBCASE("a map matched against itself pairs every sample with itself") {
    GpMap map(GridConfig{}, KernelConfig{});
    map.insert_layer(c0, flat_layer(c0, Direction::Z, 0.7, 0.01));
    map.insert_layer(c0, flat_layer(c0, Direction::X, 0.2, 0.02));
    const auto corrs = match(map, map, cfg);
    CHECK(corrs.size() == 72);
    for (const auto& c : corrs) {
      CHECK(c.p_point == c.q_point);
      CHECK(alignment_residual(c, Pose::identity()) == 0.0);
    }
  }
  SUBCASE("uncertain samples are excluded") {
    GpMap cur(GridConfig{}, KernelConfig{}), ref(GridConfig{}, KernelConfig{});
    Layer l = flat_layer(c0, Direction::Z, 0.5, 0.01);
    l.samples[3].variance = 2 * cfg.sigma2_thr;
    cur.insert_layer(c0, l);
    Layer r = flat_layer(c0, Direction::Z, 0.5, 0.01);
    r.samples[4].variance = 2 * cfg.sigma2_thr;
    ref.insert_layer(c0, r);
    const auto corrs = match(cur, ref, cfg);
    CHECK(corrs.size() == 34);
  }
  SUBCASE("neighbor cell along the direction is searched") {
    GpMap cur(GridConfig{}, KernelConfig{}), ref(GridConfig{}, KernelConfig{});
    cur.insert_layer(c0, flat_layer(c0, Direction::Z, 1.45, 0.01));
    const CellIndex above = c0.shifted(Direction::Z, 1);
    ref.insert_layer(above, flat_layer(above, Direction::Z, 1.55, 0.01));
    const auto corrs = match(cur, ref, cfg);
    REQUIRE(corrs.size() == 36);
    CHECK(corrs[0].q_mean == 1.55);
    CHECK(planar(corrs[0].p_point, Direction::Z) == planar(corrs[0].q_point, Direction::Z));
  }
  SUBCASE("closest candidate wins") {
    GpMap cur(GridConfig{}, KernelConfig{}), ref(GridConfig{}, KernelConfig{});
    cur.insert_layer(c0, flat_layer(c0, Direction::Z, 1.4, 0.01));
    ref.insert_layer(c0, flat_layer(c0, Direction::Z, 0.2, 0.01));
    const CellIndex above = c0.shifted(Direction::Z, 1);
    ref.insert_layer(above, flat_layer(above, Direction::Z, 1.6, 0.01));
    for (const auto& c : match(cur, ref, cfg)) CHECK(c.q_mean == 1.6);
  }
  SUBCASE("other directions and lateral neighbors do not match") {
    GpMap cur(GridConfig{}, KernelConfig{}), ref(GridConfig{}, KernelConfig{});
    cur.insert_layer(c0, flat_layer(c0, Direction::Z, 0.5, 0.01));
    ref.insert_layer(c0, flat_layer(c0, Direction::X, 0.5, 0.01));
    const CellIndex side = c0.shifted(Direction::X, 1);
    ref.insert_layer(side, flat_layer(side, Direction::Z, 0.5, 0.01));
    CHECK_THROWS_AS(match(cur, ref, cfg), Error);
  }
}

TEST_CASE("analytic Jacobian matches finite differences") {
  std::mt19937_64 rng(51);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = testing::random_pose(rng, 5.0);
    Correspondence c;
    c.direction = kAllDirections[static_cast<std::size_t>(trial % 3)];
    c.p_point = testing::random_point(rng, -10, 10);
    c.q_mean = 0.3;
    const auto analytic = alignment_jacobian(c, pose);
    Eigen::Matrix<double, 1, 6> numeric;
    for (int k = 0; k < 6; ++k) {
      Vector6d d = Vector6d::Zero();
      d[k] = h;
      numeric[k] = (alignment_residual(c, exp_perturbation(d) * pose) -
                    alignment_residual(c, exp_perturbation(-d) * pose)) /
                   (2 * h);
    }
    CHECK((analytic - numeric).norm() < 1e-5 * std::max(1.0, numeric.norm()));
  }
}

TEST_CASE("alignment recovers a known pose") {
  std::mt19937_64 rng(52);
  MatchConfig cfg;
  cfg.max_inner_iters = 100;
  for (int trial = 0; trial < 20; ++trial) {
    const Pose truth = Pose::from_rpy(0.1 * (trial % 3), -0.05, 0.3, {0.5, -0.2, 0.1 * trial});
    const auto corrs = synthetic_correspondences(truth, rng, 300);
    const AlignResult r = align(corrs, Pose::identity(), cfg);
    CHECK(r.converged);
    const PoseDelta e = pose_difference(r.pose, truth);
    CHECK(e.translation < 1e-6);
    CHECK(e.rotation < 1e-6);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i)
      CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
  }
}

TEST_CASE("alignment at the optimum keeps the initial pose") {
  std::mt19937_64 rng(53);
  const Pose truth = Pose::from_rpy(0.0, 0.0, 0.2, {1, 2, 3});
  const auto corrs = synthetic_correspondences(truth, rng, 60);
  const AlignResult r = align(corrs, truth, MatchConfig{});
  CHECK(r.converged);
  CHECK(pose_difference(r.pose, truth).translation == 0.0);
  CHECK(pose_difference(r.pose, truth).rotation == 0.0);
}

TEST_CASE("rank-deficient problems are reported") {
  std::mt19937_64 rng(54);
  std::vector<Correspondence> floor;
  for (int i = 0; i < 100; ++i) {
    Correspondence c;
    c.direction = Direction::Z;
    c.p_point = testing::random_point(rng, -5, 5);
    c.p_point.z() = 0.0;
    c.q_mean = 0.0;
    c.p_var = c.q_var = 0.01;
    floor.push_back(c);
  }
  try {
    align(floor, Pose::identity(), MatchConfig{});
    FAIL("expected a degenerate-geometry error");
  } catch (const DegenerateGeometryError& e) {
    auto names = e.unobservable();
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"tx", "ty", "yaw"});
  }
  CHECK_THROWS_AS(align(std::span(floor).first(3), Pose::identity(), MatchConfig{}),
                  DegenerateGeometryError);

  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Identity();
  CHECK(unobservable_parameters(h, 1e-7).empty());
  h(4, 4) = 0.0;
  CHECK(unobservable_parameters(h, 1e-7) == std::vector<std::string>{"ty"});
}

TEST_CASE("single floor scene is degenerate end to end") {
  const SceneSpec scene = testing::floor_only_scene();
  const PointCloud scan = synth_scan(scene, 0);
  REQUIRE(scan.size() > 1000);
  const GpMap map = reconstruct_cloud(transform(scene.sensor_path[0].pose, scan), GridConfig{},
                                      KernelConfig{});
  try {
    register_scan(scan, map, Pose::from_translation({0.3, 0.2, 1.5}), MatchConfig{});
    FAIL("expected a degenerate-geometry error");
  } catch (const DegenerateGeometryError& e) {
    const auto& n = e.unobservable();
    for (const char* p : {"tx", "ty", "yaw"})
      CHECK(std::find(n.begin(), n.end(), p) != n.end());
  }
}

TEST_CASE("self registration is a fixed point") {
  const PointCloud scan = room_scan();
  const Pose truth = Pose::from_rpy(0.0, 0.0, 0.4, {0.3, -0.2, 1.2});
  const GpMap map = reconstruct_cloud(transform(truth, scan), GridConfig{}, KernelConfig{});
  const RegistrationResult r = register_scan(scan, map, truth, MatchConfig{});
  CHECK(r.converged);
  CHECK(pose_difference(r.pose, truth).translation < 1e-6);
  CHECK(pose_difference(r.pose, truth).rotation < 1e-6);
  CHECK(r.correspondences > 500);
}

TEST_CASE("registration recovers a perturbed scan") {
  const PointCloud scan = room_scan();
  const GpMap map = reconstruct_cloud(scan, GridConfig{}, KernelConfig{});
  const Pose offset = Pose::from_rpy(0.0, 0.0, 3 * kDeg, {0.4, -0.3, 0.0});
  MatchConfig cfg;
  cfg.max_outer_iters = 10;
  const RegistrationResult r = register_scan(transform(offset, scan), map, Pose::identity(), cfg);
  const PoseDelta e = pose_difference(r.pose, offset.inverse());
  CHECK(e.translation < 0.02);
  CHECK(e.rotation < 0.2 * kDeg);
  CHECK(r.pose_trace.size() == static_cast<std::size_t>(r.outer_iterations));
  CHECK(closest_point_rmse(transform(offset, scan), scan, r.pose) < 0.02);
}

TEST_CASE("registration is equivariant under quarter turns") {
  const PointCloud scan = room_scan(3);
  const SceneSpec scene = testing::room_loop_scene(8);
  const PointCloud world = transform(scene.sensor_path[2].pose, synth_scan(scene, 2));
  const Pose initial = scene.sensor_path[3].pose * Pose::from_translation({0.1, 0.05, 0.0});
  MatchConfig cfg;
  const RegistrationResult a =
      register_scan(scan, reconstruct_cloud(world, GridConfig{}, KernelConfig{}), initial, cfg);

  const Pose rot = Pose::from_rpy(0.0, 0.0, testing::kPi / 2, Eigen::Vector3d::Zero());
  const RegistrationResult b =
      register_scan(transform(rot, scan),
                    reconstruct_cloud(transform(rot, world), GridConfig{}, KernelConfig{}),
                    rot * initial * rot.inverse(), cfg);
  const PoseDelta e = pose_difference(b.pose, rot * a.pose * rot.inverse());
  CHECK(e.translation < 1e-6);
  CHECK(e.rotation < 1e-6);
}

TEST_CASE("registration argument checks") {
  const GpMap empty(GridConfig{}, KernelConfig{});
  const PointCloud pts{{1, 2, 3}};
  CHECK_THROWS_AS(register_scan(pts, empty, Pose::identity(), MatchConfig{}), Error);
  MatchConfig bad;
  bad.sigma2_thr = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
}
