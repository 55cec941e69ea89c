#include "gpslam/error.hpp"
#include "gpslam/geometry.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace gpslam;
using gpslam::testing::kPi;

namespace {

double pose_distance(const Pose& a, const Pose& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("coord projects onto the basis axis") {
  const Point3 p(1, 2, 3);
  CHECK(coord(p, Direction::X) == 1.0);
  CHECK(coord(p, Direction::Y) == 2.0);
  CHECK(coord(p, Direction::Z) == 3.0);
  CHECK(coord(Pose::identity() * p, Direction::Y) == coord(p, Direction::Y));
}

TEST_CASE("planar and lift are inverse") {
  const Point3 p(1.5, -2.0, 0.25);
  for (Direction d : kAllDirections) {
    CHECK(lift(planar(p, d), coord(p, d), d) == p);
  }
  CHECK(planar(p, Direction::X) == Point2(-2.0, 0.25));
  CHECK(planar(p, Direction::Y) == Point2(1.5, 0.25));
  CHECK(planar(p, Direction::Z) == Point2(1.5, -2.0));
}

TEST_CASE("direction names round trip") {
  for (Direction d : kAllDirections) CHECK(direction_from_char(to_string(d)[0]) == d);
  CHECK(direction_from_char('y') == Direction::Y);
  CHECK_THROWS_AS(direction_from_char('w'), Error);
}

TEST_CASE("transform basic cases") {
  CHECK(Pose::identity() * Point3(1, 2, 3) == Point3(1, 2, 3));
  CHECK(transform(Pose::from_translation({1, 0, 0}), Point3::Zero()) == Point3(1, 0, 0));
  const Pose rz = Pose::from_rpy(0, 0, kPi / 2, Eigen::Vector3d::Zero());
  CHECK((rz * Point3(1, 0, 0) - Point3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("compose and inverse identities") {
  std::mt19937_64 rng(11);
  const Pose b = testing::random_pose(rng);
  CHECK(pose_distance(compose(Pose::identity(), b), b) < 1e-15);
  CHECK(pose_distance(inverse(Pose::identity()), Pose::identity()) == 0.0);

  for (int i = 0; i < 1000; ++i) {
    const Pose t = testing::random_pose(rng);
    CHECK(pose_distance(compose(t, inverse(t)), Pose::identity()) < 1e-9);
  }
}

TEST_CASE("transform distributes over compose") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Pose a = testing::random_pose(rng), b = testing::random_pose(rng);
    const Point3 p = testing::random_point(rng, -5, 5);
    CHECK((transform(compose(a, b), p) - transform(a, transform(b, p))).norm() < 1e-9);
  }
}

TEST_CASE("rotation stays orthonormal over long composition chains") {
  std::mt19937_64 rng(13);
  const Pose step = testing::random_pose(rng, 0.1);
  Pose acc;
  for (int i = 0; i < 10000; ++i) acc = acc * step;
  const Eigen::Matrix3d r = acc.rotation_matrix();
  CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(r.determinant() - 1.0) < 1e-9);
}

TEST_CASE("rpy construction and accessors") {
  const Pose p = Pose::from_rpy(0.0, 0.0, 0.3, {1, 2, 3});
  CHECK(p.yaw() == doctest::Approx(0.3));
  CHECK(p.angle() == doctest::Approx(0.3));
  CHECK(p.translation() == Eigen::Vector3d(1, 2, 3));
  const Pose m(p.rotation_matrix(), p.translation());
  CHECK(pose_distance(m, p) < 1e-12);

  const PoseDelta d = pose_difference(p, Pose::from_rpy(0, 0, 0.5, {1, 2, 4}));
  CHECK(d.translation == doctest::Approx(1.0));
  CHECK(d.rotation == doctest::Approx(0.2));
}

TEST_CASE("cloud transform matches pointwise transform") {
  std::mt19937_64 rng(14);
  const Pose t = testing::random_pose(rng);
  PointCloud cloud;
  for (int i = 0; i < 20; ++i) cloud.push_back(testing::random_point(rng, -3, 3));
  const PointCloud out = transform(t, cloud);
  REQUIRE(out.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK((out[i] - t * cloud[i]).norm() < 1e-12);
}
