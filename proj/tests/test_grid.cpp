#include "gpslam/error.hpp"
#include "gpslam/grid.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace gpslam;

namespace {

PointCloud plane_points(const Eigen::Vector3d& normal, const Point3& center, int n,
                        std::mt19937_64& rng, double half = 0.7) {
  const Eigen::Vector3d nn = normal.normalized();
  const Eigen::Vector3d u = nn.unitOrthogonal();
  const Eigen::Vector3d v = nn.cross(u);
  std::uniform_real_distribution<double> dist(-half, half);
  PointCloud out;
  for (int i = 0; i < n; ++i) out.push_back(center + dist(rng) * u + dist(rng) * v);
  return out;
}

}  // namespace

TEST_CASE("grid configuration") {
  GridConfig cfg;
  CHECK(cfg.lattice_size() == 6);
  CHECK(cfg.tests_per_face() == 36);
  cfg.test_interval = 0.4;  // 1.5 / 0.4 is not an integer
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.test_interval = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("cell indexing uses floor and half-open intervals") {
  CHECK(cell_of({0.1, 0.1, 0.1}, 1.5) == CellIndex{0, 0, 0});
  CHECK(cell_of({-0.1, 0, 0}, 1.5) == CellIndex{-1, 0, 0});
  CHECK(cell_of({1.5, 0, 0}, 1.5) == CellIndex{1, 0, 0});
  CHECK(cell_of({-1.5, 0, 0}, 1.5) == CellIndex{-1, 0, 0});
  CHECK(cell_min_corner({-1, 2, 0}, 1.5) == Point3(-1.5, 3.0, 0.0));
  CHECK(CellIndex{1, 2, 3}.shifted(Direction::Y, -1) == CellIndex{1, 1, 3});
}

TEST_CASE("regionalize small example") {
  const PointCloud pts{{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}};
  const CellBuckets b = regionalize(pts, GridConfig{});
  REQUIRE(b.size() == 1);
  CHECK(b.begin()->first == CellIndex{0, 0, 0});
  CHECK(b.begin()->second.points.size() == 2);
  CHECK(regionalize(PointCloud{}, GridConfig{}).empty());
}

TEST_CASE("regionalize agrees with a brute-force recount") {
  std::mt19937_64 rng(21);
  PointCloud pts;
  for (int i = 0; i < 10000; ++i) pts.push_back(testing::random_point(rng, 0.0, 6.0 - 1e-12));
  const CellBuckets b = regionalize(pts, GridConfig{});
  CHECK(b.size() == 64);

  std::map<std::array<int, 3>, std::size_t> counts;
  for (const auto& p : pts)
    ++counts[{static_cast<int>(p.x() / 1.5), static_cast<int>(p.y() / 1.5),
              static_cast<int>(p.z() / 1.5)}];
  std::size_t total = 0;
  for (const auto& [idx, bucket] : b) {
    CHECK(bucket.points.size() == counts[{idx.x, idx.y, idx.z}]);
    total += bucket.points.size();
    for (const auto& p : bucket.points) CHECK(cell_of(p, 1.5) == idx);
  }
  CHECK(total == pts.size());
}

TEST_CASE("direction selection") {
  std::mt19937_64 rng(22);
  const GridConfig cfg;

  SUBCASE("wall perpendicular to x keeps only X") {
    const PointCloud wall = plane_points({1, 0, 0}, {2.0, 0.75, 0.75}, 50, rng);
    const DirectionSet s = select_directions(wall, cfg);
    CHECK(s.size() == 1);
    CHECK(s.contains(Direction::X));
  }
  SUBCASE("tilted plane keeps all directions") {
    const PointCloud tilted = plane_points({1, 1, 1}, {0.75, 0.75, 0.75}, 50, rng);
    CHECK(select_directions(tilted, cfg) == DirectionSet::all());
  }
  SUBCASE("too few points skip the analysis") {
    const PointCloud two{{0, 0, 0}, {1, 0, 0}};
    CHECK(select_directions(two, cfg) == DirectionSet::all());
  }
  SUBCASE("coincident points keep all directions") {
    const PointCloud same(10, Point3(0.3, 0.3, 0.3));
    CHECK(select_directions(same, cfg) == DirectionSet::all());
  }
  SUBCASE("volumetric scatter is not planar") {
    PointCloud blob;
    for (int i = 0; i < 200; ++i) blob.push_back(testing::random_point(rng, 0, 1.5));
    CHECK(select_directions(blob, cfg) == DirectionSet::all());
  }
  SUBCASE("invariant under permutation and translation") {
    PointCloud wall = plane_points({0.2, 0.0, 1.0}, {0.7, 0.7, 0.7}, 60, rng);
    const DirectionSet ref = select_directions(wall, cfg);
    for (int k = 0; k < 20; ++k) {
      std::shuffle(wall.begin(), wall.end(), rng);
      CHECK(select_directions(wall, cfg) == ref);
      PointCloud moved = wall;
      const Point3 t = testing::random_point(rng, -20, 20);
      for (auto& p : moved) p += t;
      CHECK(select_directions(moved, cfg) == ref);
    }
  }
}

TEST_CASE("test lattice geometry") {
  const GridConfig cfg;
  const TestLattice lat({1, -1, 2}, Direction::Z, cfg);
  CHECK(lat.count() == 36);
  CHECK(lat.location(0).isApprox(Point2(1.5 + 0.125, -1.5 + 0.125)));
  CHECK(lat.location(1, 0).isApprox(Point2(1.5 + 0.375, -1.5 + 0.125)));
  CHECK(lat.location(7) == lat.location(1, 1));
  for (LatticeId id = 0; id < lat.count(); ++id) CHECK(lat.subgrid_of(lat.location(id)) == id);
  // Out-of-cell coordinates clamp to the border sub-grids.
  CHECK(lat.subgrid_of({-100.0, -100.0}) == 0);
  CHECK(lat.subgrid_of({100.0, 100.0}) == 35);

  SUBCASE("neighbors along the direction share the planar lattice") {
    for (Direction d : kAllDirections) {
      const CellIndex c{3, -2, 5};
      const TestLattice a(c, d, cfg), b(c.shifted(d, 1), d, cfg);
      for (LatticeId id = 0; id < a.count(); ++id) CHECK(a.location(id) == b.location(id));
    }
  }
}

TEST_CASE("principled down-sampling") {
  const GridConfig cfg;
  const CellIndex cell{0, 0, 0};
  const TestLattice lat(cell, Direction::Z, cfg);

  SUBCASE("one point per sub-grid passes through") {
    PointCloud pts;
    for (LatticeId id = 0; id < lat.count(); ++id) {
      const Point2 l = lat.location(id);
      pts.push_back({l.x() + 0.01, l.y() - 0.02, 0.3 + 0.01 * id});
    }
    CHECK(principled_downsample(pts, lat) == pts);
  }
  SUBCASE("closest point to the test location wins") {
    const Point2 l = lat.location(8);
    const PointCloud pts{{l.x() + 0.05, l.y(), 0.4}, {l.x() + 0.01, l.y(), 0.9}};
    const PointCloud out = principled_downsample(pts, lat);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == pts[1]);
  }
  SUBCASE("matches brute force and is idempotent") {
    std::mt19937_64 rng(23);
    for (Direction d : kAllDirections) {
      PointCloud pts;
      for (int i = 0; i < 500; ++i) pts.push_back(testing::random_point(rng, 0.0, 1.5));
      const TestLattice lat_d(cell, d, cfg);
      const PointCloud out = principled_downsample(pts, lat_d);
      CHECK(out == testing::brute_force_downsample(pts, cell, d, cfg));
      CHECK(static_cast<int>(out.size()) <= cfg.tests_per_face());
      CHECK(principled_downsample(out, lat_d) == out);
    }
  }
}
