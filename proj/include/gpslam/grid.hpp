#pragma once

#include "gpslam/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace gpslam {

struct GridConfig {
  double cell_side = 1.5;       // a, meters
  double test_interval = 0.25;  // r, meters
  int min_points = 5;           // n_min training points per direction
  double planarity_ratio = 0.1;
  double normal_threshold = 0.15;

  // Number of test locations along one edge of a cell face, a / r.
  int lattice_size() const;
  int tests_per_face() const { return lattice_size() * lattice_size(); }
  // Throws InvalidArgument unless a > 0, r > 0 and a is an integer multiple of r.
  void validate() const;
};

struct CellIndex {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  std::int32_t operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  CellIndex shifted(Direction d, int step) const;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
  std::size_t operator()(const CellIndex& k) const noexcept {
    return (static_cast<std::size_t>(static_cast<std::uint32_t>(k.x)) * 73856093ULL) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(k.y)) * 19349669ULL) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(k.z)) * 83492791ULL);
  }
};

// Half-open cells [k*a, (k+1)*a) on every axis.
CellIndex cell_of(const Point3& p, double cell_side);
Point3 cell_min_corner(const CellIndex& c, double cell_side);

class DirectionSet {
 public:
  DirectionSet() = default;
  static DirectionSet all() { return DirectionSet(0b111); }

  bool contains(Direction d) const { return (bits_ >> axis(d)) & 1U; }
  void insert(Direction d) { bits_ |= static_cast<std::uint8_t>(1U << axis(d)); }
  void erase(Direction d) { bits_ &= static_cast<std::uint8_t>(~(1U << axis(d))); }
  bool empty() const { return bits_ == 0; }
  int size() const { return ((bits_ >> 0) & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
  friend bool operator==(const DirectionSet&, const DirectionSet&) = default;

 private:
  explicit DirectionSet(std::uint8_t bits) : bits_(bits) {}
  std::uint8_t bits_ = 0;
};

struct CellBucket {
  PointCloud points;  // world frame, inside the cell bounds
  DirectionSet active_directions;
};

using CellBuckets = std::unordered_map<CellIndex, CellBucket, CellIndexHash>;

// Distributes every point of a world-frame cloud into its cell. Active
// directions are left empty; see select_directions().
CellBuckets regionalize(std::span<const Point3> cloud, const GridConfig& cfg);

// Keeps all three directions unless the points are planar (smallest
// covariance eigenvalue <= planarity_ratio * middle eigenvalue); for a planar
// bucket a direction is dropped when the surface normal has a component below
// normal_threshold along it. Fewer than three points, or a degenerate
// covariance, keep all three.
DirectionSet select_directions(std::span<const Point3> points, const GridConfig& cfg);

// Integer pair (i, j) addressing one test location of a cell face; stored
// as i * n + j where n = a / r.
using LatticeId = int;

// Test locations of one cell for one prediction direction. Location (i, j)
// sits at the sub-grid centre ((i + 1/2) r, (j + 1/2) r) from the cell's
// minimum corner, measured along plane_axes(direction). Cells adjacent along
// the direction share identical locations.
class TestLattice {
 public:
  TestLattice(const CellIndex& cell, Direction direction, const GridConfig& cfg);

  Direction direction() const { return direction_; }
  int size() const { return n_; }
  int count() const { return n_ * n_; }
  double interval() const { return r_; }

  Point2 location(LatticeId id) const;
  Point2 location(int i, int j) const;
  // Sub-grid containing a planar location, clamped onto the cell face.
  LatticeId subgrid_of(const Point2& location) const;
  std::vector<Point2> locations() const;

 private:
  Direction direction_;
  int n_;
  double r_;
  Point2 origin_;
};

// Modified 2D voxel filter: per lattice sub-grid keep only the point whose
// planar location is closest to the sub-grid's test location. Single pass
// over the input. Output is ordered by lattice id; ties keep the earlier point.
PointCloud principled_downsample(std::span<const Point3> points, const TestLattice& lattice);

}  // namespace gpslam
