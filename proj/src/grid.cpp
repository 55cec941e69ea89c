#include "gpslam/grid.hpp"

#include "gpslam/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpslam {

int GridConfig::lattice_size() const {
  return static_cast<int>(std::llround(cell_side / test_interval));
}

void GridConfig::validate() const {
  if (!(cell_side > 0.0) || !(test_interval > 0.0))
    throw Error(ErrorCode::InvalidArgument, "cell_side_a and test_interval_r must be positive");
  const double ratio = cell_side / test_interval;
  if (std::abs(ratio - std::round(ratio)) * test_interval > 1e-9 || std::round(ratio) < 1.0)
    throw Error(ErrorCode::InvalidArgument,
                "cell_side_a must be an integer multiple of test_interval_r");
  if (min_points < 1) throw Error(ErrorCode::InvalidArgument, "min_points must be >= 1");
  if (planarity_ratio < 0.0 || normal_threshold < 0.0 || normal_threshold > 1.0)
    throw Error(ErrorCode::InvalidArgument, "invalid PCA thresholds");
}

CellIndex CellIndex::shifted(Direction d, int step) const {
  CellIndex out = *this;
  switch (d) {
    case Direction::X: out.x += step; break;
    case Direction::Y: out.y += step; break;
    case Direction::Z: out.z += step; break;
  }
  return out;
}

CellIndex cell_of(const Point3& p, double cell_side) {
  return {static_cast<std::int32_t>(std::floor(p.x() / cell_side)),
          static_cast<std::int32_t>(std::floor(p.y() / cell_side)),
          static_cast<std::int32_t>(std::floor(p.z() / cell_side))};
}

Point3 cell_min_corner(const CellIndex& c, double cell_side) {
  return {c.x * cell_side, c.y * cell_side, c.z * cell_side};
}

CellBuckets regionalize(std::span<const Point3> cloud, const GridConfig& cfg) {
  CellBuckets buckets;
  for (const auto& p : cloud) buckets[cell_of(p, cfg.cell_side)].points.push_back(p);
  return buckets;
}

DirectionSet select_directions(std::span<const Point3> points, const GridConfig& cfg) {
  if (points.size() < 3) return DirectionSet::all();

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.info() != Eigen::Success) return DirectionSet::all();
  const Eigen::Vector3d& ev = eig.eigenvalues();  // ascending
  // Coincident or collinear points: no plane to speak of.
  const double scale = std::max(ev[2], std::numeric_limits<double>::min());
  if (ev[2] <= 0.0 || ev[1] <= 1e-12 * scale) return DirectionSet::all();

  DirectionSet out = DirectionSet::all();
  if (ev[0] > cfg.planarity_ratio * ev[1]) return out;

  const Eigen::Vector3d normal = eig.eigenvectors().col(0);
  for (Direction d : kAllDirections) {
    if (std::abs(normal[axis(d)]) < cfg.normal_threshold) out.erase(d);
  }
  return out;
}

TestLattice::TestLattice(const CellIndex& cell, Direction direction, const GridConfig& cfg)
    : direction_(direction), n_(cfg.lattice_size()), r_(cfg.test_interval) {
  const auto uv = plane_axes(direction);
  origin_ = {cell[uv[0]] * cfg.cell_side, cell[uv[1]] * cfg.cell_side};
}

Point2 TestLattice::location(int i, int j) const {
  return {origin_.x() + (i + 0.5) * r_, origin_.y() + (j + 0.5) * r_};
}

Point2 TestLattice::location(LatticeId id) const { return location(id / n_, id % n_); }

LatticeId TestLattice::subgrid_of(const Point2& location) const {
  auto clamp_index = [this](double v) {
    const auto k = static_cast<long>(std::floor(v / r_));
    return static_cast<int>(std::clamp<long>(k, 0, n_ - 1));
  };
  return clamp_index(location.x() - origin_.x()) * n_ + clamp_index(location.y() - origin_.y());
}

std::vector<Point2> TestLattice::locations() const {
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (LatticeId id = 0; id < count(); ++id) out.push_back(location(id));
  return out;
}

PointCloud principled_downsample(std::span<const Point3> points, const TestLattice& lattice) {
  constexpr double kUnset = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(lattice.count());
  std::vector<double> best_dist(n, kUnset);
  std::vector<std::size_t> best_index(n, 0);

  for (std::size_t k = 0; k < points.size(); ++k) {
    const Point2 loc = planar(points[k], lattice.direction());
    const LatticeId id = lattice.subgrid_of(loc);
    const double d2 = (loc - lattice.location(id)).squaredNorm();
    const auto slot = static_cast<std::size_t>(id);
    if (d2 < best_dist[slot]) {
      best_dist[slot] = d2;
      best_index[slot] = k;
    }
  }

  PointCloud out;
  for (std::size_t slot = 0; slot < n; ++slot) {
    if (best_dist[slot] != kUnset) out.push_back(points[best_index[slot]]);
  }
  return out;
}

}  // namespace gpslam
