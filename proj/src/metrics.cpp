#include "gpslam/metrics.hpp"

#include "gpslam/error.hpp"
#include "gpslam/grid.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace gpslam {

namespace {

// Buckets point indices on a cubic grid for radius and nearest-point queries.
class PointHash {
 public:
  PointHash(std::span<const Point3> points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[cell_of(points[i], cell_)].push_back(i);
  }

  template <typename Fn>
  void for_each_in_shell(const CellIndex& c, int k, Fn&& fn) const {
    for (int dx = -k; dx <= k; ++dx)
      for (int dy = -k; dy <= k; ++dy)
        for (int dz = -k; dz <= k; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != k) continue;
          const auto it = buckets_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == buckets_.end()) continue;
          for (std::size_t i : it->second) fn(i);
        }
  }

  template <typename Fn>
  void for_each_within(const Point3& q, double radius, Fn&& fn) const {
    const CellIndex c = cell_of(q, cell_);
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const double r2 = radius * radius;
    for (int k = 0; k <= reach; ++k)
      for_each_in_shell(c, k, [&](std::size_t i) {
        if ((points_[i] - q).squaredNorm() <= r2) fn(i);
      });
  }

  double nearest_distance(const Point3& q, double max_distance) const {
    const CellIndex c = cell_of(q, cell_);
    const int reach = static_cast<int>(std::ceil(max_distance / cell_)) + 1;
    double best2 = max_distance * max_distance;
    for (int k = 0; k <= reach; ++k) {
      for_each_in_shell(c, k, [&](std::size_t i) {
        best2 = std::min(best2, (points_[i] - q).squaredNorm());
      });
      // Everything beyond shell k is at least k cells away.
      if (k * cell_ >= std::sqrt(best2)) break;
    }
    return std::sqrt(best2);
  }

 private:
  std::span<const Point3> points_;
  double cell_;
  std::unordered_map<CellIndex, std::vector<std::size_t>, CellIndexHash> buckets_;
};

}  // namespace

double mean_map_entropy(std::span<const Point3> cloud, double radius, int min_neighbors) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "MME radius must be positive");
  const PointHash hash(cloud, radius);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;

  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& q : cloud) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
    std::size_t n = 0;
    // Shift by q for numerical stability of the one-pass covariance.
    hash.for_each_within(q, radius, [&](std::size_t i) {
      const Eigen::Vector3d d = cloud[i] - q;
      mean += d;
      second.noalias() += d * d.transpose();
      ++n;
    });
    if (static_cast<int>(n) < min_neighbors) continue;
    mean /= static_cast<double>(n);
    const Eigen::Matrix3d cov = second / static_cast<double>(n) - mean * mean.transpose();
    const double det = (two_pi_e * cov).determinant();
    if (!(det > 0.0)) continue;
    sum += 0.5 * std::log(det);
    ++used;
  }
  if (used == 0)
    throw Error(ErrorCode::UndefinedResult, "mean map entropy: no point has enough neighbours");
  return sum / static_cast<double>(used);
}

Pose rigid_align(std::span<const Point3> from, std::span<const Point3> to) {
  if (from.size() != to.size() || from.empty())
    throw Error(ErrorCode::InvalidArgument, "rigid_align: point sets must match and be nonempty");
  Eigen::Vector3d mf = Eigen::Vector3d::Zero();
  Eigen::Vector3d mt = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    mf += from[i];
    mt += to[i];
  }
  mf /= static_cast<double>(from.size());
  mt /= static_cast<double>(to.size());
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < from.size(); ++i)
    cross.noalias() += (to[i] - mt) * (from[i] - mf).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * s * svd.matrixV().transpose();
  return {r, mt - r * mf};
}

TrajectoryErrors trajectory_error(std::span<const TimedPose> estimated,
                                  std::span<const TimedPose> ground_truth,
                                  double time_tolerance) {
  PointCloud est;
  PointCloud gt;
  for (const auto& e : estimated) {
    const auto it = std::min_element(ground_truth.begin(), ground_truth.end(),
                                     [&](const TimedPose& a, const TimedPose& b) {
                                       return std::abs(a.timestamp - e.timestamp) <
                                              std::abs(b.timestamp - e.timestamp);
                                     });
    if (it == ground_truth.end() || std::abs(it->timestamp - e.timestamp) > time_tolerance)
      continue;
    est.push_back(e.pose.translation());
    gt.push_back(it->pose.translation());
  }
  if (est.size() < 3)
    throw Error(ErrorCode::UndefinedResult, "trajectory_error: fewer than 3 associated poses");

  TrajectoryErrors out;
  out.associated = est.size();
  out.alignment = rigid_align(est, gt);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Eigen::Vector3d d = out.alignment * est[i] - gt[i];
    out.avg_translation_error += d.norm();
    out.avg_xy_error += d.head<2>().norm();
  }
  out.avg_translation_error /= static_cast<double>(est.size());
  out.avg_xy_error /= static_cast<double>(est.size());
  const Eigen::Vector3d last = out.alignment * est.back() - gt.back();
  out.final_elevation_error = std::abs(last.z());
  out.final_translation_error = last.norm();
  return out;
}

double closest_point_rmse(std::span<const Point3> source, std::span<const Point3> target,
                          const Pose& source_pose, double max_distance) {
  if (source.empty() || target.empty())
    throw Error(ErrorCode::InvalidArgument, "closest_point_rmse: empty cloud");
  const PointHash hash(target, std::min(max_distance, 0.25));
  double sum = 0.0;
  for (const auto& p : source) {
    const double d = hash.nearest_distance(source_pose * p, max_distance);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(source.size()));
}

}  // namespace gpslam
