#pragma once

#include "gpslam/geometry.hpp"
#include "gpslam/scene.hpp"

#include <span>
#include <vector>

namespace gpslam {

// Mean over points of 1/2 ln det(2 pi e Sigma), Sigma being the sample
// covariance of the point's neighbourhood within `radius` (point included).
// Points with fewer than min_neighbors neighbours, or a singular
// neighbourhood, are skipped. Throws UndefinedResult if none qualify.
double mean_map_entropy(std::span<const Point3> cloud, double radius, int min_neighbors = 5);

struct TrajectoryErrors {
  double avg_translation_error = 0.0;  // m, after rigid alignment
  double avg_xy_error = 0.0;           // m
  double final_elevation_error = 0.0;  // m, |dz| of the last associated pose
  double final_translation_error = 0.0;
  std::size_t associated = 0;
  Pose alignment;  // maps estimated positions onto ground truth
};

// Associates poses by nearest timestamp (within tolerance), rigidly aligns
// estimated positions to ground truth in closed form and reports errors.
// Throws UndefinedResult with fewer than 3 associated poses.
TrajectoryErrors trajectory_error(std::span<const TimedPose> estimated,
                                  std::span<const TimedPose> ground_truth,
                                  double time_tolerance = 0.02);

// Least-squares rigid transform (no scale) taking `from` onto `to`.
Pose rigid_align(std::span<const Point3> from, std::span<const Point3> to);

// RMSE of distances from every transformed source point to its closest
// target point. Hash-grid search bounded by max_distance; points without a
// target within it count with max_distance.
double closest_point_rmse(std::span<const Point3> source, std::span<const Point3> target,
                          const Pose& source_pose, double max_distance = 2.0);

struct EvalReport {
  double mme = 0.0;
  TrajectoryErrors trajectory;
  std::vector<double> per_frame_ms;
};

}  // namespace gpslam
