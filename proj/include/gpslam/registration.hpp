#pragma once

#include "gpslam/geometry.hpp"
#include "gpslam/mapstore.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace gpslam {

struct MatchConfig {
  double sigma2_thr = 0.05;  // m^2; samples above are not matched
  int max_outer_iters = 5;
  int max_inner_iters = 20;
  double pose_epsilon_trans = 1e-3;  // m
  double pose_epsilon_rot = 1e-3;    // rad
  // Huber threshold on the whitened residual; 0 disables robust weighting.
  double huber_delta = 0.1;
  // Smallest admissible eigenvalue ratio of the normal equations.
  double degeneracy_ratio = 1e-7;

  void validate() const;
};

struct Correspondence {
  Direction direction = Direction::Z;
  double p_mean = 0.0;
  double q_mean = 0.0;
  double p_var = 1.0;
  double q_var = 1.0;
  Point3 p_point = Point3::Zero();  // current frame sample, world frame
  Point3 q_point = Point3::Zero();  // reference map sample
};

// Pairs every qualifying sample of the current frame with the closest
// reference sample that has the same direction and lattice location, in the
// same cell or in one of the two cells adjacent along the direction. Both
// variances must be <= sigma2_thr. Throws NoCorrespondences when nothing pairs.
std::vector<Correspondence> match(const GpMap& current, const GpMap& reference,
                                  const MatchConfig& cfg);

// Left perturbation exp(delta) * T with delta = (omega, v): the rotation
// exp(omega) is applied to the whole transform and v is added afterwards.
Pose exp_perturbation(const Vector6d& delta);

// Residual coord(T p, d) - q and its derivative with respect to a left
// perturbation of T.
double alignment_residual(const Correspondence& c, const Pose& pose);
Eigen::Matrix<double, 1, 6> alignment_jacobian(const Correspondence& c, const Pose& pose);

struct AlignResult {
  Pose pose;
  bool converged = false;
  int iterations = 0;
  // Weighted objective at the initial pose and after every accepted step.
  std::vector<double> cost_history;
};

// Minimizes sum_i r_i^2 / (p_var_i + q_var_i) over the pose with damped
// Gauss-Newton. Throws DegenerateGeometryError with the unobservable
// parameters when the problem is under-constrained.
AlignResult align(std::span<const Correspondence> correspondences, const Pose& initial,
                  const MatchConfig& cfg);

// Null-space analysis of 6x6 normal equations. Empty when well conditioned.
std::vector<std::string> unobservable_parameters(const Eigen::Matrix<double, 6, 6>& hessian,
                                                 double ratio);

struct RegistrationResult {
  Pose pose;
  bool converged = false;
  int outer_iterations = 0;
  std::size_t correspondences = 0;
  std::vector<Pose> pose_trace;  // pose after every outer iteration
  GpMap reconstruction;          // current frame reconstructed at `pose`
  double t_preprocess_ms = 0.0;
  double t_match_ms = 0.0;
  double t_align_ms = 0.0;
};

// Scan-to-map registration. Each outer iteration transforms the scan with
// the current estimate, reconstructs it on the map's grid, matches against
// the map and aligns. Stops once the update falls under pose_epsilon.
RegistrationResult register_scan(std::span<const Point3> scan, const GpMap& map,
                                 const Pose& initial, const MatchConfig& cfg);

}  // namespace gpslam
