#include "gpslam/registration.hpp"

#include "gpslam/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

namespace gpslam {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

constexpr std::array<const char*, 6> kParameterNames = {"roll", "pitch", "yaw", "tx", "ty", "tz"};

double huber_weight(double whitened, double delta) {
  if (delta <= 0.0) return 1.0;
  const double a = std::abs(whitened);
  return a <= delta ? 1.0 : delta / a;
}

double huber_cost(double whitened, double delta) {
  if (delta <= 0.0) return whitened * whitened;
  const double a = std::abs(whitened);
  return a <= delta ? a * a : 2.0 * delta * a - delta * delta;
}

double objective(std::span<const Correspondence> corrs, const Pose& pose, double huber_delta) {
  double cost = 0.0;
  for (const auto& c : corrs) {
    const double whitened = alignment_residual(c, pose) / std::sqrt(c.p_var + c.q_var);
    cost += huber_cost(whitened, huber_delta);
  }
  return cost;
}

}  // namespace

void MatchConfig::validate() const {
  if (!(sigma2_thr > 0.0) || max_outer_iters < 1 || max_inner_iters < 1 ||
      !(pose_epsilon_trans > 0.0) || !(pose_epsilon_rot > 0.0) || huber_delta < 0.0)
    throw Error(ErrorCode::InvalidArgument, "invalid registration settings");
}

std::vector<Correspondence> match(const GpMap& current, const GpMap& reference,
                                  const MatchConfig& cfg) {
  std::vector<Correspondence> out;
  for (const CellIndex& index : current.sorted_indices()) {
    const MapCell& cell = current.cells().at(index);
    for (const auto& layer : cell.layers) {
      if (!layer) continue;
      const Direction d = layer->direction;
      // Only these neighbours share the planar lattice of `index` along d.
      const std::array<const Layer*, 3> candidates = {
          reference.query_samples(index, d),
          reference.query_samples(index.shifted(d, -1), d),
          reference.query_samples(index.shifted(d, +1), d)};
      for (const Sample& p : layer->samples) {
        if (p.variance > cfg.sigma2_thr) continue;
        const Point3 p_pos = p.position();
        const Sample* best = nullptr;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const Layer* ref : candidates) {
          if (!ref) continue;
          const Sample* q = ref->find(p.lattice_id);
          if (!q || q->variance > cfg.sigma2_thr) continue;
          const double dist = (q->position() - p_pos).squaredNorm();
          if (dist < best_dist) {
            best_dist = dist;
            best = q;
          }
        }
        if (!best) continue;
        out.push_back({d, p.mean, best->mean, p.variance, best->variance, p_pos,
                       best->position()});
      }
    }
  }
  if (out.empty()) throw Error(ErrorCode::NoCorrespondences, "no valid correspondences");
  return out;
}

Pose exp_perturbation(const Vector6d& delta) {
  const Eigen::Vector3d omega = delta.head<3>();
  const double angle = omega.norm();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (angle > 0.0) q = Eigen::AngleAxisd(angle, omega / angle);
  return {q, delta.tail<3>()};
}

double alignment_residual(const Correspondence& c, const Pose& pose) {
  return coord(pose * c.p_point, c.direction) - c.q_mean;
}

Eigen::Matrix<double, 1, 6> alignment_jacobian(const Correspondence& c, const Pose& pose) {
  const Point3 x = pose * c.p_point;
  const Eigen::Vector3d e = unit_vector(c.direction);
  Eigen::Matrix<double, 1, 6> j;
  j.head<3>() = x.cross(e).transpose();
  j.tail<3>() = e.transpose();
  return j;
}

std::vector<std::string> unobservable_parameters(const Eigen::Matrix<double, 6, 6>& hessian,
                                                 double ratio) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(hessian);
  const Vector6d& ev = eig.eigenvalues();
  const double limit = ratio * std::max(ev[5], 0.0);
  Eigen::Matrix<double, 6, 6> projector = Eigen::Matrix<double, 6, 6>::Zero();
  std::vector<int> null_columns;
  for (int k = 0; k < 6; ++k) {
    if (ev[k] <= limit) {
      projector += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose();
      null_columns.push_back(k);
    }
  }
  std::vector<std::string> names;
  if (null_columns.empty()) return names;
  for (int i = 0; i < 6; ++i)
    if (projector(i, i) > 0.5) names.emplace_back(kParameterNames[static_cast<std::size_t>(i)]);
  if (names.empty()) {
    // Null space mixes parameters evenly; report the dominant one per vector.
    for (int k : null_columns) {
      Eigen::Index arg = 0;
      eig.eigenvectors().col(k).cwiseAbs().maxCoeff(&arg);
      const std::string name = kParameterNames[static_cast<std::size_t>(arg)];
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  return names;
}

AlignResult align(std::span<const Correspondence> corrs, const Pose& initial,
                  const MatchConfig& cfg) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  static const std::vector<std::string> kAll(kParameterNames.begin(), kParameterNames.end());

  std::array<bool, 3> seen{};
  for (const auto& c : corrs) seen[static_cast<std::size_t>(axis(c.direction))] = true;
  const int n_dirs = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  if (corrs.size() < 6) {
    throw DegenerateGeometryError("alignment needs at least 6 correspondences, got " +
                                      std::to_string(corrs.size()),
                                  kAll);
  }

  auto build = [&](const Pose& pose, Mat6& h, Vector6d& g) {
    h.setZero();
    g.setZero();
    for (const auto& c : corrs) {
      const double inv_var = 1.0 / (c.p_var + c.q_var);
      const double r = alignment_residual(c, pose);
      const double w = inv_var * huber_weight(r * std::sqrt(inv_var), cfg.huber_delta);
      const Eigen::Matrix<double, 1, 6> j = alignment_jacobian(c, pose);
      h.noalias() += w * j.transpose() * j;
      g.noalias() += w * r * j.transpose();
    }
  };

  AlignResult out;
  out.pose = initial;
  double cost = objective(corrs, initial, cfg.huber_delta);
  out.cost_history.push_back(cost);

  Mat6 h;
  Vector6d g;
  build(initial, h, g);
  const auto missing = unobservable_parameters(h, cfg.degeneracy_ratio);
  if (!missing.empty() || n_dirs < 2) {
    std::string what = "degenerate geometry, unobservable:";
    for (const auto& m : missing) what += " " + m;
    throw DegenerateGeometryError(what, missing.empty() ? kAll : missing);
  }

  double lambda = 1e-6;
  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    out.iterations = it + 1;
    if (g.norm() <= 1e-14 * std::max(1.0, h.diagonal().maxCoeff())) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    Vector6d delta = Vector6d::Zero();
    while (lambda < 1e12) {
      Mat6 damped = h;
      damped.diagonal() += lambda * h.diagonal();
      delta = damped.ldlt().solve(-g);
      const Pose candidate = exp_perturbation(delta) * out.pose;
      const double new_cost = objective(corrs, candidate, cfg.huber_delta);
      if (new_cost < cost) {
        out.pose = candidate;
        cost = new_cost;
        out.cost_history.push_back(cost);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No step lowers the objective: we are at a minimum to working precision.
      out.converged = true;
      break;
    }
    if (delta.tail<3>().norm() < 1e-10 && delta.head<3>().norm() < 1e-10) {
      out.converged = true;
      break;
    }
    build(out.pose, h, g);
  }
  return out;
}

RegistrationResult register_scan(std::span<const Point3> scan, const GpMap& map,
                                 const Pose& initial, const MatchConfig& cfg) {
  if (scan.empty()) throw Error(ErrorCode::InvalidArgument, "register_scan: empty scan");
  if (map.empty()) throw Error(ErrorCode::InvalidArgument, "register_scan: empty map");

  RegistrationResult out;
  out.pose = initial;
  const PointCloud scan_cloud(scan.begin(), scan.end());
  bool reconstruction_current = false;

  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    auto t0 = Clock::now();
    const PointCloud world = transform(out.pose, scan_cloud);
    out.reconstruction = reconstruct_cloud(world, map.grid(), map.kernel(), map.config());
    out.t_preprocess_ms += elapsed_ms(t0);

    t0 = Clock::now();
    const std::vector<Correspondence> corrs = match(out.reconstruction, map, cfg);
    out.t_match_ms += elapsed_ms(t0);
    out.correspondences = corrs.size();

    t0 = Clock::now();
    const AlignResult step = align(corrs, Pose::identity(), cfg);
    out.t_align_ms += elapsed_ms(t0);

    out.pose = step.pose * out.pose;
    out.pose_trace.push_back(out.pose);
    out.outer_iterations = outer + 1;
    const double dt = step.pose.translation().norm();
    const double dr = step.pose.angle();
    reconstruction_current = dt == 0.0 && dr == 0.0;
    if (dt < cfg.pose_epsilon_trans && dr < cfg.pose_epsilon_rot) {
      out.converged = true;
      break;
    }
  }

  if (!reconstruction_current) {
    const auto t0 = Clock::now();
    out.reconstruction =
        reconstruct_cloud(transform(out.pose, scan_cloud), map.grid(), map.kernel(), map.config());
    out.t_preprocess_ms += elapsed_ms(t0);
  }
  return out;
}

}  // namespace gpslam
