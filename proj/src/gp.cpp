#include "gpslam/gp.hpp"

#include "gpslam/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gpslam {

void KernelConfig::validate() const {
  if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa must be positive");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  if (jitter < 0.0) throw Error(ErrorCode::InvalidArgument, "jitter must be non-negative");
}

double kernel(const Point2& l1, const Point2& l2, const KernelConfig& cfg) {
  return std::exp(-cfg.kappa * (l1 - l2).norm());
}

GpPrediction gp_predict(std::span<const Point2> train_locations,
                        std::span<const double> train_values,
                        std::span<const Point2> test_locations, const KernelConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(train_locations.size());
  const auto m = static_cast<Eigen::Index>(test_locations.size());
  if (n == 0 || train_values.size() != train_locations.size())
    throw Error(ErrorCode::InvalidArgument, "gp_predict needs matching, nonempty training data");

  Eigen::MatrixXd system(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    system(i, i) = 1.0 + cfg.sigma2() + cfg.jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel(train_locations[i], train_locations[j], cfg);
      system(i, j) = k;
      system(j, i) = k;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::ReconstructionFailed, "GP system is not positive definite");

  Eigen::MatrixXd cross(n, m);  // k(l, l*)
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      cross(i, j) = kernel(train_locations[i], test_locations[j], cfg);

  const Eigen::Map<const Eigen::VectorXd> f(train_values.data(), n);
  const Eigen::VectorXd alpha = llt.solve(f);
  // v = L^-1 k_l*, so k_l*^T (sigma^2 I + K)^-1 k_l* = |v|^2.
  const Eigen::MatrixXd v = llt.matrixL().solve(cross);

  GpPrediction out;
  out.mean = cross.transpose() * alpha;
  out.variance = (1.0 - v.colwise().squaredNorm().array()).matrix().transpose();
  if (cfg.variance_includes_noise) out.variance.array() += cfg.sigma2();
  // Cancellation can leave tiny negatives when a test location coincides with
  // training data and sigma^2 is excluded.
  out.variance = out.variance.cwiseMax(1e-15);
  return out;
}

const Sample* Layer::find(LatticeId id) const {
  const auto it = std::lower_bound(samples.begin(), samples.end(), id,
                                   [](const Sample& s, LatticeId v) { return s.lattice_id < v; });
  return (it != samples.end() && it->lattice_id == id) ? &*it : nullptr;
}

Sample* Layer::find(LatticeId id) {
  return const_cast<Sample*>(static_cast<const Layer&>(*this).find(id));
}

void Layer::upsert(const Sample& s) {
  const auto it = std::lower_bound(samples.begin(), samples.end(), s.lattice_id,
                                   [](const Sample& a, LatticeId v) { return a.lattice_id < v; });
  if (it != samples.end() && it->lattice_id == s.lattice_id)
    *it = s;
  else
    samples.insert(it, s);
}

CellReconstruction reconstruct_cell(const CellIndex& index, std::span<const Point3> points,
                                    DirectionSet directions, const GridConfig& grid,
                                    const KernelConfig& kernel_cfg) {
  CellReconstruction out;
  for (Direction d : kAllDirections) {
    if (!directions.contains(d)) continue;
    const TestLattice lattice(index, d, grid);
    const PointCloud training = principled_downsample(points, lattice);
    if (static_cast<int>(training.size()) < grid.min_points) continue;

    std::vector<Point2> locations;
    std::vector<double> values;
    locations.reserve(training.size());
    values.reserve(training.size());
    for (const auto& p : training) {
      locations.push_back(planar(p, d));
      values.push_back(coord(p, d));
    }
    const double offset =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    for (double& v : values) v -= offset;

    const std::vector<Point2> tests = lattice.locations();
    GpPrediction pred;
    try {
      pred = gp_predict(locations, values, tests, kernel_cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ReconstructionFailed) throw;
      continue;
    }
    out.largest_system = std::max(out.largest_system, static_cast<int>(training.size()));

    Layer layer;
    layer.direction = d;
    layer.samples.reserve(tests.size());
    for (std::size_t j = 0; j < tests.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      layer.samples.push_back({d, static_cast<LatticeId>(j), tests[j], pred.mean[jj] + offset,
                               pred.variance[jj]});
    }
    out.layers.push_back(std::move(layer));
  }
  if (out.layers.empty()) out.residue.assign(points.begin(), points.end());
  return out;
}

CellReconstruction reconstruct_cell(const CellIndex& index, std::span<const Point3> points,
                                    const GridConfig& grid, const KernelConfig& kernel_cfg) {
  return reconstruct_cell(index, points, select_directions(points, grid), grid, kernel_cfg);
}

}  // namespace gpslam
