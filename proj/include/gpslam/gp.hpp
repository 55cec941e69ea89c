#pragma once

#include "gpslam/geometry.hpp"
#include "gpslam/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace gpslam {

struct KernelConfig {
  double kappa = 0.5;    // inverse length scale, 1/m
  double sigma = 0.03;   // observation noise std-dev, m
  double jitter = 1e-8;  // diagonal stabilizer, m^2
  // Add sigma^2 to the predictive variance (noisy test observation).
  bool variance_includes_noise = true;

  double sigma2() const { return sigma * sigma; }
  void validate() const;
};

// Exponential covariance exp(-kappa * |l1 - l2|).
double kernel(const Point2& l1, const Point2& l2, const KernelConfig& cfg);

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Zero-mean GP regression. Solves (sigma^2 I + K + jitter I) once with a
// Cholesky factorization and predicts at every test location. Throws
// ReconstructionFailed if the system is not positive definite.
GpPrediction gp_predict(std::span<const Point2> train_locations,
                        std::span<const double> train_values,
                        std::span<const Point2> test_locations, const KernelConfig& cfg);

struct Sample {
  Direction direction = Direction::Z;
  LatticeId lattice_id = 0;
  Point2 location = Point2::Zero();
  double mean = 0.0;
  double variance = 1.0;

  // Full 3D position: the planar location with the mean along direction.
  Point3 position() const { return lift(location, mean, direction); }
};

// Predictions of one cell along one direction, sorted by lattice id with at
// most one sample per id.
struct Layer {
  Direction direction = Direction::Z;
  std::vector<Sample> samples;

  const Sample* find(LatticeId id) const;
  Sample* find(LatticeId id);
  // Inserts or replaces, keeping the ordering.
  void upsert(const Sample& s);
  std::size_t size() const { return samples.size(); }
};

struct CellReconstruction {
  std::vector<Layer> layers;  // 0 to 3
  PointCloud residue;         // raw points kept when no layer could be built
  int largest_system = 0;     // largest training set solved, for instrumentation
};

// Builds one layer per active direction that keeps at least min_points after
// principled down-sampling. The GP is fitted to the direction coordinate
// relative to the training mean (constant-mean prior) at the planar training
// locations. Layers whose solve fails are skipped; when no layer results the
// raw points are returned as residue.
CellReconstruction reconstruct_cell(const CellIndex& index, std::span<const Point3> points,
                                    DirectionSet directions, const GridConfig& grid,
                                    const KernelConfig& kernel_cfg);

// Convenience overload running select_directions() first.
CellReconstruction reconstruct_cell(const CellIndex& index, std::span<const Point3> points,
                                    const GridConfig& grid, const KernelConfig& kernel_cfg);

}  // namespace gpslam
