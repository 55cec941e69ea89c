#pragma once

#include "gpslam/gp.hpp"
#include "gpslam/grid.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>

namespace gpslam {

struct MapConfig {
  double variance_floor = 1e-6;    // m^2, lower bound after fusion
  std::size_t max_residue = 512;   // raw points kept per cell, oldest dropped first
};

struct MapCell {
  std::array<std::optional<Layer>, 3> layers;
  PointCloud residue;

  const Layer* layer(Direction d) const {
    return layers[axis(d)] ? &*layers[axis(d)] : nullptr;
  }
  bool has_layers() const { return layers[0] || layers[1] || layers[2]; }
  std::size_t sample_count() const;
};

/// Hash table from cell index to reconstructed layers and raw residue, in
/// the world frame. Also used for a single reconstructed frame.
class GpMap {
 public:
  using Cells = std::unordered_map<CellIndex, MapCell, CellIndexHash>;

  GpMap() = default;
  GpMap(const GridConfig& grid, const KernelConfig& kernel, const MapConfig& map = {});

  const GridConfig& grid() const { return grid_; }
  const KernelConfig& kernel() const { return kernel_; }
  const MapConfig& config() const { return map_; }

  bool empty() const { return cells_.empty(); }
  const Cells& cells() const { return cells_; }
  Cells& cells() { return cells_; }
  const MapCell* find(const CellIndex& index) const;
  MapCell& at(const CellIndex& index) { return cells_[index]; }

  // Expected O(1); nullptr when the cell or the layer is missing.
  const Layer* query_samples(const CellIndex& index, Direction d) const;
  void insert_layer(const CellIndex& index, Layer layer);

  std::size_t sample_count() const;
  std::size_t layer_count() const;
  std::size_t residue_count() const;
  // Cells sorted by index, for reproducible iteration.
  std::vector<CellIndex> sorted_indices() const;

 private:
  GridConfig grid_;
  KernelConfig kernel_;
  MapConfig map_;
  Cells cells_;
};

struct ReconstructionStats {
  std::size_t cells = 0;
  std::size_t layers = 0;
  int largest_system = 0;
};

// Regionalizes a world-frame cloud and reconstructs every cell.
GpMap reconstruct_cloud(std::span<const Point3> world_cloud, const GridConfig& grid,
                        const KernelConfig& kernel, const MapConfig& map_cfg = {},
                        ReconstructionStats* stats = nullptr);

// Inverse-variance fusion of two estimates at the same test location.
Sample fuse_sample(const Sample& map_sample, const Sample& cur_sample,
                   double variance_floor = 0.0);

// Folds a registered, reconstructed frame into the map:
//  - cells or layers new to the map are inserted as they are;
//  - layers present on both sides are fused per test location, and
//    locations only one side predicts are kept;
//  - raw residue accumulates in the map cell and is reconstructed once it is
//    dense enough, with resulting layers fused like any other.
void update_map(GpMap& map, const GpMap& frame);

// ASCII export, one "x y z variance direction" line per sample with
// variance <= max_variance. Lines starting with '#' are header.
void export_map(const GpMap& map, std::ostream& out, double max_variance);
void export_map(const GpMap& map, const std::string& path, double max_variance);

}  // namespace gpslam
