#include "gpslam/mapstore.hpp"

#include "gpslam/error.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace gpslam {

std::size_t MapCell::sample_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    if (l) n += l->size();
  return n;
}

GpMap::GpMap(const GridConfig& grid, const KernelConfig& kernel, const MapConfig& map)
    : grid_(grid), kernel_(kernel), map_(map) {
  grid_.validate();
  kernel_.validate();
}

const MapCell* GpMap::find(const CellIndex& index) const {
  const auto it = cells_.find(index);
  return it == cells_.end() ? nullptr : &it->second;
}

const Layer* GpMap::query_samples(const CellIndex& index, Direction d) const {
  const MapCell* cell = find(index);
  return cell ? cell->layer(d) : nullptr;
}

void GpMap::insert_layer(const CellIndex& index, Layer layer) {
  const Direction d = layer.direction;
  cells_[index].layers[axis(d)] = std::move(layer);
}

std::size_t GpMap::sample_count() const {
  std::size_t n = 0;
  for (const auto& [_, cell] : cells_) n += cell.sample_count();
  return n;
}

std::size_t GpMap::layer_count() const {
  std::size_t n = 0;
  for (const auto& [_, cell] : cells_)
    for (const auto& l : cell.layers) n += l ? 1 : 0;
  return n;
}

std::size_t GpMap::residue_count() const {
  std::size_t n = 0;
  for (const auto& [_, cell] : cells_) n += cell.residue.size();
  return n;
}

std::vector<CellIndex> GpMap::sorted_indices() const {
  std::vector<CellIndex> keys;
  keys.reserve(cells_.size());
  for (const auto& [k, _] : cells_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

GpMap reconstruct_cloud(std::span<const Point3> world_cloud, const GridConfig& grid,
                        const KernelConfig& kernel, const MapConfig& map_cfg,
                        ReconstructionStats* stats) {
  GpMap out(grid, kernel, map_cfg);
  CellBuckets buckets = regionalize(world_cloud, grid);
  ReconstructionStats local;
  for (auto& [index, bucket] : buckets) {
    CellReconstruction rec = reconstruct_cell(index, bucket.points, grid, kernel);
    MapCell& cell = out.at(index);
    for (auto& layer : rec.layers) cell.layers[axis(layer.direction)] = std::move(layer);
    cell.residue = std::move(rec.residue);
    local.largest_system = std::max(local.largest_system, rec.largest_system);
  }
  local.cells = out.cells().size();
  local.layers = out.layer_count();
  if (stats) *stats = local;
  return out;
}

Sample fuse_sample(const Sample& map_sample, const Sample& cur_sample, double variance_floor) {
  const double vm = map_sample.variance;
  const double vc = cur_sample.variance;
  Sample out = map_sample;
  out.variance = std::max(vm * vc / (vm + vc), variance_floor);
  out.mean = (vm * cur_sample.mean + vc * map_sample.mean) / (vm + vc);
  return out;
}

namespace {

void fuse_layer(Layer& target, const Layer& incoming, double variance_floor) {
  for (const Sample& s : incoming.samples) {
    if (Sample* existing = target.find(s.lattice_id))
      *existing = fuse_sample(*existing, s, variance_floor);
    else
      target.upsert(s);
  }
}

void merge_layer(MapCell& cell, const Layer& incoming, double variance_floor) {
  auto& slot = cell.layers[axis(incoming.direction)];
  if (slot)
    fuse_layer(*slot, incoming, variance_floor);
  else
    slot = incoming;
}

}  // namespace

void update_map(GpMap& map, const GpMap& frame) {
  const double floor = map.config().variance_floor;
  for (const CellIndex& index : frame.sorted_indices()) {
    const MapCell& incoming = frame.cells().at(index);
    auto it = map.cells().find(index);
    if (it == map.cells().end()) {
      map.cells().emplace(index, incoming);
      continue;
    }
    MapCell& cell = it->second;
    for (const auto& layer : incoming.layers)
      if (layer) merge_layer(cell, *layer, floor);

    if (incoming.residue.empty()) continue;
    cell.residue.insert(cell.residue.end(), incoming.residue.begin(), incoming.residue.end());
    if (static_cast<int>(cell.residue.size()) >= map.grid().min_points) {
      CellReconstruction rec = reconstruct_cell(index, cell.residue, map.grid(), map.kernel());
      if (!rec.layers.empty()) {
        for (const auto& layer : rec.layers) merge_layer(cell, layer, floor);
        cell.residue.clear();
      }
    }
    const std::size_t cap = map.config().max_residue;
    if (cell.residue.size() > cap)
      cell.residue.erase(cell.residue.begin(),
                         cell.residue.begin() + static_cast<std::ptrdiff_t>(cell.residue.size() - cap));
  }
}

void export_map(const GpMap& map, std::ostream& out, double max_variance) {
  out << "# gpslam map export\n"
      << "# frame: world, right-handed, z up, meters\n"
      << "# columns: x y z variance direction\n"
      << "# max_variance: " << max_variance << "\n";
  out << std::setprecision(9);
  for (const CellIndex& index : map.sorted_indices()) {
    const MapCell& cell = map.cells().at(index);
    for (const auto& layer : cell.layers) {
      if (!layer) continue;
      for (const Sample& s : layer->samples) {
        if (s.variance > max_variance) continue;
        const Point3 p = s.position();
        out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << s.variance << ' '
            << to_string(s.direction) << '\n';
      }
    }
  }
}

void export_map(const GpMap& map, const std::string& path, double max_variance) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  export_map(map, out, max_variance);
}

}  // namespace gpslam
