#include "gpslam/scene.hpp"

#include "gpslam/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace gpslam {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kEps = 1e-12;

std::optional<double> nearest_positive(double a, double b) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (lo > kEps) return lo;
  if (hi > kEps) return hi;
  return std::nullopt;
}

std::optional<double> intersect_plane(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                      const Eigen::Vector3d& half) {
  if (std::abs(d.z()) < kEps) return std::nullopt;
  const double t = -o.z() / d.z();
  if (t <= kEps) return std::nullopt;
  const Eigen::Vector3d p = o + t * d;
  if (half.x() > 0.0 && std::abs(p.x()) > half.x()) return std::nullopt;
  if (half.y() > 0.0 && std::abs(p.y()) > half.y()) return std::nullopt;
  return t;
}

std::optional<double> intersect_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                    const Eigen::Vector3d& half) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < kEps) {
      if (std::abs(o[i]) > half[i]) return std::nullopt;
      continue;
    }
    double t0 = (-half[i] - o[i]) / d[i];
    double t1 = (half[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far) return std::nullopt;
  return nearest_positive(t_near, t_far);
}

std::optional<double> intersect_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                         double radius, double half_height) {
  double best = std::numeric_limits<double>::infinity();
  // Side wall.
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > kEps) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
        if (t > kEps && std::abs(o.z() + t * d.z()) <= half_height) best = std::min(best, t);
      }
    }
  }
  // Caps.
  if (std::abs(d.z()) > kEps) {
    for (double zc : {-half_height, half_height}) {
      const double t = (zc - o.z()) / d.z();
      if (t <= kEps) continue;
      const Eigen::Vector3d p = o + t * d;
      if (p.x() * p.x() + p.y() * p.y() <= radius * radius) best = std::min(best, t);
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

Eigen::Vector3d read_vec3(const nlohmann::json& j, const char* key, const Eigen::Vector3d& dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 3)
    throw Error(ErrorCode::Parse, std::string("scene: '") + key + "' must be a 3-element array");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Pose read_pose(const nlohmann::json& j) {
  const Eigen::Vector3d t = read_vec3(j, j.contains("center") ? "center" : "position",
                                      Eigen::Vector3d::Zero());
  const Eigen::Vector3d rpy = read_vec3(j, "rpy_deg", Eigen::Vector3d::Zero()) * kDeg;
  return Pose::from_rpy(rpy.x(), rpy.y(), rpy.z(), t);
}

}  // namespace

int SensorPattern::azimuth_steps() const {
  return std::max(1, static_cast<int>(std::lround(360.0 / azimuth_step_deg)));
}

void SceneSpec::validate() const {
  if (noise_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  if (pattern.channels < 1 || !(pattern.azimuth_step_deg > 0.0) ||
      !(pattern.max_range > pattern.min_range))
    throw Error(ErrorCode::InvalidArgument, "invalid sensor pattern");
  for (std::size_t i = 1; i < sensor_path.size(); ++i) {
    if (!(sensor_path[i].timestamp > sensor_path[i - 1].timestamp))
      throw Error(ErrorCode::InvalidArgument, "sensor path timestamps must increase");
  }
}

std::optional<double> intersect(const Primitive& prim, const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir) {
  const Pose to_local = prim.pose.inverse();
  const Eigen::Vector3d o = to_local * origin;
  const Eigen::Vector3d d = to_local.rotation() * dir;
  switch (prim.kind) {
    case PrimitiveKind::Plane: return intersect_plane(o, d, prim.extent);
    case PrimitiveKind::Box: return intersect_box(o, d, prim.extent);
    case PrimitiveKind::Cylinder: return intersect_cylinder(o, d, prim.extent.x(), prim.extent.z());
  }
  return std::nullopt;
}

PointCloud synth_scan(const SceneSpec& scene, std::size_t pose_index) {
  if (pose_index >= scene.sensor_path.size())
    throw Error(ErrorCode::InvalidArgument, "synth_scan: pose index out of range");
  const Pose& sensor = scene.sensor_path[pose_index].pose;
  const SensorPattern& pat = scene.pattern;

  std::mt19937_64 rng(scene.seed * 0x9E3779B97F4A7C15ULL + pose_index);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud out;
  out.reserve(static_cast<std::size_t>(pat.rays_per_scan()));
  const int steps = pat.azimuth_steps();
  const Eigen::Matrix3d rot = sensor.rotation_matrix();
  for (int ch = 0; ch < pat.channels; ++ch) {
    const double el =
        pat.channels == 1
            ? pat.elevation_min_deg * kDeg
            : (pat.elevation_min_deg +
               (pat.elevation_max_deg - pat.elevation_min_deg) * ch / (pat.channels - 1)) *
                  kDeg;
    for (int k = 0; k < steps; ++k) {
      const double az = k * pat.azimuth_step_deg * kDeg;
      const Eigen::Vector3d local(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                  std::sin(el));
      const Eigen::Vector3d dir = rot * local;
      double range = std::numeric_limits<double>::infinity();
      for (const auto& prim : scene.primitives) {
        if (auto t = intersect(prim, sensor.translation(), dir)) range = std::min(range, *t);
      }
      // Draw noise for every ray so the sequence does not depend on hits.
      const double n = noise(rng);
      if (!std::isfinite(range) || range < pat.min_range || range > pat.max_range) continue;
      out.push_back(local * (range + scene.noise_sigma * n));
    }
  }
  return out;
}

std::vector<TimedPose> square_loop_path(const Eigen::Vector3d& center, double side, int frames,
                                        double dt, double yaw_turns) {
  std::vector<TimedPose> path;
  path.reserve(static_cast<std::size_t>(std::max(frames, 0)));
  const double half = side / 2.0;
  const std::array<Eigen::Vector2d, 5> corners = {
      Eigen::Vector2d(-half, -half), Eigen::Vector2d(half, -half), Eigen::Vector2d(half, half),
      Eigen::Vector2d(-half, half), Eigen::Vector2d(-half, -half)};
  for (int i = 0; i < frames; ++i) {
    const double s = 4.0 * i / frames;  // progress in edges
    const int edge = std::min(static_cast<int>(s), 3);
    const double f = s - edge;
    const Eigen::Vector2d xy = (1.0 - f) * corners[static_cast<std::size_t>(edge)] +
                               f * corners[static_cast<std::size_t>(edge + 1)];
    const double yaw = 2.0 * std::numbers::pi * yaw_turns * i / frames;
    path.push_back({i * dt, Pose::from_rpy(0.0, 0.0, yaw,
                                           {center.x() + xy.x(), center.y() + xy.y(), center.z()})});
  }
  return path;
}

std::vector<Primitive> box_room(const Eigen::Vector3d& size) {
  std::vector<Primitive> prims;
  const Eigen::Vector3d half = size / 2.0;
  prims.push_back({PrimitiveKind::Box, Pose::from_translation({0.0, 0.0, half.z()}), half});
  // Furniture: boxes of different heights and a pillar, placed asymmetrically.
  prims.push_back({PrimitiveKind::Box,
                   Pose::from_rpy(0.0, 0.0, 0.3, {0.35 * size.x(), 0.25 * size.y(), 0.5}),
                   {0.6, 0.4, 0.5}});
  prims.push_back({PrimitiveKind::Box,
                   Pose::from_rpy(0.0, 0.0, -0.2, {-0.3 * size.x(), 0.3 * size.y(), 0.9}),
                   {0.5, 0.8, 0.9}});
  prims.push_back({PrimitiveKind::Box, Pose::from_translation({0.2 * size.x(), -0.32 * size.y(), 0.4}),
                   {0.9, 0.3, 0.4}});
  prims.push_back({PrimitiveKind::Cylinder, Pose::from_translation({-0.25 * size.x(), -0.2 * size.y(), half.z()}),
                   {0.3, 0.3, half.z()}});
  prims.push_back({PrimitiveKind::Cylinder, Pose::from_translation({0.1 * size.x(), 0.38 * size.y(), 0.6}),
                   {0.4, 0.4, 0.6}});
  // Sloped ramp against one wall.
  prims.push_back({PrimitiveKind::Plane,
                   Pose::from_rpy(0.0, -0.35, 0.0, {-0.4 * size.x(), -0.3 * size.y(), 0.6}),
                   {0.8, 0.6, 0.0}});
  return prims;
}

SceneSpec parse_scene(const std::string& json_text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  SceneSpec scene;
  try {
    scene.seed = j.value("seed", std::uint64_t{1});
    scene.noise_sigma = j.value("noise_sigma", 0.02);
    if (j.contains("sensor")) {
      const auto& s = j.at("sensor");
      scene.pattern.channels = s.value("channels", scene.pattern.channels);
      scene.pattern.elevation_min_deg = s.value("elevation_min_deg", scene.pattern.elevation_min_deg);
      scene.pattern.elevation_max_deg = s.value("elevation_max_deg", scene.pattern.elevation_max_deg);
      scene.pattern.azimuth_step_deg = s.value("azimuth_step_deg", scene.pattern.azimuth_step_deg);
      scene.pattern.min_range = s.value("min_range", scene.pattern.min_range);
      scene.pattern.max_range = s.value("max_range", scene.pattern.max_range);
    }
    if (j.contains("box_room")) {
      auto prims = box_room(read_vec3(j, "box_room", {12.0, 10.0, 3.0}));
      scene.primitives.insert(scene.primitives.end(), prims.begin(), prims.end());
    }
    for (const auto& p : j.value("primitives", nlohmann::json::array())) {
      Primitive prim;
      const std::string type = p.at("type").get<std::string>();
      prim.pose = read_pose(p);
      if (type == "plane") {
        prim.kind = PrimitiveKind::Plane;
        const Eigen::Vector3d h = read_vec3(p, "half_extents", Eigen::Vector3d::Zero());
        prim.extent = {h.x(), h.y(), 0.0};
      } else if (type == "box") {
        prim.kind = PrimitiveKind::Box;
        prim.extent = read_vec3(p, "half_extents", Eigen::Vector3d::Ones());
      } else if (type == "cylinder") {
        prim.kind = PrimitiveKind::Cylinder;
        const double radius = p.at("radius").get<double>();
        prim.extent = {radius, radius, p.at("half_height").get<double>()};
      } else {
        throw Error(ErrorCode::Parse, source + ": unknown primitive type '" + type + "'");
      }
      scene.primitives.push_back(prim);
    }
    if (j.contains("square_loop")) {
      const auto& s = j.at("square_loop");
      scene.sensor_path = square_loop_path(read_vec3(s, "center", {0.0, 0.0, 1.2}),
                                           s.value("side", 2.0), s.value("frames", 50),
                                           s.value("dt", 0.1), s.value("yaw_turns", 0.0));
    }
    for (const auto& p : j.value("path", nlohmann::json::array())) {
      scene.sensor_path.push_back({p.at("t").get<double>(), read_pose(p)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, source + ": " + e.what());
  }
  scene.validate();
  return scene;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scene file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str(), path);
}

}  // namespace gpslam
