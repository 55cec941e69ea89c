#pragma once

#include "gpslam/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpslam {

enum class PrimitiveKind { Plane, Box, Cylinder };

// Geometry is described in the primitive's local frame, placed by `pose`.
//   Plane:    z = 0, |x| <= extent.x, |y| <= extent.y (a zero half-size is unbounded)
//   Box:      axis-aligned box with half extents `extent`, visible from inside and outside
//   Cylinder: axis along z, radius extent.x, half height extent.z, closed by caps
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  Pose pose;
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();
};

// Spinning multi-channel range sensor.
struct SensorPattern {
  int channels = 16;
  double elevation_min_deg = -15.0;
  double elevation_max_deg = 15.0;
  double azimuth_step_deg = 0.2;
  double min_range = 0.3;
  double max_range = 30.0;

  int azimuth_steps() const;
  int rays_per_scan() const { return channels * azimuth_steps(); }
};

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::vector<TimedPose> sensor_path;
  SensorPattern pattern;
  double noise_sigma = 0.02;  // range noise, meters
  std::uint64_t seed = 1;

  void validate() const;
};

// Distance along a unit ray to the first hit on a primitive, if any.
std::optional<double> intersect(const Primitive& prim, const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir);

// Ray-casts the scene from sensor_path[pose_index]. Returned points are in
// the sensor frame. Range noise is Gaussian and seeded by (seed, pose_index),
// so the same scene always renders the same scan.
PointCloud synth_scan(const SceneSpec& scene, std::size_t pose_index);

// Sensor poses walking a square of side `side` centred at `center` (height
// from center.z). The heading turns `yaw_turns` full turns over the loop at
// a constant rate; timestamps start at 0 with step dt.
std::vector<TimedPose> square_loop_path(const Eigen::Vector3d& center, double side, int frames,
                                        double dt, double yaw_turns);

// Closed box room of the given size (floor at z = 0) with a few boxes and
// cylinders inside to break symmetry.
std::vector<Primitive> box_room(const Eigen::Vector3d& size);

// JSON scene description, see README for the schema.
SceneSpec parse_scene(const std::string& json_text, const std::string& source = "<scene>");
SceneSpec load_scene(const std::string& path);

}  // namespace gpslam
