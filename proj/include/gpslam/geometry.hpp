#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace gpslam {

// World frame is right-handed with z pointing up. All file I/O uses it.
using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;
using PointCloud = std::vector<Point3>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

enum class Direction : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Direction, 3> kAllDirections = {Direction::X, Direction::Y,
                                                            Direction::Z};

constexpr int axis(Direction d) { return static_cast<int>(d); }

inline Eigen::Vector3d unit_vector(Direction d) { return Eigen::Vector3d::Unit(axis(d)); }

std::string_view to_string(Direction d);
Direction direction_from_char(char c);

// The two axes spanning the plane orthogonal to d, in ascending order.
constexpr std::array<int, 2> plane_axes(Direction d) {
  switch (d) {
    case Direction::X: return {1, 2};
    case Direction::Y: return {0, 2};
    case Direction::Z: return {0, 1};
  }
  return {0, 1};
}

// Component of p along d.
inline double coord(const Point3& p, Direction d) { return p[axis(d)]; }

// Projection of p onto the plane orthogonal to d.
inline Point2 planar(const Point3& p, Direction d) {
  const auto uv = plane_axes(d);
  return {p[uv[0]], p[uv[1]]};
}

// Inverse of planar(): rebuild a 3D point from a planar location and the
// coordinate along d.
inline Point3 lift(const Point2& location, double value, Direction d) {
  const auto uv = plane_axes(d);
  Point3 p;
  p[uv[0]] = location.x();
  p[uv[1]] = location.y();
  p[axis(d)] = value;
  return p;
}

/// Rigid transform mapping sensor-frame points into the world frame.
///
/// Rotation is kept as a unit quaternion and renormalized after every
/// composition so that long chains of compositions stay orthonormal.
class Pose {
 public:
  Pose() : rotation_(Eigen::Quaterniond::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Eigen::Vector3d& t);
  // Intrinsic z-y-x (yaw, pitch, roll) angles in radians.
  static Pose from_rpy(double roll, double pitch, double yaw, const Eigen::Vector3d& t);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  double yaw() const;
  // Rotation angle of this transform, radians in [0, pi].
  double angle() const;

  Point3 operator*(const Point3& p) const { return rotation_ * p + translation_; }
  Pose operator*(const Pose& other) const;
  Pose inverse() const;

 private:
  Eigen::Quaterniond rotation_;
  Eigen::Vector3d translation_;
};

inline Point3 transform(const Pose& pose, const Point3& p) { return pose * p; }
inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& a) { return a.inverse(); }

PointCloud transform(const Pose& pose, const PointCloud& cloud);

// Translation and rotation magnitude of a^-1 * b.
struct PoseDelta {
  double translation = 0.0;
  double rotation = 0.0;
};
PoseDelta pose_difference(const Pose& a, const Pose& b);

}  // namespace gpslam
