#include "gpslam/geometry.hpp"

#include "gpslam/error.hpp"

#include <algorithm>
#include <cmath>

namespace gpslam {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::X: return "X";
    case Direction::Y: return "Y";
    case Direction::Z: return "Z";
  }
  return "?";
}

Direction direction_from_char(char c) {
  switch (c) {
    case 'X': case 'x': return Direction::X;
    case 'Y': case 'y': return Direction::Y;
    case 'Z': case 'z': return Direction::Z;
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, std::string("unknown direction '") + c + "'");
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation.normalized()), translation_(translation) {}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(Eigen::Quaterniond(rotation).normalized()), translation_(translation) {}

Pose Pose::from_translation(const Eigen::Vector3d& t) {
  return {Eigen::Quaterniond::Identity(), t};
}

Pose Pose::from_rpy(double roll, double pitch, double yaw, const Eigen::Vector3d& t) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  return {q, t};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double Pose::yaw() const {
  const Eigen::Matrix3d r = rotation_matrix();
  return std::atan2(r(1, 0), r(0, 0));
}

double Pose::angle() const {
  const double w = std::clamp(std::abs(rotation_.w()), 0.0, 1.0);
  return 2.0 * std::atan2(rotation_.vec().norm(), w);
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation_ = (rotation_ * other.rotation_).normalized();
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.conjugate();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

PointCloud transform(const Pose& pose, const PointCloud& cloud) {
  PointCloud out;
  out.reserve(cloud.size());
  const Eigen::Matrix3d r = pose.rotation_matrix();
  for (const auto& p : cloud) out.emplace_back(r * p + pose.translation());
  return out;
}

PoseDelta pose_difference(const Pose& a, const Pose& b) {
  const Pose d = a.inverse() * b;
  return {d.translation().norm(), d.angle()};
}

}  // namespace gpslam
