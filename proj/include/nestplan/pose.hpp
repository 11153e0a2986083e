#pragma once

#include <cmath>
#include <Eigen/Geometry>

namespace nestplan {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform: rotate, then translate. The rotation is renormalized on
/// construction unless it is already unit to within rounding, so a parsed
/// pose keeps the exact quaternion that was written.
class Pose {
 public:
  Pose() : translation_(Vec3::Zero()), rotation_(Quat::Identity()) {}
  explicit Pose(const Vec3& translation, const Quat& rotation = Quat::Identity())
      : translation_(translation),
        rotation_(std::abs(rotation.squaredNorm() - 1.0) <= 4e-16 ? rotation : rotation.normalized()) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(double x, double y, double z) { return Pose(Vec3(x, y, z)); }
  static Pose from_axis_angle(const Vec3& translation, const Vec3& axis, double angle) {
    return Pose(translation, Quat(Eigen::AngleAxisd(angle, axis.normalized())));
  }

  const Vec3& translation() const { return translation_; }
  const Quat& rotation() const { return rotation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  Pose inverse() const {
    const Quat inv = rotation_.conjugate();
    return Pose(-(inv * translation_), inv);
  }

  /// (this * other).apply(p) == this->apply(other.apply(p))
  Pose operator*(const Pose& other) const {
    return Pose(rotation_ * other.translation_ + translation_, rotation_ * other.rotation_);
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool operator==(const Pose& other) const {
    return translation_ == other.translation_ && rotation_.coeffs() == other.rotation_.coeffs();
  }

 private:
  Vec3 translation_;
  Quat rotation_;
};

/// Geodesic angle between two rotations, in radians.
inline double rotation_distance(const Quat& a, const Quat& b) {
  return a.angularDistance(b);
}

}  // namespace nestplan
