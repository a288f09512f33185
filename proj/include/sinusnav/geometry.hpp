#pragma once

#include <Eigen/Dense>

namespace sinusnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Proper rigid motion x -> R x + t. Translations are in millimetres.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);
  static RigidTransform translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform trans_z(double d) { return translation(Vec3(0.0, 0.0, d)); }
  static RigidTransform rot_x(double angle);
  static RigidTransform rot_y(double angle);
  static RigidTransform rot_z(double angle);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const;
  RigidTransform inverse() const;
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
  }

  /// max(|R^T R - I|, |det R - 1|)
  double orthonormality_error() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Angle of the relative rotation R_a^T R_b, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace sinusnav
