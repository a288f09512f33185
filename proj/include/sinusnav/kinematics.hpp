#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sinusnav/geometry.hpp"

namespace sinusnav {

/// Standard D-H link: Rot_z(theta) Trans_z(d) Trans_x(a) Rot_x(alpha).
struct DHRow {
  double a = 0.0;             // mm
  double alpha = 0.0;         // rad
  double d = 0.0;             // mm
  double theta_offset = 0.0;  // rad
};

using DHTable = std::array<DHRow, 7>;
using ArmConfig = Eigen::Matrix<double, 7, 1>;
using EndoConfig = Eigen::Vector4d;
using JointVector = Eigen::Matrix<double, 11, 1>;
using TipJacobian = Eigen::Matrix<double, 3, 11>;

inline constexpr int kArmDof = 7;
inline constexpr int kEndoDof = 4;
inline constexpr int kTotalDof = kArmDof + kEndoDof;

/// The 7-DOF arm as tabulated by the manufacturer (degrees converted to radians).
DHTable default_dh_table();

struct EndoGeometry {
  int notch_pairs = 10;
  double flexible_length = 20.0;  // mm
  double wrist_dc = 5.0;          // mm
  double wrist_df = 5.0;          // mm
  RigidTransform mount = RigidTransform::trans_z(30.0);  // flange -> flexible-section base

  double backbone_length() const { return flexible_length + wrist_dc + wrist_df; }
  void validate() const;
};

/// Empirical terms fitted on the bench: a roll about the tip axis and a
/// diagonal gain on the raw endoscope joints.
struct CalibrationTerms {
  double theta_rz = 0.0597;
  Eigen::Vector4d kc{0.7255, 0.7255, 0.3435, 0.7793};
};

struct JointLimits {
  ArmConfig arm_min = ArmConfig::Constant(-EIGEN_PI);
  ArmConfig arm_max = ArmConfig::Constant(EIGEN_PI);
  EndoConfig endo_min = EndoConfig::Constant(-EIGEN_PI / 2);
  EndoConfig endo_max = EndoConfig::Constant(EIGEN_PI / 2);

  JointVector lower() const;
  JointVector upper() const;
  bool contains(const ArmConfig& q_r, const EndoConfig& q_e, double slack = 0.0) const;
};

/// Everything needed to evaluate the arm + endoscope chain.
struct RobotModel {
  DHTable dh = default_dh_table();
  EndoGeometry geometry;
  CalibrationTerms calibration;
  JointLimits limits;
};

RigidTransform dh_link(const DHRow& row, double q);
RigidTransform arm_fk(const DHTable& dh, const ArmConfig& q_r);

/// One orthogonal notch pair bending theta1/N (yaw, about y) and theta2/N
/// (pitch, about x). Each notch sits at the middle of its L/(2N) segment.
RigidTransform notch_pair_transform(const EndoGeometry& geom, double theta1, double theta2);
RigidTransform flexible_fk(const EndoGeometry& geom, double theta1, double theta2);
RigidTransform wrist_fk(const EndoGeometry& geom, double theta3, double theta4);

EndoConfig compensate(const EndoConfig& q_e_raw, const CalibrationTerms& cal);

/// Base -> endpoint, with the raw endoscope configuration compensated first.
RigidTransform full_fk(const RobotModel& model, const ArmConfig& q_r, const EndoConfig& q_e_raw);

/// Backbone frame at arc length s measured from the flexible-section base,
/// expressed in that base frame. Takes compensated joint values.
RigidTransform backbone_frame(const EndoGeometry& geom, const EndoConfig& q_e, double s);

/// delta points at equal arc-length spacing from the flexible-section base to
/// the tip, in the robot base frame.
std::vector<Vec3> body_points(const RobotModel& model, const ArmConfig& q_r,
                              const EndoConfig& q_e_raw, int delta);

/// Translational tip Jacobian w.r.t. (q_r, q_e_raw), central differences.
TipJacobian jacobian(const RobotModel& model, const ArmConfig& q_r, const EndoConfig& q_e_raw,
                     double step = 1e-6);

/// Plain-text "key = value" loader; unspecified keys keep their defaults.
RobotModel parse_robot_model(const std::string& text);
RobotModel load_robot_model(const std::string& path);

}  // namespace sinusnav
