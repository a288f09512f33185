#include "sinusnav/kinematics.hpp"

#include <cmath>

#include "sinusnav/errors.hpp"

namespace sinusnav {
namespace {

constexpr double kDeg = EIGEN_PI / 180.0;

enum class PrimitiveKind { translate_z, rotate_x, rotate_y };

struct Primitive {
  PrimitiveKind kind;
  double value;
};

RigidTransform primitive_transform(const Primitive& p) {
  switch (p.kind) {
    case PrimitiveKind::translate_z: return RigidTransform::trans_z(p.value);
    case PrimitiveKind::rotate_x: return RigidTransform::rot_x(p.value);
    case PrimitiveKind::rotate_y: return RigidTransform::rot_y(p.value);
  }
  return {};
}

// Backbone from the flexible-section base to the tip as a sequence of
// elementary motions; translations carry arc length, rotations do not.
std::vector<Primitive> backbone_primitives(const EndoGeometry& geom, const EndoConfig& q_e) {
  const int n = geom.notch_pairs;
  const double h = geom.flexible_length / (2.0 * n);
  const double yaw = q_e[0] / n;
  const double pitch = q_e[1] / n;
  std::vector<Primitive> prims;
  prims.reserve(5 * static_cast<std::size_t>(n) + 4);
  for (int k = 0; k < n; ++k) {
    prims.push_back({PrimitiveKind::translate_z, 0.5 * h});
    prims.push_back({PrimitiveKind::rotate_y, yaw});
    prims.push_back({PrimitiveKind::translate_z, h});
    prims.push_back({PrimitiveKind::rotate_x, pitch});
    prims.push_back({PrimitiveKind::translate_z, 0.5 * h});
  }
  prims.push_back({PrimitiveKind::translate_z, geom.wrist_dc});
  prims.push_back({PrimitiveKind::rotate_x, q_e[2]});
  prims.push_back({PrimitiveKind::rotate_y, q_e[3]});
  prims.push_back({PrimitiveKind::translate_z, geom.wrist_df});
  return prims;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(Errc::invalid_argument, std::string("non-finite ") + what);
  }
}

}  // namespace

DHTable default_dh_table() {
  // a (mm), alpha (deg), d (mm), theta offset (deg)
  constexpr double table[7][4] = {
      {0.0, 0.0, 345.0, 0.0},
      {0.0, 90.0, 65.0, 0.0},
      {0.0, -90.0, 395.0, 180.0},
      {20.0, -90.0, -55.0, 180.0},
      {20.0, 90.0, 385.0, 180.0},
      {0.0, 90.0, 100.0, 90.0},
      {110.0, 90.0, 55.0, 0.0},
  };
  DHTable dh;
  for (int i = 0; i < 7; ++i) {
    dh[i] = {table[i][0], table[i][1] * kDeg, table[i][2], table[i][3] * kDeg};
  }
  return dh;
}

void EndoGeometry::validate() const {
  if (notch_pairs < 1) {
    throw Error(Errc::invalid_argument, "notch_pairs must be >= 1");
  }
  if (!(flexible_length > 0.0) || !(wrist_dc > 0.0) || !(wrist_df > 0.0)) {
    throw Error(Errc::invalid_argument, "endoscope lengths must be positive");
  }
}

JointVector JointLimits::lower() const {
  JointVector v;
  v << arm_min, endo_min;
  return v;
}

JointVector JointLimits::upper() const {
  JointVector v;
  v << arm_max, endo_max;
  return v;
}

bool JointLimits::contains(const ArmConfig& q_r, const EndoConfig& q_e, double slack) const {
  for (int i = 0; i < kArmDof; ++i) {
    if (q_r[i] < arm_min[i] - slack || q_r[i] > arm_max[i] + slack) return false;
  }
  for (int i = 0; i < kEndoDof; ++i) {
    if (q_e[i] < endo_min[i] - slack || q_e[i] > endo_max[i] + slack) return false;
  }
  return true;
}

RigidTransform dh_link(const DHRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  Mat3 r;
  r << c, -s * ca, s * sa,
       s, c * ca, -c * sa,
       0, sa, ca;
  return {r, Vec3(row.a * c, row.a * s, row.d)};
}

RigidTransform arm_fk(const DHTable& dh, const ArmConfig& q_r) {
  RigidTransform t;
  for (int i = 0; i < kArmDof; ++i) {
    require_finite(q_r[i], "arm joint angle");
    t = t * dh_link(dh[i], q_r[i]);
  }
  return t;
}

RigidTransform notch_pair_transform(const EndoGeometry& geom, double theta1, double theta2) {
  geom.validate();
  const int n = geom.notch_pairs;
  const double h = geom.flexible_length / (2.0 * n);
  const RigidTransform half = RigidTransform::trans_z(0.5 * h);
  const RigidTransform yaw = half * RigidTransform::rot_y(theta1 / n) * half;
  const RigidTransform pitch = half * RigidTransform::rot_x(theta2 / n) * half;
  return yaw * pitch;
}

RigidTransform flexible_fk(const EndoGeometry& geom, double theta1, double theta2) {
  require_finite(theta1, "flexible yaw");
  require_finite(theta2, "flexible pitch");
  const RigidTransform pair = notch_pair_transform(geom, theta1, theta2);
  RigidTransform t = pair;
  for (int k = 1; k < geom.notch_pairs; ++k) {
    t = t * pair;
  }
  return t;
}

RigidTransform wrist_fk(const EndoGeometry& geom, double theta3, double theta4) {
  return RigidTransform::trans_z(geom.wrist_dc) * RigidTransform::rot_x(theta3) *
         RigidTransform::rot_y(theta4) * RigidTransform::trans_z(geom.wrist_df);
}

EndoConfig compensate(const EndoConfig& q_e_raw, const CalibrationTerms& cal) {
  return q_e_raw + q_e_raw.cwiseProduct(cal.kc);
}

RigidTransform full_fk(const RobotModel& model, const ArmConfig& q_r, const EndoConfig& q_e_raw) {
  for (int i = 0; i < kEndoDof; ++i) require_finite(q_e_raw[i], "endoscope joint angle");
  const EndoConfig q_e = compensate(q_e_raw, model.calibration);
  return arm_fk(model.dh, q_r) * model.geometry.mount * flexible_fk(model.geometry, q_e[0], q_e[1]) *
         wrist_fk(model.geometry, q_e[2], q_e[3]) * RigidTransform::rot_z(model.calibration.theta_rz);
}

RigidTransform backbone_frame(const EndoGeometry& geom, const EndoConfig& q_e, double s) {
  geom.validate();
  RigidTransform t;
  double remaining = s;
  for (const Primitive& p : backbone_primitives(geom, q_e)) {
    if (p.kind == PrimitiveKind::translate_z) {
      if (remaining <= p.value) {
        return t * RigidTransform::trans_z(remaining);
      }
      remaining -= p.value;
    }
    t = t * primitive_transform(p);
  }
  return t;
}

std::vector<Vec3> body_points(const RobotModel& model, const ArmConfig& q_r,
                              const EndoConfig& q_e_raw, int delta) {
  if (delta < 2) {
    throw Error(Errc::invalid_argument, "body point count must be >= 2");
  }
  const EndoConfig q_e = compensate(q_e_raw, model.calibration);
  const RigidTransform base = arm_fk(model.dh, q_r) * model.geometry.mount;
  const auto prims = backbone_primitives(model.geometry, q_e);
  const double total = model.geometry.backbone_length();

  // Single forward sweep over the primitives; sample positions are increasing.
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(delta));
  RigidTransform t;
  double walked = 0.0;
  std::size_t next = 0;
  for (int j = 0; j < delta; ++j) {
    const double s = (j == delta - 1) ? total : total * j / (delta - 1);
    while (next < prims.size()) {
      const Primitive& p = prims[next];
      if (p.kind == PrimitiveKind::translate_z && s - walked <= p.value && j != delta - 1) break;
      if (p.kind == PrimitiveKind::translate_z) walked += p.value;
      t = t * primitive_transform(p);
      ++next;
    }
    const RigidTransform at = (j == delta - 1) ? t : t * RigidTransform::trans_z(s - walked);
    points.push_back(base.apply(at.translation()));
  }
  return points;
}

TipJacobian jacobian(const RobotModel& model, const ArmConfig& q_r, const EndoConfig& q_e_raw,
                     double step) {
  TipJacobian j;
  for (int k = 0; k < kTotalDof; ++k) {
    ArmConfig qr_plus = q_r;
    ArmConfig qr_minus = q_r;
    EndoConfig qe_plus = q_e_raw;
    EndoConfig qe_minus = q_e_raw;
    if (k < kArmDof) {
      qr_plus[k] += step;
      qr_minus[k] -= step;
    } else {
      qe_plus[k - kArmDof] += step;
      qe_minus[k - kArmDof] -= step;
    }
    const Vec3 plus = full_fk(model, qr_plus, qe_plus).translation();
    const Vec3 minus = full_fk(model, qr_minus, qe_minus).translation();
    j.col(k) = (plus - minus) / (2.0 * step);
  }
  return j;
}

}  // namespace sinusnav
