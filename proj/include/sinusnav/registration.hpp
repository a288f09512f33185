#pragma once

#include <map>
#include <string>

#include "sinusnav/geometry.hpp"

namespace sinusnav {

/// Labeled marker positions (mm) observed in one frame.
struct MarkerSet {
  std::string frame;
  std::map<std::string, Vec3> markers;
};

MarkerSet load_marker_set(const std::string& path);
void write_marker_set(const std::string& path, const MarkerSet& set);

struct RigidFit {
  RigidTransform transform;  // maps src coordinates onto dst coordinates
  double rms_residual = 0.0;  // mm
};

/// Least-squares proper rotation + translation with dst ~ T * src, matched by
/// label (SVD of the cross-covariance with the reflection sign corrected).
RigidFit estimate_rigid(const MarkerSet& src, const MarkerSet& dst);

/// T_A^P, T_P^E and T_E^B with the derived chain products.
class RegistrationSet {
 public:
  RegistrationSet(const RigidTransform& t_a_p, const RigidTransform& t_p_e, const RigidTransform& t_e_b)
      : t_a_p_(t_a_p), t_p_e_(t_p_e), t_e_b_(t_e_b) {}

  const RigidTransform& t_a_p() const { return t_a_p_; }
  const RigidTransform& t_p_e() const { return t_p_e_; }
  const RigidTransform& t_e_b() const { return t_e_b_; }
  RigidTransform t_a_b() const { return t_e_b_ * t_p_e_ * t_a_p_; }
  RigidTransform t_p_b() const { return t_e_b_ * t_p_e_; }

 private:
  RigidTransform t_a_p_;
  RigidTransform t_p_e_;
  RigidTransform t_e_b_;
};

RegistrationSet compose_chain(const RigidTransform& t_a_p, const RigidTransform& t_p_e,
                              const RigidTransform& t_e_b);

/// Phantom-frame point to the robot base frame.
Vec3 to_base(const RegistrationSet& reg, const Vec3& p_p);

}  // namespace sinusnav
