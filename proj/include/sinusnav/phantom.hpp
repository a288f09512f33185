#pragma once

#include <cstdint>

#include <json.hpp>

#include "sinusnav/environment.hpp"

namespace sinusnav {

/// Desk-scale sinus phantom in {O_P}: a nasal tube along -x ending in a wall
/// at x = 0, pierced by the ostium corridor that opens into an ellipsoidal
/// maxillary sinus. The feasible-path plane is z = 0.
struct PhantomSpec {
  double nasal_radius = 6.0;
  double nasal_length = 45.0;
  double corridor_width = 4.0;
  double corridor_length = 3.0;
  Vec3 sinus_semi_axes{11.0, 8.0, 6.5};
  double point_spacing = 0.5;
  double jitter = 0.05;
  double start_depth = 20.0;   // start sits this far before the wall
  double target_depth = 7.0;   // target sits this far past the corridor exit
  double nostril_inset = 5.0;
  double nostril_offset = 3.0;

  double corridor_radius() const { return 0.5 * corridor_width; }
  Vec3 sinus_center() const { return {corridor_length + sinus_semi_axes.x(), 0.0, 0.0}; }
  void validate() const;

  /// Union of the three chambers (closed).
  bool contains(const Vec3& p) const;
};

PhantomSpec phantom_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json phantom_spec_to_json(const PhantomSpec& spec);

struct Phantom {
  PhantomSpec spec;
  std::uint64_t seed = 0;
  PointCloud cloud;
  Landmarks landmarks;

  Environment environment(double d_o) const;
};

Phantom synth_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Writes <prefix>.csv, <prefix>_landmarks.json and <prefix>_manifest.json.
void write_phantom(const std::string& prefix, const Phantom& phantom);

}  // namespace sinusnav
