#include "sinusnav/phantom.hpp"

#include <cmath>
#include <random>

#include "sinusnav/errors.hpp"
#include "sinusnav/io.hpp"

namespace sinusnav {
namespace {

constexpr double kTwoPi = 2.0 * EIGEN_PI;

double radial(const Vec3& p) { return std::hypot(p.y(), p.z()); }

bool in_nasal(const PhantomSpec& s, const Vec3& p) {
  return p.x() >= -s.nasal_length && p.x() <= 0.0 && radial(p) <= s.nasal_radius;
}

bool in_corridor(const PhantomSpec& s, const Vec3& p) {
  return p.x() >= 0.0 && p.x() <= s.sinus_center().x() && radial(p) <= s.corridor_radius();
}

bool in_sinus(const PhantomSpec& s, const Vec3& p) {
  const Vec3 d = (p - s.sinus_center()).cwiseQuotient(s.sinus_semi_axes);
  return d.squaredNorm() <= 1.0;
}

// Strict interiors, used to carve shared walls out of the surface samples.
bool inside_corridor_open(const PhantomSpec& s, const Vec3& p) {
  return p.x() > -1e-9 && p.x() < s.sinus_center().x() && radial(p) < s.corridor_radius() - 1e-9;
}

bool inside_sinus_open(const PhantomSpec& s, const Vec3& p) {
  const Vec3 d = (p - s.sinus_center()).cwiseQuotient(s.sinus_semi_axes);
  return d.squaredNorm() < 1.0 - 1e-9;
}

bool inside_nasal_open(const PhantomSpec& s, const Vec3& p) {
  return p.x() > -s.nasal_length && p.x() < -1e-9 && radial(p) < s.nasal_radius - 1e-9;
}

class Sampler {
 public:
  Sampler(const PhantomSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  Vec3 jittered(const Vec3& p) {
    std::uniform_real_distribution<double> u(-spec_.jitter, spec_.jitter);
    const double jx = u(rng_);
    const double jy = u(rng_);
    const double jz = u(rng_);
    return p + Vec3(jx, jy, jz);
  }

  void cylinder(double x0, double x1, double radius, std::vector<Vec3>& out,
                bool (*drop)(const PhantomSpec&, const Vec3&)) {
    const double h = spec_.point_spacing;
    const int nx = static_cast<int>(std::ceil((x1 - x0) / h)) + 1;
    const int nt = std::max(8, static_cast<int>(std::ceil(kTwoPi * radius / h)));
    for (int i = 0; i < nx; ++i) {
      const double x = x0 + (x1 - x0) * i / (nx - 1);
      for (int k = 0; k < nt; ++k) {
        const double t = kTwoPi * (k + 0.5 * (i % 2)) / nt;
        const Vec3 p(x, radius * std::cos(t), radius * std::sin(t));
        if (drop(spec_, p)) continue;
        out.push_back(jittered(p));
      }
    }
  }

  void wall_disk(double x, double radius, std::vector<Vec3>& out) {
    const double h = spec_.point_spacing;
    const int rings = static_cast<int>(std::ceil(radius / h));
    for (int r = 0; r <= rings; ++r) {
      const double rho = radius * r / rings;
      const int nt = std::max(1, static_cast<int>(std::ceil(kTwoPi * rho / h)));
      for (int k = 0; k < nt; ++k) {
        const double t = kTwoPi * (k + 0.5 * (r % 2)) / nt;
        const Vec3 p(x, rho * std::cos(t), rho * std::sin(t));
        if (inside_corridor_open(spec_, p)) continue;
        out.push_back(jittered(p));
      }
    }
  }

  void ellipsoid(std::vector<Vec3>& out) {
    const Vec3& a = spec_.sinus_semi_axes;
    // Knud Thomsen surface-area approximation.
    constexpr double pe = 1.6075;
    const double area =
        4.0 * EIGEN_PI *
        std::pow((std::pow(a.x() * a.y(), pe) + std::pow(a.x() * a.z(), pe) + std::pow(a.y() * a.z(), pe)) / 3.0,
                 1.0 / pe);
    const int n = static_cast<int>(std::ceil(1.3 * area / (spec_.point_spacing * spec_.point_spacing)));
    const double golden = EIGEN_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      const double t = golden * i;
      // Unit-sphere direction with the sphere's pole on the x axis.
      const Vec3 unit(z, r * std::cos(t), r * std::sin(t));
      const Vec3 p = spec_.sinus_center() + unit.cwiseProduct(a);
      if (inside_corridor_open(spec_, p)) continue;
      out.push_back(jittered(p));
    }
  }

 private:
  const PhantomSpec& spec_;
  std::mt19937_64 rng_;
};

}  // namespace

void PhantomSpec::validate() const {
  const double min_chamber = std::min({nasal_radius, sinus_semi_axes.y(), sinus_semi_axes.z()});
  if (!(corridor_width > 0.0)) throw Error(Errc::invalid_argument, "corridor width must be positive");
  if (!(nasal_radius > 0.0) || !(nasal_length > 0.0) || !(corridor_length > 0.0) ||
      !(sinus_semi_axes.minCoeff() > 0.0) || !(point_spacing > 0.0) || !(jitter >= 0.0)) {
    throw Error(Errc::invalid_argument, "phantom dimensions must be positive");
  }
  if (corridor_radius() >= min_chamber) {
    throw Error(Errc::invalid_argument, "corridor is wider than the chambers it joins");
  }
  if (jitter >= 0.5 * point_spacing) {
    throw Error(Errc::invalid_argument, "jitter must stay below half the point spacing");
  }
  if (!(start_depth > 0.0) || start_depth >= nasal_length - nostril_inset) {
    throw Error(Errc::invalid_argument, "start must lie inside the nasal tube");
  }
  if (!(target_depth > 0.0) || target_depth >= 2.0 * sinus_semi_axes.x() - corridor_radius()) {
    throw Error(Errc::invalid_argument, "target must lie inside the sinus");
  }
  if (!(std::abs(nostril_offset) > 0.0) || std::abs(nostril_offset) > nasal_radius - corridor_radius()) {
    throw Error(Errc::invalid_argument, "nostril offset must be nonzero and inside the nasal tube");
  }
}

bool PhantomSpec::contains(const Vec3& p) const {
  return in_nasal(*this, p) || in_corridor(*this, p) || in_sinus(*this, p);
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  try {
    s.nasal_radius = j.value("nasal_radius_mm", s.nasal_radius);
    s.nasal_length = j.value("nasal_length_mm", s.nasal_length);
    s.corridor_width = j.value("corridor_width_mm", s.corridor_width);
    s.corridor_length = j.value("corridor_length_mm", s.corridor_length);
    if (j.contains("sinus_semi_axes_mm")) s.sinus_semi_axes = vec3_from_json(j["sinus_semi_axes_mm"]);
    s.point_spacing = j.value("point_spacing_mm", s.point_spacing);
    s.jitter = j.value("jitter_mm", s.jitter);
    s.start_depth = j.value("start_depth_mm", s.start_depth);
    s.target_depth = j.value("target_depth_mm", s.target_depth);
    s.nostril_inset = j.value("nostril_inset_mm", s.nostril_inset);
    s.nostril_offset = j.value("nostril_offset_mm", s.nostril_offset);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, std::string("phantom spec: ") + e.what());
  }
  return s;
}

nlohmann::ordered_json phantom_spec_to_json(const PhantomSpec& s) {
  nlohmann::ordered_json j;
  j["nasal_radius_mm"] = s.nasal_radius;
  j["nasal_length_mm"] = s.nasal_length;
  j["corridor_width_mm"] = s.corridor_width;
  j["corridor_length_mm"] = s.corridor_length;
  j["sinus_semi_axes_mm"] = vec3_to_json(s.sinus_semi_axes);
  j["point_spacing_mm"] = s.point_spacing;
  j["jitter_mm"] = s.jitter;
  j["start_depth_mm"] = s.start_depth;
  j["target_depth_mm"] = s.target_depth;
  j["nostril_inset_mm"] = s.nostril_inset;
  j["nostril_offset_mm"] = s.nostril_offset;
  return j;
}

Phantom synth_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  Phantom ph;
  ph.spec = spec;
  ph.seed = seed;
  Sampler sampler(ph.spec, seed);
  std::vector<Vec3>& pts = ph.cloud.points;

  sampler.cylinder(-spec.nasal_length, 0.0, spec.nasal_radius, pts,
                   [](const PhantomSpec&, const Vec3&) { return false; });
  sampler.wall_disk(0.0, spec.nasal_radius, pts);
  sampler.cylinder(0.0, spec.sinus_center().x(), spec.corridor_radius(), pts,
                   [](const PhantomSpec& s, const Vec3& p) { return inside_sinus_open(s, p) || inside_nasal_open(s, p); });
  sampler.ellipsoid(pts);
  ph.cloud.frame_tag = "O_P";

  ph.landmarks.start = Vec3(-spec.start_depth, 0.0, 0.0);
  ph.landmarks.ostium = Vec3(0.5 * spec.corridor_length, 0.0, 0.0);
  ph.landmarks.target = Vec3(spec.corridor_length + spec.target_depth, 0.0, 0.0);
  ph.landmarks.nostril = Vec3(-spec.nasal_length + spec.nostril_inset, spec.nostril_offset, 0.0);
  return ph;
}

Environment Phantom::environment(double d_o) const {
  const PhantomSpec s = spec;
  return Environment(cloud, d_o, [s](const Vec3& p) { return s.contains(p); });
}

void write_phantom(const std::string& prefix, const Phantom& phantom) {
  write_cloud(prefix + ".csv", phantom.cloud);
  write_landmarks(prefix + "_landmarks.json", phantom.landmarks);
  nlohmann::ordered_json manifest;
  manifest["point_count"] = phantom.cloud.points.size();
  manifest["seed"] = phantom.seed;
  manifest["frame"] = phantom.cloud.frame_tag;
  manifest["spec"] = phantom_spec_to_json(phantom.spec);
  write_json(prefix + "_manifest.json", manifest);
}

}  // namespace sinusnav
