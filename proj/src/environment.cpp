#include "sinusnav/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sinusnav/errors.hpp"
#include "sinusnav/io.hpp"
#include "sinusnav/simd/kernels.hpp"

namespace sinusnav {

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  PointCloud cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::array<double, 3> xyz{};
    std::istringstream row(line);
    std::string field;
    int k = 0;
    bool ok = true;
    while (std::getline(row, field, ',')) {
      if (k >= 3) {
        ok = false;
        break;
      }
      std::size_t used = 0;
      try {
        xyz[k] = std::stod(field, &used);
      } catch (const std::exception&) {
        ok = false;
        break;
      }
      if (field.find_first_not_of(" \t\r", used) != std::string::npos || !std::isfinite(xyz[k])) {
        ok = false;
        break;
      }
      ++k;
    }
    if (!ok || k != 3) {
      throw Error(Errc::malformed_row, path + ":" + std::to_string(line_no) + ": '" + line + "'");
    }
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  if (cloud.points.empty()) throw Error(Errc::empty_cloud, path);
  return cloud;
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out = open_output(path);
  for (const Vec3& p : cloud.points) {
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << '\n';
  }
}

Landmarks load_landmarks(const std::string& path) {
  const nlohmann::json j = read_json(path);
  Landmarks lm;
  try {
    lm.ostium = vec3_from_json(j.at("ostium"));
    lm.nostril = vec3_from_json(j.at("nostril"));
    lm.target = vec3_from_json(j.at("target"));
    lm.start = vec3_from_json(j.at("start"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
  const double area = 0.5 * (lm.nostril - lm.ostium).cross(lm.target - lm.ostium).norm();
  if (!(area > 1.0)) {
    throw Error(Errc::degenerate_geometry, path + ": ostium, nostril and target span less than 1 mm^2");
  }
  return lm;
}

void write_landmarks(const std::string& path, const Landmarks& lm) {
  nlohmann::ordered_json j;
  j["ostium"] = vec3_to_json(lm.ostium);
  j["nostril"] = vec3_to_json(lm.nostril);
  j["target"] = vec3_to_json(lm.target);
  j["start"] = vec3_to_json(lm.start);
  write_json(path, j);
}

PlaneModel PlaneModel::transformed(const RigidTransform& t) const {
  PlaneModel out;
  out.normal = t.apply_direction(normal);
  out.axis_u = t.apply_direction(axis_u);
  out.axis_v = t.apply_direction(axis_v);
  out.origin = t.apply(origin);
  out.offset = out.normal.dot(out.origin);
  return out;
}

PlaneModel plane_through(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 cross = (b - a).cross(c - a);
  // Sine of the angle at a, so the test does not depend on scale.
  const double span = (b - a).norm() * (c - a).norm();
  if (!(span > 0.0) || !(cross.norm() > 1e-9 * span)) {
    throw Error(Errc::degenerate_geometry, "plane points are (nearly) collinear");
  }
  PlaneModel plane;
  plane.normal = cross.normalized();
  plane.origin = a;
  plane.axis_u = (b - a).normalized();
  plane.axis_v = plane.normal.cross(plane.axis_u);
  plane.offset = plane.normal.dot(a);
  return plane;
}

PlaneModel fit_plane(const Landmarks& lm) {
  return plane_through(lm.ostium, lm.nostril, lm.target);
}

VoxelIndex::VoxelIndex(const std::vector<Vec3>& points, double cell_size) : cell_(cell_size) {
  if (points.empty()) return;
  if (!(cell_size > 0.0)) throw Error(Errc::invalid_argument, "voxel cell size must be positive");
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Keep the grid bounded for sparse, widely spread clouds.
  constexpr double kMaxCells = 1 << 24;
  for (;;) {
    double cells = 1.0;
    for (int a = 0; a < 3; ++a) cells *= std::floor((hi[a] - lo[a]) / cell_) + 1.0;
    if (cells <= kMaxCells) break;
    cell_ *= 2.0;
  }
  origin_ = lo;
  for (int a = 0; a < 3; ++a) {
    dims_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo[a]) / cell_)) + 1;
  }
  const std::size_t ncell = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);

  std::vector<std::uint32_t> cell_of(points.size());
  std::vector<std::uint32_t> counts(ncell + 1, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::int64_t c[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::floor((points[i][a] - origin_[a]) / cell_)), 0, dims_[a] - 1);
    }
    cell_of[i] = static_cast<std::uint32_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
    ++counts[cell_of[i] + 1];
  }
  for (std::size_t c = 1; c <= ncell; ++c) counts[c] += counts[c - 1];
  cell_start_ = counts;
  xs_.resize(points.size());
  ys_.resize(points.size());
  zs_.resize(points.size());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint32_t slot = fill[cell_of[i]]++;
    xs_[slot] = points[i].x();
    ys_[slot] = points[i].y();
    zs_[slot] = points[i].z();
  }
}

double VoxelIndex::scan_cell(std::int64_t ix, std::int64_t iy, std::int64_t iz, const Vec3& p,
                             double best) const {
  const std::size_t c = static_cast<std::size_t>((iz * dims_[1] + iy) * dims_[0] + ix);
  const std::uint32_t begin = cell_start_[c];
  const std::uint32_t end = cell_start_[c + 1];
  if (begin == end) return best;
  const double d = simd::min_sq_distance(xs_.data() + begin, ys_.data() + begin, zs_.data() + begin,
                                         end - begin, p.x(), p.y(), p.z());
  return d < best ? d : best;
}

double VoxelIndex::min_sq_distance(const Vec3& p) const {
  if (xs_.empty()) throw Error(Errc::invalid_state, "distance query on an empty cloud");
  std::int64_t ci[3];
  std::int64_t start = 0;  // Chebyshev distance from p's cell to the grid
  std::int64_t reach = 0;  // shell radius beyond which no grid cell exists
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - origin_[a]) / cell_);
    ci[a] = static_cast<std::int64_t>(std::clamp(f, -4.0e15, 4.0e15));
    start = std::max({start, -ci[a], ci[a] - (dims_[a] - 1)});
    reach = std::max({reach, ci[a], dims_[a] - 1 - ci[a]});
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t r = start; r <= reach; ++r) {
    const std::int64_t z0 = std::max<std::int64_t>(ci[2] - r, 0);
    const std::int64_t z1 = std::min<std::int64_t>(ci[2] + r, dims_[2] - 1);
    const std::int64_t y0 = std::max<std::int64_t>(ci[1] - r, 0);
    const std::int64_t y1 = std::min<std::int64_t>(ci[1] + r, dims_[1] - 1);
    const std::int64_t x0 = std::max<std::int64_t>(ci[0] - r, 0);
    const std::int64_t x1 = std::min<std::int64_t>(ci[0] + r, dims_[0] - 1);
    for (std::int64_t iz = z0; iz <= z1; ++iz) {
      const bool z_face = std::abs(iz - ci[2]) == r;
      for (std::int64_t iy = y0; iy <= y1; ++iy) {
        if (z_face || std::abs(iy - ci[1]) == r) {
          for (std::int64_t ix = x0; ix <= x1; ++ix) best = scan_cell(ix, iy, iz, p, best);
        } else {
          if (ci[0] - r >= 0) best = scan_cell(ci[0] - r, iy, iz, p, best);
          if (r > 0 && ci[0] + r <= dims_[0] - 1) best = scan_cell(ci[0] + r, iy, iz, p, best);
        }
      }
    }
    // Unvisited cells are at least r cells away along some axis. The 1e-9 mm
    // slack covers rounding in the cell assignment.
    const double bound = static_cast<double>(r) * cell_ - 1e-9;
    if (bound > 0.0 && best < bound * bound) break;
  }
  return best;
}

double VoxelIndex::min_distance(const Vec3& p) const {
  return std::sqrt(min_sq_distance(p));
}

double min_distance(const PointCloud& cloud, const Vec3& p) {
  if (cloud.points.empty()) throw Error(Errc::invalid_state, "distance query on an empty cloud");
  const std::size_t n = cloud.points.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = cloud.points[i].x();
    ys[i] = cloud.points[i].y();
    zs[i] = cloud.points[i].z();
  }
  return std::sqrt(simd::min_sq_distance(xs.data(), ys.data(), zs.data(), n, p.x(), p.y(), p.z()));
}

Environment::Environment(PointCloud cloud, double d_o, Containment solid)
    : cloud_(std::move(cloud)), solid_(std::move(solid)) {
  if (cloud_.points.empty()) throw Error(Errc::empty_cloud, "environment needs obstacle points");
  if (!(d_o > 0.0)) throw Error(Errc::invalid_argument, "d_o must be positive");
  index_ = VoxelIndex(cloud_.points, std::max(d_o, 1.0));
  box_min_ = cloud_.points.front();
  box_max_ = cloud_.points.front();
  for (const Vec3& p : cloud_.points) {
    box_min_ = box_min_.cwiseMin(p);
    box_max_ = box_max_.cwiseMax(p);
  }
}

bool Environment::in_cavity(const Vec3& p, double d_o) const {
  if (solid_) return solid_(p);
  for (int a = 0; a < 3; ++a) {
    if (p[a] < box_min_[a] + d_o || p[a] > box_max_[a] - d_o) return false;
  }
  return true;
}

}  // namespace sinusnav
