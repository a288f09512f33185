#include "sinusnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sinusnav/errors.hpp"
#include "sinusnav/io.hpp"

namespace sinusnav {
namespace {

using Vec2 = Eigen::Vector2d;

constexpr double kPlanarTolerance = 1e-6;

bool point_clear(const Environment& env, const Vec3& p, double d_o) {
  return env.in_cavity(p, d_o) && env.min_distance(p) >= d_o;
}

// Samples strictly inside the segment must clear d_o + resolution/2 so that,
// with the distance field being 1-Lipschitz, the continuous segment clears d_o.
bool segment_safe(const Environment& env, const PlaneModel& plane, const Vec3& a, const Vec3& b,
                  const PlannerConfig& cfg) {
  const double inflated = cfg.d_o + 0.5 * cfg.resolution;
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / cfg.resolution)));
  if (!point_clear(env, a, cfg.d_o) || !point_clear(env, b, cfg.d_o)) return false;
  if (n == 1) return true;
  return edge_clear(env, plane, a + (b - a) / n, a + (b - a) * (n - 1) / n, inflated, cfg.resolution);
}

}  // namespace

void PlannerConfig::validate() const {
  if (!(step_size > 0.0)) throw Error(Errc::invalid_argument, "step_size must be positive");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw Error(Errc::invalid_argument, "goal_bias must be in [0, 1]");
  if (!(d_o > 0.0)) throw Error(Errc::invalid_argument, "d_o must be positive");
  if (max_iters < 1) throw Error(Errc::invalid_argument, "max_iters must be >= 1");
  if (shortcut_passes < 0) throw Error(Errc::invalid_argument, "shortcut_passes must be >= 0");
  if (!(resolution > 0.0)) throw Error(Errc::invalid_argument, "resolution must be positive");
}

double polyline_length(const std::vector<Vec3>& points) {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

double PathP::length() const { return polyline_length(waypoints); }

bool edge_clear(const Environment& env, const PlaneModel& /*plane*/, const Vec3& a, const Vec3& b,
                double d_o, double resolution) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / resolution)));
  for (int k = 0; k <= n; ++k) {
    const Vec3 p = (k == n) ? b : Vec3(a + (b - a) * (static_cast<double>(k) / n));
    if (!point_clear(env, p, d_o)) return false;
    if (len == 0.0) break;
  }
  return true;
}

std::vector<Vec3> resample(const std::vector<Vec3>& points, double max_spacing) {
  if (points.size() < 2) return points;
  std::vector<Vec3> out{points.front()};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3& a = points[i - 1];
    const Vec3& b = points[i];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / max_spacing)));
    for (int k = 1; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
    out.push_back(b);
  }
  return out;
}

PathP shortcut(const PathP& path, const Environment& env, const PlaneModel& plane,
               const PlannerConfig& cfg) {
  cfg.validate();
  std::vector<Vec3> pts = path.waypoints;
  if (pts.size() <= 2) return {resample(pts, cfg.step_size)};

  std::mt19937_64 rng(cfg.seed ^ 0x5eedc0ffee123457ULL);
  for (int pass = 0; pass < cfg.shortcut_passes && pts.size() > 2; ++pass) {
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j < i + 2) continue;
    if (segment_safe(env, plane, pts[i], pts[j], cfg)) {
      pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i + 1), pts.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }

  // Greedy sweep: from each kept vertex jump to the furthest visible one.
  std::vector<Vec3> greedy{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = pts.size() - 1;
    while (j > i + 1 && !segment_safe(env, plane, pts[i], pts[j], cfg)) --j;
    greedy.push_back(pts[j]);
    i = j;
  }

  PathP out{resample(greedy, cfg.step_size)};
  // Resampling keeps the polyline; the cut vertices can only shorten it.
  if (out.length() > path.length()) return {resample(path.waypoints, cfg.step_size)};
  return out;
}

PathP plan(const Environment& env, const PlaneModel& plane, const Vec3& start, const Vec3& target,
           const PlannerConfig& cfg) {
  cfg.validate();
  for (const Vec3* p : {&start, &target}) {
    if (std::abs(plane.residual(*p)) > kPlanarTolerance) {
      throw Error(Errc::invalid_argument, "start/target is not on the path plane");
    }
  }
  const Vec3 s3 = plane.project(start);
  const Vec3 t3 = plane.project(target);
  if (!point_clear(env, s3, cfg.d_o)) throw Error(Errc::infeasible_endpoint, "start is in collision or outside the cavity");
  if (!point_clear(env, t3, cfg.d_o)) throw Error(Errc::infeasible_endpoint, "target is in collision or outside the cavity");
  if ((s3 - t3).norm() == 0.0) return {{s3}};

  const Vec2 s2 = plane.to_chart(s3);
  const Vec2 t2 = plane.to_chart(t3);
  Vec2 lo = s2.cwiseMin(t2);
  Vec2 hi = s2.cwiseMax(t2);
  for (const Vec3& p : env.cloud().points) {
    const Vec2 uv = plane.to_chart(p);
    lo = lo.cwiseMin(uv);
    hi = hi.cwiseMax(uv);
  }

  // Tree nodes live in the chart; 3D positions are cached to keep lifting
  // consistent between collision checks and output.
  std::vector<Vec2> nodes{s2};
  std::vector<Vec3> lifted{s3};
  std::vector<int> parent{-1};

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> su(lo.x(), hi.x());
  std::uniform_real_distribution<double> sv(lo.y(), hi.y());

  int goal_node = -1;
  if ((t2 - s2).norm() <= cfg.step_size && segment_safe(env, plane, s3, t3, cfg)) {
    nodes.push_back(t2);
    lifted.push_back(t3);
    parent.push_back(0);
    goal_node = 1;
  }

  for (int iter = 0; iter < cfg.max_iters && goal_node < 0; ++iter) {
    Vec2 sample;
    if (unit(rng) < cfg.goal_bias) {
      sample = t2;
    } else {
      const double u = su(rng);
      const double v = sv(rng);
      sample = Vec2(u, v);
    }

    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(nodes.size()); ++k) {
      const double d = (nodes[k] - sample).squaredNorm();
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    const Vec2 dir = sample - nodes[nearest];
    const double dist = dir.norm();
    if (dist == 0.0) continue;
    const Vec2 next = nodes[nearest] + dir * (std::min(cfg.step_size, dist) / dist);
    const Vec3 next3 = plane.from_chart(next);
    if (!point_clear(env, next3, cfg.d_o + 0.5 * cfg.resolution)) continue;
    if (!segment_safe(env, plane, lifted[nearest], next3, cfg)) continue;

    nodes.push_back(next);
    lifted.push_back(next3);
    parent.push_back(nearest);
    const int added = static_cast<int>(nodes.size()) - 1;

    if ((t2 - next).norm() <= cfg.step_size && segment_safe(env, plane, next3, t3, cfg)) {
      nodes.push_back(t2);
      lifted.push_back(t3);
      parent.push_back(added);
      goal_node = added + 1;
    }
  }
  if (goal_node < 0) {
    throw Error(Errc::no_path_found, "RRT exhausted " + std::to_string(cfg.max_iters) +
                                         " iterations; retry with another seed");
  }

  PathP raw;
  for (int k = goal_node; k >= 0; k = parent[k]) raw.waypoints.push_back(lifted[k]);
  std::reverse(raw.waypoints.begin(), raw.waypoints.end());
  return shortcut(raw, env, plane, cfg);
}

void write_path_csv(const std::string& path, const PathP& p) {
  std::ofstream out = open_output(path);
  out << "x,y,z\n";
  for (const Vec3& w : p.waypoints) {
    out << format_double(w.x()) << ',' << format_double(w.y()) << ',' << format_double(w.z()) << '\n';
  }
}

void write_path_json(const std::string& path, const PathP& p) {
  nlohmann::ordered_json j;
  j["frame"] = "O_P";
  j["length_mm"] = p.length();
  auto arr = nlohmann::ordered_json::array();
  for (const Vec3& w : p.waypoints) arr.push_back(nlohmann::ordered_json::array({w.x(), w.y(), w.z()}));
  j["waypoints"] = arr;
  write_json(path, j);
}

PathP load_path_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  PathP p;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line.rfind("x,y,z", 0) == 0) continue;
    }
    if (line.empty()) continue;
    double x = 0, y = 0, z = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3) {
      throw Error(Errc::malformed_row, path + ": '" + line + "'");
    }
    p.waypoints.emplace_back(x, y, z);
  }
  return p;
}

}  // namespace sinusnav
