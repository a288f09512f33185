#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sinusnav/environment.hpp"

namespace sinusnav {

struct PlannerConfig {
  double step_size = 2.0;   // mm
  double goal_bias = 0.1;
  int max_iters = 20000;
  double d_o = 1.5;         // mm, obstacle clearance
  std::uint64_t seed = 1;
  int shortcut_passes = 100;
  double resolution = 0.1;  // mm, edge sampling

  void validate() const;
};

/// Waypoints in {O_P}, all on the plane, spaced at most step_size apart.
struct PathP {
  std::vector<Vec3> waypoints;

  double length() const;
};

double polyline_length(const std::vector<Vec3>& points);

/// Every sample along [a, b] (spacing <= resolution, endpoints included) has
/// clearance >= d_o and lies in the cavity.
bool edge_clear(const Environment& env, const PlaneModel& plane, const Vec3& a, const Vec3& b,
                double d_o, double resolution);

/// RRT in the plane's 2D chart, then shortcut and resample.
PathP plan(const Environment& env, const PlaneModel& plane, const Vec3& start, const Vec3& target,
           const PlannerConfig& cfg);

/// Seeded random shortcuts followed by one greedy sweep; output is resampled
/// to step_size spacing and never longer than the input.
PathP shortcut(const PathP& path, const Environment& env, const PlaneModel& plane,
               const PlannerConfig& cfg);

/// Inserts evenly spaced points so no gap exceeds max_spacing.
std::vector<Vec3> resample(const std::vector<Vec3>& points, double max_spacing);

void write_path_csv(const std::string& path, const PathP& p);
void write_path_json(const std::string& path, const PathP& p);
PathP load_path_csv(const std::string& path);

}  // namespace sinusnav
