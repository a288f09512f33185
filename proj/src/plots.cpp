#include "sinusnav/plots.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sinusnav/io.hpp"

namespace sinusnav {

void emit_plots(const Report& report, const std::vector<TrialLog>& logs, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream path = open_output((fs::path(dir) / "path_vs_actual.csv").string());
  path << "trial,step,waypoint_index,planned_x,planned_y,planned_z,actual_x,actual_y,actual_z\n";
  std::ofstream margins = open_output((fs::path(dir) / "margins.csv").string());
  margins << "trial,step,min_margin\n";
  for (const TrialLog& t : logs) {
    const RigidTransform to_p = t.base_from_phantom.inverse();
    for (const TrajectoryRow& r : t.log.rows) {
      const Vec3 actual = to_p.apply(r.tip_true);
      path << t.index << ',' << r.step << ',' << r.waypoint_index;
      const bool have = r.waypoint_index >= 0 && static_cast<std::size_t>(r.waypoint_index) < t.planned_path_p.size();
      for (int k = 0; k < 3; ++k) {
        path << ',' << (have ? format_double(t.planned_path_p[static_cast<std::size_t>(r.waypoint_index)][k]) : "");
      }
      for (int k = 0; k < 3; ++k) path << ',' << format_double(actual[k]);
      path << '\n';
      margins << t.index << ',' << r.step << ',' << format_double(r.min_margin) << '\n';
    }
  }

  // Per-waypoint RMS over the successful trials.
  std::ofstream bars = open_output((fs::path(dir) / "waypoint_rmse.csv").string());
  bars << "waypoint,trials,rmse_mm,rmse_px\n";
  std::size_t count = 0;
  for (const TrialResult& t : report.trials) {
    if (t.success) count = std::max(count, t.waypoint_errors.size());
  }
  for (std::size_t w = 0; w < count; ++w) {
    double sum = 0.0;
    int n = 0;
    for (const TrialResult& t : report.trials) {
      if (!t.success || w >= t.waypoint_errors.size()) continue;
      sum += t.waypoint_errors[w] * t.waypoint_errors[w];
      ++n;
    }
    const double rmse = std::sqrt(sum / n);
    bars << w + 1 << ',' << n << ',' << format_double(rmse) << ',' << format_double(rmse / report.pixel_pitch)
         << '\n';
  }
  if (!path || !margins || !bars) throw Error(Errc::invalid_state, "failed writing plot data under " + dir);
}

}  // namespace sinusnav
