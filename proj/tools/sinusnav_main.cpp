#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sinusnav/experiment.hpp"
#include "sinusnav/io.hpp"
#include "sinusnav/plots.hpp"

namespace fs = std::filesystem;
using namespace sinusnav;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::string phantom;  // prefix of a phantom written by phantom-gen
};

ExperimentSpec build_spec(const Overrides& o) {
  ExperimentSpec spec = o.config.empty() ? ExperimentSpec{} : load_experiment_spec(o.config);
  if (o.seed) spec.seed = *o.seed;
  if (o.trials) spec.trials = *o.trials;
  if (!o.out.empty()) spec.out_dir = o.out;
  if (!o.phantom.empty()) {
    spec.cloud_path = o.phantom + ".csv";
    spec.landmarks_path = o.phantom + "_landmarks.json";
  }
  return spec;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--trials", o.trials, "Trial count");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--phantom", o.phantom, "Phantom prefix (<prefix>.csv, <prefix>_landmarks.json)");
}

int cmd_run(const Overrides& o) {
  const ExperimentSpec spec = build_spec(o);
  const ExperimentOutcome outcome = run_experiment(spec);
  emit_plots(outcome.report, outcome.logs, (fs::path(spec.out_dir) / "plots").string());
  for (const TrialResult& t : outcome.report.trials) {
    if (t.success) {
      std::printf("trial %d: ok  rmse %.3f mm  rows %d  min margin %.3f mm  (%.2f s)\n", t.index + 1, t.rmse,
                  t.log_rows, t.min_margin, t.wall_seconds);
    } else {
      std::printf("trial %d: FAILED [%s] %s\n", t.index + 1, t.error_code.c_str(), t.error.c_str());
    }
  }
  std::printf("%d/%zu trials succeeded, mean rmse %.3f mm, report in %s\n", outcome.report.successes,
              outcome.report.trials.size(), outcome.report.mean_rmse, spec.out_dir.c_str());
  return outcome.report.successes > 0 ? 0 : 1;
}

int cmd_plan(const Overrides& o) {
  const ExperimentSpec spec = build_spec(o);
  spec.validate();
  std::optional<Phantom> phantom;
  PointCloud cloud;
  Landmarks lm;
  if (spec.cloud_path.empty()) {
    phantom = synth_phantom(spec.phantom, spec.seed);
    cloud = phantom->cloud;
    lm = phantom->landmarks;
  } else {
    cloud = load_cloud(spec.cloud_path);
    lm = load_landmarks(spec.landmarks_path);
  }
  const Environment env = phantom ? phantom->environment(spec.planner.d_o) : Environment(cloud, spec.planner.d_o);
  PlannerConfig pc = spec.planner;
  pc.seed = spec.seed;
  const PathP path = plan(env, fit_plane(lm), lm.start, lm.target, pc);
  write_path_csv((fs::path(spec.out_dir) / "path.csv").string(), path);
  write_path_json((fs::path(spec.out_dir) / "path.json").string(), path);
  std::printf("%zu waypoints, length %.3f mm, written to %s\n", path.waypoints.size(), path.length(),
              spec.out_dir.c_str());
  return 0;
}

int cmd_phantom(const Overrides& o) {
  const ExperimentSpec spec = build_spec(o);
  spec.phantom.validate();
  const std::string prefix = o.phantom.empty() ? (fs::path(spec.out_dir) / "phantom").string() : o.phantom;
  const Phantom p = synth_phantom(spec.phantom, spec.seed);
  write_phantom(prefix, p);
  std::printf("%zu points written to %s.csv\n", p.cloud.points.size(), prefix.c_str());
  return 0;
}

int cmd_replay(const std::string& path) {
  const TrajectoryLog log = load_trajectory_csv(path);
  double min_margin = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  for (const TrajectoryRow& r : log.rows) {
    min_margin = std::min(min_margin, r.min_margin);
    max_gap = std::max(max_gap, (r.tip_est - r.tip_true).norm());
  }
  nlohmann::ordered_json j;
  j["rows"] = log.rows.size();
  j["steps_taken"] = log.steps_taken();
  j["completed"] = log.completed;
  if (!log.rows.empty()) {
    j["final_waypoint_index"] = log.rows.back().waypoint_index;
    j["final_tip_true_mm"] = {log.rows.back().tip_true.x(), log.rows.back().tip_true.y(),
                              log.rows.back().tip_true.z()};
    j["min_margin_mm"] = min_margin;
    j["max_estimate_error_mm"] = max_gap;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-constrained sinus navigation simulator"};
  app.require_subcommand(1);

  Overrides run_o, plan_o, gen_o;
  CLI::App* run = app.add_subcommand("run", "Run closed-loop trials and write a report");
  add_common(run, run_o);
  CLI::App* planc = app.add_subcommand("plan", "Plan a path through the phantom");
  add_common(planc, plan_o);
  CLI::App* gen = app.add_subcommand("phantom-gen", "Write a synthetic phantom point cloud");
  add_common(gen, gen_o);
  std::string log_path;
  CLI::App* replay = app.add_subcommand("replay", "Summarize a trajectory log");
  replay->add_option("log", log_path, "trajectory.csv")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_o);
    if (planc->parsed()) return cmd_plan(plan_o);
    if (gen->parsed()) return cmd_phantom(gen_o);
    if (replay->parsed()) return cmd_replay(log_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
