#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sinusnav/controller.hpp"
#include "sinusnav/phantom.hpp"
#include "sinusnav/planner.hpp"

namespace sinusnav {

struct ImagingConfig {
  int width = 256;
  int height = 192;
  double pixel_pitch = 0.42;  // mm/px
  double half_width = 2.0;    // px, rendered endoscope radius
  int threshold = 128;
  double noise_sigma = 10.0;  // intensity units, 0 disables noise
  Vec3 view_center_p{-15.0, 0.0, 50.0};  // C-arm origin in the phantom frame

  void validate() const;
};

struct RegistrationConfig {
  int markers = 6;             // per tracked body
  double marker_noise = 0.05;  // mm, per coordinate
  double marker_spread = 40.0; // mm

  void validate() const;
};

struct ExperimentSpec {
  PhantomSpec phantom;
  std::string cloud_path;      // empty: synthesize
  std::string landmarks_path;  // required with cloud_path
  std::string robot_config;    // empty: built-in model
  ArmConfig q0 = (ArmConfig() << -0.6407, -0.8459, -1.3453, 0.9768, 1.4262, -1.1204, 1.0797).finished();
  PlannerConfig planner;
  ControllerConfig controller;
  ImagingConfig imaging;
  RegistrationConfig registration;
  int trials = 5;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int snapshot_every = 25;     // steps between saved frames

  // Launch-time checks, including that referenced files exist.
  void validate() const;
};

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::string& path);
nlohmann::ordered_json experiment_spec_to_json(const ExperimentSpec& spec);

struct TrialResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::string error;                       // empty on success
  std::string error_code;
  int log_rows = 0;
  double rmse = 0.0;                       // mm over the selected waypoints
  std::vector<Vec3> selected_waypoints_p;  // mm, phantom frame
  std::vector<double> waypoint_errors;     // mm
  std::vector<double> waypoint_pixel_errors;
  double min_margin = 0.0;                 // mm, over all logged configurations
  RigidTransform base_from_phantom;        // ground truth placement
  double wall_seconds = 0.0;               // not part of the report document
};

struct Report {
  std::vector<TrialResult> trials;
  double mean_rmse = 0.0;  // over successful trials
  int successes = 0;
  double pixel_pitch = 0.42;
};

nlohmann::ordered_json report_to_json(const Report& report);

// Everything a single trial leaves behind, for plotting.
struct TrialLog {
  int index = 0;
  RigidTransform base_from_phantom;
  std::vector<Vec3> planned_path_p;
  TrajectoryLog log;
};

struct ExperimentOutcome {
  Report report;
  std::vector<TrialLog> logs;
};

// Runs every trial, writes report.json, timing.json and per-trial artefacts
// under spec.out_dir.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

// Selects `count` points at arc fractions k/(count+1) of a polyline.
std::vector<Vec3> select_waypoints(const std::vector<Vec3>& path, int count);

// Closest approach of a tip trajectory (phantom frame) to a waypoint.
double closest_approach(const std::vector<Vec3>& tips_p, const Vec3& waypoint);

}  // namespace sinusnav
