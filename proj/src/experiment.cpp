#include "sinusnav/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

#include "sinusnav/io.hpp"
#include "sinusnav/registration.hpp"

namespace sinusnav {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(Errc::config_error, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(Errc::config_error, where + ": unknown key '" + it.key() + "'");
  }
}

ordered_json matrix_json(const RigidTransform& t) {
  ordered_json rows = ordered_json::array();
  const Mat4 m = t.matrix();
  for (int r = 0; r < 4; ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

// Marker constellation rigidly attached to a body, observed by the tracker.
struct TrackedBody {
  MarkerSet local;
  MarkerSet observed;
};

TrackedBody track(const std::string& name, const RigidTransform& body_to_tracker, const RegistrationConfig& cfg,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> spread(-0.5 * cfg.marker_spread, 0.5 * cfg.marker_spread);
  std::normal_distribution<double> noise(0.0, cfg.marker_noise);
  TrackedBody b;
  b.local.frame = name;
  b.observed.frame = "tracker";
  for (int k = 0; k < cfg.markers; ++k) {
    char label[16];
    std::snprintf(label, sizeof label, "m%02d", k + 1);
    const Vec3 p(spread(rng), spread(rng), spread(rng));
    b.local.markers[label] = p;
    Vec3 seen = body_to_tracker.apply(p);
    if (cfg.marker_noise > 0.0) seen += Vec3(noise(rng), noise(rng), noise(rng));
    b.observed.markers[label] = seen;
  }
  return b;
}

struct TrialSetup {
  RegistrationSet truth;
  RegistrationSet estimate;
  double fit_rms[3] = {0.0, 0.0, 0.0};
};

TrialSetup register_scene(const RobotModel& model, const ArmConfig& q0, const Landmarks& lm,
                          const ImagingConfig& img, const RegistrationConfig& cfg, std::mt19937_64& rng) {
  // Phantom placed so the start landmark sits at the tip, phantom +x along the tip axis.
  Mat3 r_ep;
  r_ep.col(0) = Vec3::UnitZ();
  r_ep.col(1) = Vec3::UnitX();
  r_ep.col(2) = Vec3::UnitY();
  const RigidTransform t_p_e(r_ep, -(r_ep * lm.start));
  const RigidTransform t_e_b = full_fk(model, q0, EndoConfig::Zero());
  const RigidTransform t_a_p(Vec3(1.0, -1.0, -1.0).asDiagonal().toDenseMatrix(), img.view_center_p);

  const RigidTransform t_e_t = RigidTransform::translation(Vec3(400.0, -100.0, 900.0)) *
                               RigidTransform::rot_z(0.3) * RigidTransform::rot_x(0.2);
  const RigidTransform t_p_t = t_e_t * t_p_e;
  const RigidTransform t_a_t = t_p_t * t_a_p;

  const TrackedBody endo = track("O_E", t_e_t, cfg, rng);
  const TrackedBody phantom = track("O_P", t_p_t, cfg, rng);
  const TrackedBody carm = track("O_A", t_a_t, cfg, rng);
  const RigidFit fe = estimate_rigid(endo.local, endo.observed);
  const RigidFit fp = estimate_rigid(phantom.local, phantom.observed);
  const RigidFit fa = estimate_rigid(carm.local, carm.observed);

  TrialSetup s{compose_chain(t_a_p, t_p_e, t_e_b),
               compose_chain(fp.transform.inverse() * fa.transform, fe.transform.inverse() * fp.transform, t_e_b),
               {fe.rms_residual, fp.rms_residual, fa.rms_residual}};
  return s;
}

ProjectionModel view_for(const RigidTransform& camera_to_base, const ImagingConfig& img) {
  return orthographic_view(camera_to_base, img.pixel_pitch, img.width, img.height, 0.5 * img.width,
                           0.5 * img.height);
}

std::string trial_dir(const ExperimentSpec& spec, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "trial_%02d", index + 1);
  return (fs::path(spec.out_dir) / name).string();
}

void write_registration(const std::string& path, const TrialSetup& s) {
  ordered_json j;
  ordered_json truth;
  truth["t_a_p"] = matrix_json(s.truth.t_a_p());
  truth["t_p_e"] = matrix_json(s.truth.t_p_e());
  truth["t_e_b"] = matrix_json(s.truth.t_e_b());
  ordered_json est;
  est["t_a_p"] = matrix_json(s.estimate.t_a_p());
  est["t_p_e"] = matrix_json(s.estimate.t_p_e());
  est["t_e_b"] = matrix_json(s.estimate.t_e_b());
  j["truth"] = truth;
  j["estimate"] = est;
  j["fit_rms_mm"] = {{"endoscope", s.fit_rms[0]}, {"phantom", s.fit_rms[1]}, {"c_arm", s.fit_rms[2]}};
  write_json(path, j);
}

void run_trial(const ExperimentSpec& spec, const RobotModel& model, int index, TrialResult& result,
               TrialLog& tlog) {
  result.index = index;
  result.seed = splitmix(spec.seed + static_cast<std::uint64_t>(index));
  tlog.index = index;
  const std::string dir = trial_dir(spec, index);
  fs::create_directories(fs::path(dir) / "frames");
  std::mt19937_64 rng(result.seed);

  // Scene
  std::optional<Phantom> phantom;
  PointCloud cloud;
  Landmarks lm;
  if (spec.cloud_path.empty()) {
    phantom = synth_phantom(spec.phantom, result.seed);
    cloud = phantom->cloud;
    lm = phantom->landmarks;
  } else {
    cloud = load_cloud(spec.cloud_path);
    lm = load_landmarks(spec.landmarks_path);
  }
  const Environment env = phantom ? phantom->environment(spec.planner.d_o) : Environment(cloud, spec.planner.d_o);
  const PlaneModel plane_p = fit_plane(lm);

  // Registration
  const TrialSetup reg = register_scene(model, spec.q0, lm, spec.imaging, spec.registration, rng);
  write_registration((fs::path(dir) / "registration.json").string(), reg);
  result.base_from_phantom = reg.truth.t_p_b();
  tlog.base_from_phantom = result.base_from_phantom;

  // Plan
  PlannerConfig pc = spec.planner;
  pc.seed = result.seed;
  const PathP path_p = plan(env, plane_p, lm.start, lm.target, pc);
  write_path_csv((fs::path(dir) / "path_p.csv").string(), path_p);
  tlog.planned_path_p = path_p.waypoints;
  result.selected_waypoints_p = select_waypoints(path_p.waypoints, 7);

  const RigidTransform t_p_b = reg.estimate.t_p_b();
  PathP path_b;
  for (const Vec3& w : path_p.waypoints) path_b.waypoints.push_back(t_p_b.apply(w));
  write_path_csv((fs::path(dir) / "path_b.csv").string(), path_b);

  // Servo
  KinContext kin{model, t_p_b.inverse()};
  ImagingLoop imaging;
  imaging.render_view = view_for(reg.truth.t_a_b(), spec.imaging);
  imaging.model_view = view_for(reg.estimate.t_a_b(), spec.imaging);
  imaging.plane_b = plane_p.transformed(t_p_b);
  imaging.half_width = spec.imaging.half_width;
  imaging.threshold = static_cast<std::uint8_t>(spec.imaging.threshold);
  if (spec.imaging.noise_sigma > 0.0) imaging.noise = RenderNoise{splitmix(result.seed ^ 0x5EEDULL), spec.imaging.noise_sigma};
  const int every = spec.snapshot_every;
  imaging.on_frame = [&dir, every](int step, const GrayImage& frame, const BinaryMask& skeleton) {
    if (every > 0 && step % every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05d.pgm", step);
      write_pgm((fs::path(dir) / "frames" / name).string(), frame);
      std::snprintf(name, sizeof name, "skeleton_%05d.pbm", step);
      write_pbm((fs::path(dir) / "frames" / name).string(), skeleton);
    }
  };

  ControlState initial;
  initial.q_r = spec.q0;
  try {
    tlog.log = follow_path(initial, path_b.waypoints, kin, env, imaging, spec.controller);
  } catch (const ControlAbort& e) {
    tlog.log = e.log();
    write_trajectory_csv((fs::path(dir) / "trajectory.csv").string(), tlog.log);
    write_detections_csv((fs::path(dir) / "detections.csv").string(), tlog.log);
    if (e.frame()) write_pgm((fs::path(dir) / "failure.pgm").string(), *e.frame());
    throw;
  }
  write_trajectory_csv((fs::path(dir) / "trajectory.csv").string(), tlog.log);
  write_detections_csv((fs::path(dir) / "detections.csv").string(), tlog.log);

  // Score against ground truth.
  const RigidTransform to_p = result.base_from_phantom.inverse();
  std::vector<Vec3> tips_p;
  result.min_margin = std::numeric_limits<double>::infinity();
  for (const TrajectoryRow& r : tlog.log.rows) {
    tips_p.push_back(to_p.apply(r.tip_true));
    result.min_margin = std::min(result.min_margin, r.min_margin);
  }
  double sum = 0.0;
  for (const Vec3& w : result.selected_waypoints_p) {
    const double e = closest_approach(tips_p, w);
    result.waypoint_errors.push_back(e);
    result.waypoint_pixel_errors.push_back(e / spec.imaging.pixel_pitch);
    sum += e * e;
  }
  result.rmse = std::sqrt(sum / static_cast<double>(result.waypoint_errors.size()));
  result.log_rows = static_cast<int>(tlog.log.rows.size());
  result.success = true;
}

double get_double(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw Error(Errc::config_error, std::string(key) + " must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw Error(Errc::config_error, std::string(key) + " must be an integer");
  return j[key].get<int>();
}

}  // namespace

void ImagingConfig::validate() const {
  if (width < 8 || height < 8) throw Error(Errc::config_error, "image must be at least 8x8");
  if (!(pixel_pitch > 0.0)) throw Error(Errc::config_error, "pixel_pitch must be positive");
  if (!(half_width > 0.0)) throw Error(Errc::config_error, "half_width must be positive");
  if (threshold < 1 || threshold > 255) throw Error(Errc::config_error, "threshold must be in [1, 255]");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::config_error, "noise_sigma must be non-negative");
}

void RegistrationConfig::validate() const {
  if (markers < 3) throw Error(Errc::config_error, "at least 3 markers per body are required");
  if (!(marker_noise >= 0.0)) throw Error(Errc::config_error, "marker_noise must be non-negative");
  if (!(marker_spread > 0.0)) throw Error(Errc::config_error, "marker_spread must be positive");
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw Error(Errc::config_error, "trials must be >= 1");
  if (out_dir.empty()) throw Error(Errc::config_error, "output directory is empty");
  if (snapshot_every < 0) throw Error(Errc::config_error, "snapshot_every must be >= 0");
  auto must_exist = [](const std::string& p, const char* what) {
    if (!fs::exists(p)) throw Error(Errc::file_not_found, std::string(what) + " not found: " + p);
  };
  if (!cloud_path.empty()) {
    must_exist(cloud_path, "cloud file");
    if (landmarks_path.empty()) throw Error(Errc::config_error, "a cloud file needs a landmark file");
    must_exist(landmarks_path, "landmark file");
  } else {
    try {
      phantom.validate();
    } catch (const Error& e) {
      throw Error(Errc::config_error, e.what());
    }
  }
  if (!robot_config.empty()) must_exist(robot_config, "robot config");
  try {
    planner.validate();
    controller.validate();
  } catch (const Error& e) {
    throw Error(Errc::config_error, e.what());
  }
  imaging.validate();
  registration.validate();
}

ExperimentSpec experiment_spec_from_json(const json& j) {
  ExperimentSpec s;
  check_keys(j, "config",
             {"seed", "trials", "out", "snapshot_every", "phantom", "robot", "planner", "controller", "imaging",
              "registration"});
  try {
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    s.trials = get_int(j, "trials", s.trials);
    if (j.contains("out")) s.out_dir = j["out"].get<std::string>();
    s.snapshot_every = get_int(j, "snapshot_every", s.snapshot_every);

    if (j.contains("phantom")) {
      json p = j["phantom"];
      if (p.contains("cloud")) s.cloud_path = p["cloud"].get<std::string>();
      if (p.contains("landmarks")) s.landmarks_path = p["landmarks"].get<std::string>();
      p.erase("cloud");
      p.erase("landmarks");
      s.phantom = phantom_spec_from_json(p);
    }
    if (j.contains("robot")) {
      const json& r = j["robot"];
      check_keys(r, "robot", {"config", "q0_rad"});
      if (r.contains("config")) s.robot_config = r["config"].get<std::string>();
      if (r.contains("q0_rad")) {
        const auto q = r["q0_rad"].get<std::vector<double>>();
        if (q.size() != kArmDof) throw Error(Errc::config_error, "robot.q0_rad needs 7 values");
        for (int k = 0; k < kArmDof; ++k) s.q0[k] = q[static_cast<std::size_t>(k)];
      }
    }
    if (j.contains("planner")) {
      const json& p = j["planner"];
      check_keys(p, "planner", {"step_size_mm", "goal_bias", "max_iters", "d_o_mm", "shortcut_passes", "resolution_mm"});
      s.planner.step_size = get_double(p, "step_size_mm", s.planner.step_size);
      s.planner.goal_bias = get_double(p, "goal_bias", s.planner.goal_bias);
      s.planner.max_iters = get_int(p, "max_iters", s.planner.max_iters);
      s.planner.d_o = get_double(p, "d_o_mm", s.planner.d_o);
      s.planner.shortcut_passes = get_int(p, "shortcut_passes", s.planner.shortcut_passes);
      s.planner.resolution = get_double(p, "resolution_mm", s.planner.resolution);
    }
    s.controller.d_o = s.planner.d_o;
    if (j.contains("controller")) {
      const json& c = j["controller"];
      check_keys(c, "controller",
                 {"A", "A_diag", "dt_s", "d_o_mm", "delta", "waypoint_tol_mm", "max_steps_per_waypoint",
                  "step_clip_rad", "max_tip_step_mm"});
      if (c.contains("A_diag")) {
        const auto d = c["A_diag"].get<std::vector<double>>();
        if (d.size() != kTotalDof) throw Error(Errc::config_error, "controller.A_diag needs 11 values");
        s.controller.A.setZero();
        for (int k = 0; k < kTotalDof; ++k) s.controller.A(k, k) = d[static_cast<std::size_t>(k)];
      }
      if (c.contains("A")) {
        const auto rows = c["A"].get<std::vector<std::vector<double>>>();
        if (rows.size() != kTotalDof) throw Error(Errc::config_error, "controller.A must be 11x11");
        for (int r = 0; r < kTotalDof; ++r) {
          if (rows[static_cast<std::size_t>(r)].size() != kTotalDof) {
            throw Error(Errc::config_error, "controller.A must be 11x11");
          }
          for (int k = 0; k < kTotalDof; ++k) s.controller.A(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
      }
      s.controller.dt = get_double(c, "dt_s", s.controller.dt);
      s.controller.d_o = get_double(c, "d_o_mm", s.controller.d_o);
      s.controller.delta = get_int(c, "delta", s.controller.delta);
      s.controller.waypoint_tol = get_double(c, "waypoint_tol_mm", s.controller.waypoint_tol);
      s.controller.max_steps_per_waypoint = get_int(c, "max_steps_per_waypoint", s.controller.max_steps_per_waypoint);
      s.controller.step_clip = get_double(c, "step_clip_rad", s.controller.step_clip);
      s.controller.max_tip_step = get_double(c, "max_tip_step_mm", s.controller.max_tip_step);
    }
    if (j.contains("imaging")) {
      const json& m = j["imaging"];
      check_keys(m, "imaging",
                 {"width_px", "height_px", "pixel_pitch_mm", "half_width_px", "threshold", "noise_sigma",
                  "view_center_mm"});
      s.imaging.width = get_int(m, "width_px", s.imaging.width);
      s.imaging.height = get_int(m, "height_px", s.imaging.height);
      s.imaging.pixel_pitch = get_double(m, "pixel_pitch_mm", s.imaging.pixel_pitch);
      s.imaging.half_width = get_double(m, "half_width_px", s.imaging.half_width);
      s.imaging.threshold = get_int(m, "threshold", s.imaging.threshold);
      s.imaging.noise_sigma = get_double(m, "noise_sigma", s.imaging.noise_sigma);
      if (m.contains("view_center_mm")) s.imaging.view_center_p = vec3_from_json(m["view_center_mm"]);
    }
    if (j.contains("registration")) {
      const json& r = j["registration"];
      check_keys(r, "registration", {"markers", "marker_noise_mm", "marker_spread_mm"});
      s.registration.markers = get_int(r, "markers", s.registration.markers);
      s.registration.marker_noise = get_double(r, "marker_noise_mm", s.registration.marker_noise);
      s.registration.marker_spread = get_double(r, "marker_spread_mm", s.registration.marker_spread);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, e.what());
  }
  return s;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  ExperimentSpec s = experiment_spec_from_json(read_json(path));
  // Relative file references resolve against the config's directory.
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&base](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(s.cloud_path);
  resolve(s.landmarks_path);
  resolve(s.robot_config);
  return s;
}

ordered_json experiment_spec_to_json(const ExperimentSpec& s) {
  ordered_json j;
  j["seed"] = s.seed;
  j["trials"] = s.trials;
  j["out"] = s.out_dir;
  j["snapshot_every"] = s.snapshot_every;
  ordered_json ph = phantom_spec_to_json(s.phantom);
  if (!s.cloud_path.empty()) {
    ph["cloud"] = s.cloud_path;
    ph["landmarks"] = s.landmarks_path;
  }
  j["phantom"] = ph;
  ordered_json robot;
  if (!s.robot_config.empty()) robot["config"] = s.robot_config;
  robot["q0_rad"] = std::vector<double>(s.q0.data(), s.q0.data() + kArmDof);
  j["robot"] = robot;
  j["planner"] = {{"step_size_mm", s.planner.step_size}, {"goal_bias", s.planner.goal_bias},
                  {"max_iters", s.planner.max_iters},    {"d_o_mm", s.planner.d_o},
                  {"shortcut_passes", s.planner.shortcut_passes}, {"resolution_mm", s.planner.resolution}};
  ordered_json c;
  std::vector<std::vector<double>> a(kTotalDof, std::vector<double>(kTotalDof));
  for (int r = 0; r < kTotalDof; ++r)
    for (int k = 0; k < kTotalDof; ++k) a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] = s.controller.A(r, k);
  c["A"] = a;
  c["dt_s"] = s.controller.dt;
  c["d_o_mm"] = s.controller.d_o;
  c["delta"] = s.controller.delta;
  c["waypoint_tol_mm"] = s.controller.waypoint_tol;
  c["max_steps_per_waypoint"] = s.controller.max_steps_per_waypoint;
  c["step_clip_rad"] = s.controller.step_clip;
  c["max_tip_step_mm"] = s.controller.max_tip_step;
  j["controller"] = c;
  j["imaging"] = {{"width_px", s.imaging.width},
                  {"height_px", s.imaging.height},
                  {"pixel_pitch_mm", s.imaging.pixel_pitch},
                  {"half_width_px", s.imaging.half_width},
                  {"threshold", s.imaging.threshold},
                  {"noise_sigma", s.imaging.noise_sigma},
                  {"view_center_mm", vec_json(s.imaging.view_center_p)}};
  j["registration"] = {{"markers", s.registration.markers},
                       {"marker_noise_mm", s.registration.marker_noise},
                       {"marker_spread_mm", s.registration.marker_spread}};
  return j;
}

std::vector<Vec3> select_waypoints(const std::vector<Vec3>& path, int count) {
  if (path.empty() || count < 1) throw Error(Errc::invalid_argument, "cannot select waypoints from an empty path");
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t k = 1; k < path.size(); ++k) cum[k] = cum[k - 1] + (path[k] - path[k - 1]).norm();
  const double total = cum.back();
  std::vector<Vec3> out;
  std::size_t seg = 1;
  for (int k = 1; k <= count; ++k) {
    const double s = total * k / (count + 1);
    if (path.size() == 1 || total == 0.0) {
      out.push_back(path.front());
      continue;
    }
    while (seg < path.size() - 1 && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(path[seg - 1] + t * (path[seg] - path[seg - 1]));
  }
  return out;
}

double closest_approach(const std::vector<Vec3>& tips_p, const Vec3& waypoint) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& t : tips_p) best = std::min(best, (t - waypoint).norm());
  return best;
}

ordered_json report_to_json(const Report& report) {
  ordered_json j;
  j["trial_count"] = report.trials.size();
  j["successes"] = report.successes;
  j["mean_rmse_mm"] = report.mean_rmse;
  j["pixel_pitch_mm"] = report.pixel_pitch;
  ordered_json trials = ordered_json::array();
  for (const TrialResult& t : report.trials) {
    ordered_json o;
    o["index"] = t.index;
    o["seed"] = t.seed;
    o["success"] = t.success;
    if (!t.success) {
      o["error_code"] = t.error_code;
      o["error"] = t.error;
    }
    o["log_rows"] = t.log_rows;
    o["rmse_mm"] = t.rmse;
    ordered_json wps = ordered_json::array();
    for (const Vec3& w : t.selected_waypoints_p) wps.push_back(vec_json(w));
    o["waypoints_p_mm"] = wps;
    o["waypoint_errors_mm"] = t.waypoint_errors;
    o["waypoint_errors_px"] = t.waypoint_pixel_errors;
    o["min_margin_mm"] = t.min_margin;
    o["base_from_phantom"] = matrix_json(t.base_from_phantom);
    trials.push_back(o);
  }
  j["trials"] = trials;
  return j;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const RobotModel model = spec.robot_config.empty() ? RobotModel{} : load_robot_model(spec.robot_config);
  fs::create_directories(spec.out_dir);

  ExperimentOutcome out;
  out.report.pixel_pitch = spec.imaging.pixel_pitch;
  ordered_json timing = ordered_json::array();
  double rmse_sum = 0.0;
  for (int i = 0; i < spec.trials; ++i) {
    TrialResult result;
    TrialLog tlog;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run_trial(spec, model, i, result, tlog);
    } catch (const Error& e) {
      result.success = false;
      result.error = e.what();
      result.error_code = std::string(to_string(e.code()));
      result.log_rows = static_cast<int>(tlog.log.rows.size());
    } catch (const std::exception& e) {
      result.success = false;
      result.error = e.what();
      result.error_code = "internal";
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timing.push_back({{"index", i}, {"wall_seconds", result.wall_seconds}});
    if (result.success) {
      ++out.report.successes;
      rmse_sum += result.rmse;
    }
    out.report.trials.push_back(std::move(result));
    out.logs.push_back(std::move(tlog));
  }
  out.report.mean_rmse = out.report.successes > 0 ? rmse_sum / out.report.successes : 0.0;

  write_json((fs::path(spec.out_dir) / "report.json").string(), report_to_json(out.report));
  write_json((fs::path(spec.out_dir) / "timing.json").string(), ordered_json{{"trials", timing}});
  write_json((fs::path(spec.out_dir) / "config.json").string(), experiment_spec_to_json(spec));
  return out;
}

}  // namespace sinusnav
