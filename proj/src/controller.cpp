#include "sinusnav/controller.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sinusnav/io.hpp"
#include "sinusnav/qp.hpp"

namespace sinusnav {
namespace {

constexpr int kLineSearchHalvings = 6;

JointVector stack(const ArmConfig& q_r, const EndoConfig& q_e) {
  JointVector q;
  q << q_r, q_e;
  return q;
}

std::string join(const std::vector<std::string>& tags) {
  std::string out;
  for (const std::string& t : tags) {
    if (!out.empty()) out += ';';
    out += t;
  }
  return out;
}

double min_of(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace

void ControllerConfig::validate() const {
  if (!A.allFinite() || (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff())) {
    throw Error(Errc::invalid_argument, "controller weight A must be finite and symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<WeightMatrix> eig(A);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(Errc::invalid_argument, "controller weight A must be positive definite");
  }
  if (!(dt > 0.0)) throw Error(Errc::invalid_argument, "dt must be positive");
  if (!(d_o >= 0.0)) throw Error(Errc::invalid_argument, "d_o must be non-negative");
  if (delta < 2) throw Error(Errc::invalid_argument, "delta must be >= 2");
  if (!(waypoint_tol > 0.0)) throw Error(Errc::invalid_argument, "waypoint_tol must be positive");
  if (max_steps_per_waypoint < 1) throw Error(Errc::invalid_argument, "max_steps_per_waypoint must be >= 1");
  if (!(step_clip > 0.0)) throw Error(Errc::invalid_argument, "step_clip must be positive");
  if (!(max_tip_step > 0.0)) throw Error(Errc::invalid_argument, "max_tip_step must be positive");
}

RateQpResult solve_rate_qp(const Eigen::MatrixXd& J, const Eigen::VectorXd& dx, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Eigen::MatrixXd& A, double clip) {
  const Eigen::Index n = J.cols();
  RateQpResult out;
  const Eigen::VectorXd lo = (lower - q).cwiseMax(-clip);
  const Eigen::VectorXd hi = (upper - q).cwiseMin(clip);

  // Keep only the well-conditioned part of the task.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = (s.size() > 0 ? s[0] : 0.0) * 1e-9;
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > cutoff && s[rank] > 0.0) ++rank;
  Eigen::MatrixXd E = J;
  Eigen::VectorXd e = dx;
  if (rank < J.rows()) {
    if (dx.norm() > 0.0) out.active_constraints.push_back("singular");
    const Eigen::MatrixXd Ur = svd.matrixU().leftCols(rank);
    E = Ur.transpose() * J;
    e = Ur.transpose() * dx;
  }

  if (e.size() == 0 || e.isZero(0.0)) {
    // The unconstrained optimum is dq = 0; it only needs the box to contain 0.
    if ((lo.array() > 0.0).any() || (hi.array() < 0.0).any()) {
      throw Error(Errc::infeasible_limits, "configuration lies outside its joint limits");
    }
    out.dq = Eigen::VectorXd::Zero(n);
    return out;
  }

  const BoxQpResult r = solve_box_eq_qp(A, E, e, lo, hi);
  out.dq = r.x;
  for (int k : r.at_lower) out.active_constraints.push_back((lo[k] == -clip ? "clip-:" : "lower:") + std::to_string(k));
  for (int k : r.at_upper) out.active_constraints.push_back((hi[k] == clip ? "clip+:" : "upper:") + std::to_string(k));
  return out;
}

std::vector<double> obstacle_margins(const ControlState& state, const Environment& env, const KinContext& kin,
                                     const ControllerConfig& cfg) {
  const std::vector<Vec3> body = body_points(kin.model, state.q_r, state.q_e, cfg.delta);
  std::vector<double> margins;
  margins.reserve(body.size());
  for (const Vec3& p : body) margins.push_back(env.min_distance(kin.env_from_base.apply(p)));
  return margins;
}

StepResult qp_step(const ControlState& state, const Vec3& target_b, const KinContext& kin, const Environment& env,
                   const ControllerConfig& cfg) {
  const TipJacobian J = jacobian(kin.model, state.q_r, state.q_e);
  if (!J.allFinite()) throw Error(Errc::invalid_state, "Jacobian is not finite");

  Vec3 dx = target_b - state.tip_estimate;
  const double norm = dx.norm();
  if (norm > cfg.max_tip_step) dx *= cfg.max_tip_step / norm;

  // Solve for joint rates against the rate task dx/dt, then integrate over dt.
  const JointVector q = stack(state.q_r, state.q_e);
  const JointLimits& lim = kin.model.limits;
  const RateQpResult qp = solve_rate_qp(J, dx / cfg.dt, q / cfg.dt, lim.lower() / cfg.dt, lim.upper() / cfg.dt,
                                        cfg.A, cfg.step_clip / cfg.dt);

  StepResult out;
  out.active_constraints = qp.active_constraints;
  const JointVector full = qp.dq * cfg.dt;
  const JointVector lower = lim.lower();
  const JointVector upper = lim.upper();

  double alpha = 1.0;
  for (int i = 0; i <= kLineSearchHalvings; ++i, alpha *= 0.5) {
    const JointVector qn = (q + alpha * full).cwiseMax(lower).cwiseMin(upper);
    ControlState trial = state;
    trial.q_r = qn.head<kArmDof>();
    trial.q_e = qn.tail<kEndoDof>();
    if (min_of(obstacle_margins(trial, env, kin, cfg)) > cfg.d_o) {
      out.dq = qn - q;
      out.alpha = alpha;
      out.feasible = true;
      if (alpha < 1.0) out.active_constraints.push_back("obstacle");
      out.predicted_tip = full_fk(kin.model, trial.q_r, trial.q_e).translation();
      return out;
    }
  }
  out.dq.setZero();
  out.alpha = 0.0;
  out.feasible = false;
  out.active_constraints.push_back("blocked");
  out.predicted_tip = full_fk(kin.model, state.q_r, state.q_e).translation();
  return out;
}

int TrajectoryLog::steps_taken() const {
  if (rows.empty()) return 0;
  return static_cast<int>(rows.size()) - (completed ? 1 : 0);
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream out = open_output(path);
  out << "step,waypoint_index,u,v,tip_est_x,tip_est_y,tip_est_z,tip_true_x,tip_true_y,tip_true_z";
  for (int k = 0; k < kArmDof; ++k) out << ",q_r" << k + 1;
  for (int k = 0; k < kEndoDof; ++k) out << ",q_e" << k + 1;
  out << ",min_margin,alpha,active_constraints\n";
  for (const TrajectoryRow& r : log.rows) {
    out << r.step << ',' << r.waypoint_index << ',' << format_double(r.u) << ',' << format_double(r.v);
    for (int k = 0; k < 3; ++k) out << ',' << format_double(r.tip_est[k]);
    for (int k = 0; k < 3; ++k) out << ',' << format_double(r.tip_true[k]);
    for (int k = 0; k < kArmDof; ++k) out << ',' << format_double(r.q_r[k]);
    for (int k = 0; k < kEndoDof; ++k) out << ',' << format_double(r.q_e[k]);
    out << ',' << format_double(r.min_margin) << ',' << format_double(r.alpha) << ',' << r.active_constraints
        << '\n';
  }
  if (!out) throw Error(Errc::invalid_state, "failed writing " + path);
}

void write_detections_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream out = open_output(path);
  out << "frame_index,u,v\n";
  for (const TrajectoryRow& r : log.rows) out << r.step << ',' << format_double(r.u) << ',' << format_double(r.v) << '\n';
  if (!out) throw Error(Errc::invalid_state, "failed writing " + path);
}

TrajectoryLog load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, "cannot open " + path);
  TrajectoryLog log;
  std::string line;
  std::getline(in, line);
  constexpr std::size_t kNumeric = 2 + 2 + 6 + kArmDof + kEndoDof + 2;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == kNumeric) cells.emplace_back();
    if (cells.size() != kNumeric + 1) {
      throw Error(Errc::malformed_row, path + ":" + std::to_string(lineno) + ": wrong column count");
    }
    std::vector<double> v;
    try {
      for (std::size_t k = 0; k < kNumeric; ++k) v.push_back(std::stod(cells[k]));
    } catch (const std::exception&) {
      throw Error(Errc::malformed_row, path + ":" + std::to_string(lineno) + ": bad number");
    }
    TrajectoryRow r;
    r.step = static_cast<int>(v[0]);
    r.waypoint_index = static_cast<int>(v[1]);
    r.u = v[2];
    r.v = v[3];
    r.tip_est = Vec3(v[4], v[5], v[6]);
    r.tip_true = Vec3(v[7], v[8], v[9]);
    for (int k = 0; k < kArmDof; ++k) r.q_r[k] = v[10 + k];
    for (int k = 0; k < kEndoDof; ++k) r.q_e[k] = v[10 + kArmDof + k];
    r.min_margin = v[kNumeric - 2];
    r.alpha = v[kNumeric - 1];
    r.active_constraints = cells.back();
    log.rows.push_back(std::move(r));
  }
  log.completed = !log.rows.empty() && log.rows.back().alpha == 0.0 && log.rows.back().active_constraints == "done";
  return log;
}

Measurement measure_tip(const ControlState& state, const KinContext& kin, const ImagingLoop& imaging,
                        int frame_index) {
  Measurement m;
  const std::vector<Vec3> body = body_points(kin.model, state.q_r, state.q_e, 2 * 20);
  std::optional<RenderNoise> noise = imaging.noise;
  if (noise) noise->seed = noise->seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(frame_index) + 1;
  try {
    m.frame = render_endoscope(imaging.render_view, body, imaging.half_width, noise);
    const BinaryMask mask = segment(m.frame, imaging.threshold);
    m.skeleton = skeletonize(mask);
    if (imaging.on_frame) imaging.on_frame(frame_index, m.frame, m.skeleton);
    // The proximal end is known from joint encoders; the tip is the far end.
    const PixelPoint ref = project(imaging.model_view, body.front());
    m.pixel = find_tip(m.skeleton, ref);
    m.tip_b = tip_to_base(imaging.model_view, imaging.plane_b, m.pixel);
  } catch (const Error& e) {
    throw Error(Errc::imaging_failure, std::string("frame ") + std::to_string(frame_index) + ": " + e.what());
  }
  return m;
}

TrajectoryLog follow_path(const ControlState& initial, const std::vector<Vec3>& path_b, const KinContext& kin,
                          const Environment& env, const ImagingLoop& imaging, const ControllerConfig& cfg) {
  cfg.validate();
  if (path_b.empty()) throw Error(Errc::invalid_argument, "path is empty");
  if (!kin.model.limits.contains(initial.q_r, initial.q_e)) {
    throw Error(Errc::invalid_state, "initial configuration violates joint limits");
  }

  TrajectoryLog log;
  ControlState state = initial;
  state.waypoint_index = std::clamp(state.waypoint_index, 0, static_cast<int>(path_b.size()) - 1);
  const int last = static_cast<int>(path_b.size()) - 1;
  int steps_on_waypoint = 0;
  std::optional<GrayImage> last_frame;

  for (int step = 0;; ++step) {
    Measurement m;
    try {
      m = measure_tip(state, kin, imaging, step);
    } catch (const Error& e) {
      // Re-render for the dump; rendering itself may be what failed.
      std::optional<GrayImage> frame;
      try {
        frame = render_endoscope(imaging.render_view, body_points(kin.model, state.q_r, state.q_e, 40),
                                 imaging.half_width);
      } catch (const Error&) {
        frame = last_frame;
      }
      throw ControlAbort(Errc::imaging_failure, e.what(), log, frame);
    }
    last_frame = m.frame;
    state.tip_estimate = m.tip_b;

    while (state.waypoint_index < last && (m.tip_b - path_b[state.waypoint_index]).norm() <= cfg.waypoint_tol) {
      ++state.waypoint_index;
      steps_on_waypoint = 0;
    }

    TrajectoryRow row;
    row.step = step;
    row.waypoint_index = state.waypoint_index;
    row.u = m.pixel.u;
    row.v = m.pixel.v;
    row.tip_est = m.tip_b;
    row.tip_true = full_fk(kin.model, state.q_r, state.q_e).translation();
    row.q_r = state.q_r;
    row.q_e = state.q_e;
    row.min_margin = min_of(obstacle_margins(state, env, kin, cfg));

    if (state.waypoint_index == last && (m.tip_b - path_b[last]).norm() <= cfg.waypoint_tol) {
      row.alpha = 0.0;
      row.active_constraints = "done";
      log.rows.push_back(std::move(row));
      log.completed = true;
      return log;
    }
    if (steps_on_waypoint >= cfg.max_steps_per_waypoint) {
      throw ControlAbort(Errc::timeout,
                         "step budget exhausted at waypoint " + std::to_string(state.waypoint_index), log);
    }

    const StepResult r = qp_step(state, path_b[state.waypoint_index], kin, env, cfg);
    row.alpha = r.alpha;
    row.active_constraints = join(r.active_constraints);
    log.rows.push_back(std::move(row));

    state.q_r = (state.q_r + r.dq.head<kArmDof>()).cwiseMax(kin.model.limits.arm_min).cwiseMin(kin.model.limits.arm_max);
    state.q_e =
        (state.q_e + r.dq.tail<kEndoDof>()).cwiseMax(kin.model.limits.endo_min).cwiseMin(kin.model.limits.endo_max);
    ++steps_on_waypoint;
  }
}

}  // namespace sinusnav
