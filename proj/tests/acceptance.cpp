// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include <chrono>
#include <cstdarg>
#include <limits>
#include <optional>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sinusnav/controller.hpp"
#include "sinusnav/experiment.hpp"
#include "sinusnav/imaging.hpp"
#include "sinusnav/planner.hpp"
#include "sinusnav/registration.hpp"

using namespace sinusnav;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

ArmConfig random_arm(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-oracle::kPi, oracle::kPi);
  ArmConfig q;
  for (int k = 0; k < 7; ++k) q[k] = u(rng);
  return q;
}

EndoConfig random_endo(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  return EndoConfig(u(rng), u(rng), u(rng), u(rng));
}

Outcome kinematic_oracle() {
  const RobotModel model;
  const oracle::Chain chain;
  std::mt19937_64 rng(101);
  double worst_t = 0, worst_r = 0, lib_time = 0;
  for (int i = 0; i < 1000; ++i) {
    const ArmConfig q = random_arm(rng);
    const EndoConfig e = random_endo(rng);
    const auto t0 = Clock::now();
    const Mat4 got = full_fk(model, q, e).matrix();
    lib_time += seconds_since(t0);
    const Mat4 want = oracle::full(chain, q, e);
    worst_t = std::max(worst_t, (got.topRightCorner<3, 1>() - want.topRightCorner<3, 1>()).norm());
    worst_r = std::max(worst_r, (got.topLeftCorner<3, 3>() - want.topLeftCorner<3, 3>()).norm());
  }
  return {worst_t <= 1e-9 && worst_r <= 1e-9 && lib_time < 5.0,
          fmt("max translation err %.2e mm, max rotation err %.2e, %.3f s", worst_t, worst_r, lib_time)};
}

Outcome jacobian_consistency() {
  const RobotModel model;
  const oracle::Chain chain;
  std::mt19937_64 rng(202);
  double worst = 0;
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const ArmConfig q = random_arm(rng);
    const EndoConfig e = random_endo(rng);
    const TipJacobian j = jacobian(model, q, e);
    Eigen::Matrix<double, 3, 11> fd;
    for (int k = 0; k < 11; ++k) {
      ArmConfig qp = q, qm = q;
      EndoConfig ep = e, em = e;
      if (k < 7) {
        qp[k] += h;
        qm[k] -= h;
      } else {
        ep[k - 7] += h;
        em[k - 7] -= h;
      }
      fd.col(k) = (oracle::full(chain, qp, ep).topRightCorner<3, 1>() - oracle::full(chain, qm, em).topRightCorner<3, 1>()) / (2 * h);
    }
    worst = std::max(worst, (j - fd).norm() / fd.norm());
  }
  return {worst <= 1e-3, fmt("max relative error %.2e over 100 configs", worst)};
}

Outcome continuum_convergence() {
  EndoGeometry g;
  const double th = oracle::kPi / 2, l = g.flexible_length;
  const Vec3 arc((l / th) * (1 - std::cos(th)), 0.0, (l / th) * std::sin(th));
  std::vector<double> err;
  for (int n : {5, 10, 20, 40}) {
    g.notch_pairs = n;
    err.push_back((flexible_fk(g, th, 0.0).translation() - arc).norm());
  }
  double worst = INFINITY;
  for (std::size_t k = 1; k < err.size(); ++k) worst = std::min(worst, err[k - 1] / err[k]);
  return {worst >= 1.8, fmt("errors %.3e %.3e %.3e %.3e mm, min halving factor %.2f", err[0], err[1], err[2],
                            err[3], worst)};
}

Outcome registration_recovery() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-50, 50), t(-300, 300);
  std::normal_distribution<double> noise(0.0, 0.1);
  double worst_t = 0, worst_r = 0, worst_rms = 0;
  for (int i = 0; i < 100; ++i) {
    const RigidTransform truth(oracle::random_rotation(rng), Vec3(t(rng), t(rng), t(rng)));
    MarkerSet src, dst, noisy;
    for (int k = 0; k < 10; ++k) {
      const std::string label = "m" + std::to_string(k);
      const Vec3 p(u(rng), u(rng), u(rng));
      src.markers[label] = p;
      dst.markers[label] = truth.apply(p);
      noisy.markers[label] = truth.apply(p) + Vec3(noise(rng), noise(rng), noise(rng));
    }
    const RigidFit f = estimate_rigid(src, dst);
    worst_t = std::max(worst_t, (f.transform.translation() - truth.translation()).norm());
    worst_r = std::max(worst_r, (f.transform.rotation() - truth.rotation()).norm());
    worst_rms = std::max(worst_rms, estimate_rigid(src, noisy).rms_residual);
  }
  return {worst_t <= 1e-9 && worst_r <= 1e-9 && worst_rms <= 0.3,
          fmt("noise-free err %.2e mm / %.2e, noisy rms max %.3f mm", worst_t, worst_r, worst_rms)};
}

Outcome planner_safety() {
  const Phantom ph = synth_phantom(PhantomSpec{}, 1);
  PlannerConfig cfg;
  const Environment env = ph.environment(cfg.d_o);
  const PlaneModel plane = fit_plane(ph.landmarks);
  int safe = 0;
  double min_clear = INFINITY, worst_planar = 0, slowest = 0;
  for (int i = 0; i < 50; ++i) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    // Alternate between the servo start and the nostril to exercise real RRT searches.
    const Vec3 start = (i % 2) ? ph.landmarks.nostril : ph.landmarks.start;
    const auto t0 = Clock::now();
    PathP p;
    try {
      p = plan(env, plane, start, ph.landmarks.target, cfg);
    } catch (const Error&) {
      continue;
    }
    slowest = std::max(slowest, seconds_since(t0));
    double clear = INFINITY, planar = 0;
    for (std::size_t k = 0; k < p.waypoints.size(); ++k) {
      planar = std::max(planar, std::abs(plane.residual(p.waypoints[k])));
      if (k == 0) continue;
      const Vec3 a = p.waypoints[k - 1], b = p.waypoints[k];
      const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / 0.1)));
      for (int s = 0; s <= n; ++s) clear = std::min(clear, oracle::min_dist_brute(ph.cloud.points, a + (b - a) * (double(s) / n)));
    }
    min_clear = std::min(min_clear, clear);
    worst_planar = std::max(worst_planar, planar);
    if (clear >= cfg.d_o && planar <= 1e-6) ++safe;
  }
  return {safe == 50 && slowest < 2.0, fmt("%d/50 safe, min clearance %.3f mm, max planarity %.1e mm, slowest %.3f s",
                                           safe, min_clear, worst_planar, slowest)};
}

Outcome tip_localization() {
  const RobotModel model;
  const ArmConfig q0 = ExperimentSpec{}.q0;
  const RigidTransform tip0 = full_fk(model, q0, EndoConfig::Zero());
  const Vec3 x = tip0.rotation().col(0), z = tip0.rotation().col(2);
  Mat3 r;
  r.col(0) = z;
  r.col(1) = x;
  r.col(2) = z.cross(x);
  const ProjectionModel pm = orthographic_view(RigidTransform(r, tip0.translation() - 10 * z), 0.42, 256, 192, 128, 96);

  std::mt19937_64 rng(606);
  std::normal_distribution<double> arm(0.0, 0.03);
  std::uniform_real_distribution<double> endo(-0.6, 0.6);
  int clean_ok = 0, noisy_ok = 0;
  double clean_worst = 0, noisy_worst = 0;
  int made = 0;
  while (made < 100) {
    ArmConfig q = q0;
    for (int k = 0; k < 7; ++k) q[k] += arm(rng);
    const EndoConfig e(endo(rng), endo(rng), endo(rng), endo(rng));
    const auto body = body_points(model, q, e, 40);
    bool inside = true;
    for (const Vec3& p : body) {
      const PixelPoint px = project(pm, p);
      inside = inside && px.u > 5 && px.v > 5 && px.u < pm.width - 6 && px.v < pm.height - 6;
    }
    if (!inside) continue;
    const PixelPoint truth = project(pm, body.back());
    const PixelPoint ref = project(pm, body.front());
    auto detect = [&](const std::optional<RenderNoise>& noise, double& worst) {
      try {
        const BinaryMask skel = skeletonize(segment(render_endoscope(pm, body, 2.0, noise), 128));
        const PixelPoint got = find_tip(skel, ref);
        const double err = std::hypot(got.u - truth.u, got.v - truth.v);
        worst = std::max(worst, err);
        return err;
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    clean_ok += detect(std::nullopt, clean_worst) <= 2.0;
    noisy_ok += detect(RenderNoise{static_cast<std::uint64_t>(made) + 1, 10.0}, noisy_worst) <= 3.0;
    ++made;
  }
  return {clean_ok == 100 && noisy_ok >= 95,
          fmt("noise-free %d/100 within 2 px (max %.2f px), sigma 10: %d/100 within 3 px (max %.2f px)", clean_ok,
              clean_worst, noisy_ok, noisy_worst)};
}

Outcome qp_optimality() {
  const KinContext kin{RobotModel{}, RigidTransform::identity()};
  PointCloud far;
  far.points = {Vec3(1e4, 1e4, 1e4)};
  const Environment env(far, 1.5);
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst_pinv = 0;
  for (int i = 0; i < 50; ++i) {
    ControlState s;
    s.q_r = ExperimentSpec{}.q0 + 0.3 * ArmConfig::NullaryExpr([&](Eigen::Index) { return u(rng); });
    s.q_e = 0.4 * EndoConfig(u(rng), u(rng), u(rng), u(rng));
    s.tip_estimate = full_fk(kin.model, s.q_r, s.q_e).translation();
    const Vec3 dx = 0.4 * Vec3(u(rng), u(rng), u(rng)).normalized();
    const StepResult r = qp_step(s, s.tip_estimate + dx, kin, env, ControllerConfig{});
    const TipJacobian j = jacobian(kin.model, s.q_r, s.q_e);
    const JointVector pinv = j.transpose() * (j * j.transpose()).inverse() * dx;
    worst_pinv = std::max(worst_pinv, r.active_constraints.empty() ? (r.dq - pinv).norm() : INFINITY);
  }

  // Constrained 2-DOF toys against an exhaustive 1-D sweep of the feasible line.
  double worst_grid = 0;
  int constrained = 0;
  for (int i = 0; i < 40; ++i) {
    Eigen::MatrixXd jt(1, 2);
    jt << 0.5 + std::abs(u(rng)), u(rng);
    const double s0 = u(rng), s1 = u(rng);
    // Park both joints within 0.03 of a limit so the box binds.
    const Eigen::Vector2d q(std::copysign(0.97 + 0.03 * std::abs(s0), s0), std::copysign(0.97 + 0.03 * std::abs(s1), s1));
    const Eigen::Vector2d lower(-1, -1), upper(1, 1);
    const double dx = 0.08 * u(rng), clip = 0.05;
    RateQpResult r;
    try {
      r = solve_rate_qp(jt, Eigen::VectorXd::Constant(1, dx), q, lower, upper, Eigen::MatrixXd::Identity(2, 2), clip);
    } catch (const Error&) {
      continue;
    }
    const Eigen::Vector2d lo = (lower - q).cwiseMax(-clip), hi = (upper - q).cwiseMin(clip);
    double best = INFINITY;
    Eigen::Vector2d arg;
    for (int k = 0; k <= 200000; ++k) {
      Eigen::Vector2d d;
      d[1] = lo[1] + (hi[1] - lo[1]) * k / 200000.0;
      d[0] = (dx - jt(0, 1) * d[1]) / jt(0, 0);
      if (d[0] < lo[0] || d[0] > hi[0]) continue;
      if (d.squaredNorm() < best) {
        best = d.squaredNorm();
        arg = d;
      }
    }
    if (!std::isfinite(best)) continue;
    constrained += !r.active_constraints.empty();
    worst_grid = std::max(worst_grid, (r.dq - arg).norm());
  }
  return {worst_pinv <= 1e-8 && worst_grid <= 1e-3 && constrained > 0,
          fmt("pseudo-inverse max err %.2e, grid oracle max err %.2e (%d constrained cases)", worst_pinv, worst_grid,
              constrained)};
}

ExperimentOutcome run_default(const fs::path& out) {
  ExperimentSpec s;
  s.trials = 5;
  s.seed = 2024;
  fs::remove_all(out);
  s.out_dir = out.string();
  return run_experiment(s);
}

Outcome closed_loop(const ExperimentOutcome& o) {
  const ExperimentSpec s;
  const RobotModel model;
  double worst_px = 0, slowest = 0, min_margin = INFINITY;
  bool margins_ok = true;
  for (std::size_t i = 0; i < o.report.trials.size(); ++i) {
    const TrialResult& t = o.report.trials[i];
    if (!t.success) continue;
    slowest = std::max(slowest, t.wall_seconds);
    for (double p : t.waypoint_pixel_errors) worst_px = std::max(worst_px, p);
    const Phantom ph = synth_phantom(s.phantom, t.seed);
    const RigidTransform to_p = t.base_from_phantom.inverse();
    for (const TrajectoryRow& r : o.logs[i].log.rows) {
      for (const Vec3& p : body_points(model, r.q_r, r.q_e, s.controller.delta)) {
        const double m = oracle::min_dist_brute(ph.cloud.points, to_p.apply(p));
        min_margin = std::min(min_margin, m);
        margins_ok = margins_ok && m > s.controller.d_o;
      }
    }
  }
  const bool pass = o.report.successes == 5 && o.report.mean_rmse <= 2.0 && margins_ok && slowest < 60.0 &&
                    worst_px <= 3.0;
  return {pass, fmt("%d/5 completed, mean RMSE %.3f mm, worst waypoint %.2f px, min true margin %.3f mm, slowest %.2f s",
                    o.report.successes, o.report.mean_rmse, worst_px, min_margin, slowest)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& first) {
  const fs::path second = fs::temp_directory_path() / "sinusnav_accept_b";
  run_default(second);
  int files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file() || entry.path().filename() == "timing.json") continue;
    const fs::path rel = fs::relative(entry.path(), first);
    if (rel.string().rfind("config.json", 0) == 0) continue;  // records the output directory
    ++files;
    differ += slurp(entry.path()) != slurp(second / rel);
  }
  return {files > 0 && differ == 0, fmt("%d files compared, %d differ", files, differ)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d [%s]: %s - %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "kinematic oracle", kinematic_oracle);
  report(2, "jacobian consistency", jacobian_consistency);
  report(3, "continuum convergence", continuum_convergence);
  report(4, "registration recovery", registration_recovery);
  report(5, "planner safety", planner_safety);
  report(6, "tip localization", tip_localization);
  report(7, "qp optimality", qp_optimality);

  const fs::path first = fs::temp_directory_path() / "sinusnav_accept_a";
  std::optional<ExperimentOutcome> run;
  report(8, "closed-loop accuracy", [&] {
    run = run_default(first);
    return closed_loop(*run);
  });
  report(9, "determinism", [&] { return determinism(first); });
  return failures == 0 ? 0 : 1;
}
