#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sinusnav/errors.hpp"
#include "sinusnav/phantom.hpp"
#include "sinusnav/planner.hpp"

using namespace sinusnav;

namespace {

// Eight corners of a 200 mm cube: effectively empty inside.
PointCloud open_box() {
  PointCloud c;
  for (int k = 0; k < 8; ++k) c.points.emplace_back(k & 1 ? 100 : -100, k & 2 ? 100 : -100, k & 4 ? 100 : -100);
  return c;
}

PlaneModel xy_plane() {
  Landmarks lm;
  lm.ostium = Vec3(0, 0, 0);
  lm.nostril = Vec3(1, 0, 0);
  lm.target = Vec3(0, 1, 0);
  return fit_plane(lm);
}

double brute_clearance(const PathP& path, const std::vector<Vec3>& cloud, double step) {
  double best = INFINITY;
  for (std::size_t k = 0; k + 1 < path.waypoints.size(); ++k) {
    const Vec3 a = path.waypoints[k], b = path.waypoints[k + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int i = 0; i <= n; ++i) best = std::min(best, oracle::min_dist_brute(cloud, a + (b - a) * (double(i) / n)));
  }
  if (path.waypoints.size() == 1) best = oracle::min_dist_brute(cloud, path.waypoints[0]);
  return best;
}

}  // namespace

TEST(Plan, StartEqualsTarget) {
  const Environment env(open_box(), 1.5);
  const PathP p = plan(env, xy_plane(), Vec3(1, 2, 0), Vec3(1, 2, 0), PlannerConfig{});
  ASSERT_EQ(p.waypoints.size(), 1u);
  EXPECT_EQ(p.waypoints[0], Vec3(1, 2, 0));
}

TEST(Plan, OpenSpaceNearlyStraight) {
  const Environment env(open_box(), 1.5);
  const Vec3 s(-40, -30, 0), t(45, 20, 0);
  const PathP p = plan(env, xy_plane(), s, t, PlannerConfig{});
  EXPECT_EQ(p.waypoints.front(), s);
  EXPECT_EQ(p.waypoints.back(), t);
  EXPECT_LE(p.length(), 1.05 * (t - s).norm());
}

TEST(Plan, PhantomPathIsSafePlanarAndSpaced) {
  const Phantom ph = synth_phantom(PhantomSpec{}, 1);
  PlannerConfig cfg;
  const Environment env = ph.environment(cfg.d_o);
  const PlaneModel plane = fit_plane(ph.landmarks);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const PathP p = plan(env, plane, ph.landmarks.start, ph.landmarks.target, cfg);
    EXPECT_LT((p.waypoints.front() - ph.landmarks.start).norm(), 1e-9);
    EXPECT_LT((p.waypoints.back() - ph.landmarks.target).norm(), 1e-9);
    EXPECT_GE(brute_clearance(p, ph.cloud.points, 0.1), cfg.d_o);
    for (std::size_t k = 0; k < p.waypoints.size(); ++k) {
      EXPECT_LE(std::abs(plane.residual(p.waypoints[k])), 1e-6);
      EXPECT_TRUE(ph.spec.contains(p.waypoints[k]));
      if (k > 0) {
        EXPECT_LE((p.waypoints[k] - p.waypoints[k - 1]).norm(), cfg.step_size + 1e-9);
      }
    }
  }
}

TEST(Plan, DeterministicForSeed) {
  const Phantom ph = synth_phantom(PhantomSpec{}, 2);
  PlannerConfig cfg;
  cfg.seed = 99;
  const Environment env = ph.environment(cfg.d_o);
  const PlaneModel plane = fit_plane(ph.landmarks);
  const PathP a = plan(env, plane, ph.landmarks.nostril, ph.landmarks.target, cfg);
  const PathP b = plan(env, plane, ph.landmarks.nostril, ph.landmarks.target, cfg);
  EXPECT_EQ(a.waypoints, b.waypoints);
}

TEST(Plan, EndpointErrors) {
  const Phantom ph = synth_phantom(PhantomSpec{}, 3);
  PlannerConfig cfg;
  const Environment env = ph.environment(cfg.d_o);
  const PlaneModel plane = fit_plane(ph.landmarks);
  auto code = [&](const Vec3& s, const Vec3& t, const PlannerConfig& c) {
    try {
      plan(env, plane, s, t, c);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invalid_state;
  };
  EXPECT_EQ(code(Vec3(1.5, 1.9, 0), ph.landmarks.target, cfg), Errc::infeasible_endpoint);
  EXPECT_EQ(code(ph.landmarks.start, Vec3(10, 0, 0.5), cfg), Errc::invalid_argument);
  PlannerConfig tiny = cfg;
  tiny.max_iters = 1;
  tiny.goal_bias = 0.0;
  EXPECT_EQ(code(ph.landmarks.nostril, ph.landmarks.target, tiny), Errc::no_path_found);
}

TEST(Plan, SubMicronOffPlaneEndpointsAreProjected) {
  const Environment env(open_box(), 1.5);
  const PathP p = plan(env, xy_plane(), Vec3(0, 0, 5e-7), Vec3(10, 0, -5e-7), PlannerConfig{});
  EXPECT_EQ(p.waypoints.front().z(), 0.0);
  EXPECT_EQ(p.waypoints.back().z(), 0.0);
}

TEST(EdgeClear, Cases) {
  PointCloud c = open_box();
  c.points.emplace_back(5, 0.5, 0);
  const Environment env(c, 1.5);
  const PlaneModel plane = xy_plane();
  EXPECT_TRUE(edge_clear(env, plane, Vec3(0, 10, 0), Vec3(0, 10, 0), 1.5, 0.1));
  EXPECT_FALSE(edge_clear(env, plane, Vec3(0, 0, 0), Vec3(10, 0, 0), 1.5, 0.1));
  const bool coarse = edge_clear(env, plane, Vec3(-20, 10, 0), Vec3(20, 12, 0), 1.5, 0.1);
  const bool fine = edge_clear(env, plane, Vec3(-20, 10, 0), Vec3(20, 12, 0), 1.5, 0.01);
  EXPECT_TRUE(coarse);
  EXPECT_EQ(coarse, fine);
}

TEST(Shortcut, TwoPointsUnchanged) {
  const Environment env(open_box(), 1.5);
  PathP p{{Vec3(0, 0, 0), Vec3(1.5, 0, 0)}};
  EXPECT_EQ(shortcut(p, env, xy_plane(), PlannerConfig{}).waypoints, p.waypoints);
}

TEST(Shortcut, ZigZagShrinks) {
  const Environment env(open_box(), 1.5);
  PathP p;
  for (int k = 0; k <= 10; ++k) p.waypoints.emplace_back(2.0 * k, (k % 2) ? 1.5 : -1.5, 0.0);
  const PathP s = shortcut(p, env, xy_plane(), PlannerConfig{});
  EXPECT_LT(s.length(), p.length());
  EXPECT_EQ(s.waypoints.front(), p.waypoints.front());
  EXPECT_EQ(s.waypoints.back(), p.waypoints.back());
  for (std::size_t k = 1; k < s.waypoints.size(); ++k) {
    EXPECT_LE((s.waypoints[k] - s.waypoints[k - 1]).norm(), 2.0 + 1e-9);
  }
}

TEST(Shortcut, KeepsClearanceInCorridor) {
  const Phantom ph = synth_phantom(PhantomSpec{}, 4);
  PlannerConfig cfg;
  const Environment env = ph.environment(cfg.d_o);
  const PlaneModel plane = fit_plane(ph.landmarks);
  // Hand-made path that hugs the corridor axis with small wiggles.
  PathP p;
  for (double x = -6; x <= 8.0; x += 1.0) p.waypoints.emplace_back(x, (std::fmod(x, 2.0) == 0 ? 0.2 : -0.2), 0.0);
  ASSERT_GE(brute_clearance(p, ph.cloud.points, 0.1), cfg.d_o);
  const PathP s = shortcut(p, env, plane, cfg);
  EXPECT_LE(s.length(), p.length());
  EXPECT_GE(brute_clearance(s, ph.cloud.points, 0.1), cfg.d_o);
}

TEST(Resample, RespectsSpacing) {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(10, 3, 0)};
  const auto r = resample(pts, 2.0);
  EXPECT_EQ(r.front(), pts.front());
  EXPECT_EQ(r.back(), pts.back());
  for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LE((r[k] - r[k - 1]).norm(), 2.0 + 1e-9);
  EXPECT_NEAR(polyline_length(r), 13.0, 1e-9);
}

TEST(PlannerConfig, Validation) {
  PlannerConfig c;
  c.step_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = PlannerConfig{};
  c.goal_bias = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = PlannerConfig{};
  c.d_o = 0;
  EXPECT_THROW(c.validate(), Error);
}
