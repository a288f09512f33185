// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the library's kinematics.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using M4 = Eigen::Matrix4d;
using V3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline double deg(double d) { return d * kPi / 180.0; }

inline M4 rz(double t) {
  M4 m = M4::Identity();
  m(0, 0) = std::cos(t);
  m(0, 1) = -std::sin(t);
  m(1, 0) = std::sin(t);
  m(1, 1) = std::cos(t);
  return m;
}
inline M4 rx(double t) {
  M4 m = M4::Identity();
  m(1, 1) = std::cos(t);
  m(1, 2) = -std::sin(t);
  m(2, 1) = std::sin(t);
  m(2, 2) = std::cos(t);
  return m;
}
inline M4 ry(double t) {
  M4 m = M4::Identity();
  m(0, 0) = std::cos(t);
  m(0, 2) = std::sin(t);
  m(2, 0) = -std::sin(t);
  m(2, 2) = std::cos(t);
  return m;
}
inline M4 tz(double d) {
  M4 m = M4::Identity();
  m(2, 3) = d;
  return m;
}

// Closed-form standard D-H link matrix.
inline M4 dh(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  M4 m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0, sa, ca, d,
       0, 0, 0, 1;
  return m;
}

struct ArmRow {
  double a, alpha_deg, d, offset_deg;
};

inline const std::array<ArmRow, 7>& arm_table() {
  static const std::array<ArmRow, 7> t{{{0, 0, 345, 0},
                                        {0, 90, 65, 0},
                                        {0, -90, 395, 180},
                                        {20, -90, -55, 180},
                                        {20, 90, 385, 180},
                                        {0, 90, 100, 90},
                                        {110, 90, 55, 0}}};
  return t;
}

inline M4 arm(const Eigen::Matrix<double, 7, 1>& q) {
  M4 t = M4::Identity();
  for (int i = 0; i < 7; ++i) {
    const ArmRow& r = arm_table()[static_cast<std::size_t>(i)];
    t = t * dh(r.a, deg(r.alpha_deg), r.d, q[i] + deg(r.offset_deg));
  }
  return t;
}

// Notched section: N pairs, each notch centred in its half-segment.
inline M4 flex(int n, double length, double t1, double t2) {
  const double h = length / (2.0 * n);
  const M4 pair = tz(h / 2) * ry(t1 / n) * tz(h) * rx(t2 / n) * tz(h / 2);
  M4 t = M4::Identity();
  for (int k = 0; k < n; ++k) t = t * pair;
  return t;
}

inline M4 wrist(double dc, double df, double t3, double t4) { return tz(dc) * rx(t3) * ry(t4) * tz(df); }

struct Chain {
  int n = 10;
  double length = 20, dc = 5, df = 5, mount = 30, theta_rz = 0.0597;
  std::array<double, 4> kc{0.7255, 0.7255, 0.3435, 0.7793};
};

inline M4 full(const Chain& c, const Eigen::Matrix<double, 7, 1>& qr, const Eigen::Vector4d& qe_raw) {
  Eigen::Vector4d qe;
  for (int k = 0; k < 4; ++k) qe[k] = qe_raw[k] * (1.0 + c.kc[static_cast<std::size_t>(k)]);
  return arm(qr) * tz(c.mount) * flex(c.n, c.length, qe[0], qe[1]) * wrist(c.dc, c.df, qe[2], qe[3]) *
         rz(c.theta_rz);
}

inline double min_dist_brute(const std::vector<V3>& cloud, const V3& p) {
  double best = INFINITY;
  for (const V3& c : cloud) {
    const double dx = c.x() - p.x(), dy = c.y() - p.y(), dz = c.z() - p.z();
    best = std::min(best, (dx * dx + dy * dy) + dz * dz);
  }
  return std::sqrt(best);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace oracle
