#include "sinusnav/qp.hpp"

#include <cmath>
#include <limits>

#include "sinusnav/errors.hpp"

namespace sinusnav {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working state: J = L^-T Q, R upper triangular, active constraint ids in
// `active` (equalities first), multipliers in u.
class DualActiveSet {
 public:
  explicit DualActiveSet(const MatrixXd& G) : n_(static_cast<int>(G.rows())) {
    const Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
      throw Error(Errc::invalid_argument, "QP weight matrix is not positive definite");
    }
    J_ = llt.matrixU().solve(MatrixXd::Identity(n_, n_));  // L^-T
    R_ = MatrixXd::Zero(n_, n_);
    d_ = VectorXd::Zero(n_);
    r_ = VectorXd::Zero(n_);
    u_ = VectorXd::Zero(n_ + 1);
    active_.assign(static_cast<std::size_t>(n_ + 1), -1);
  }

  int size() const { return iq_; }
  int active(int k) const { return active_[static_cast<std::size_t>(k)]; }
  double multiplier(int k) const { return u_[k]; }

  // Step direction in primal (z) and dual (r) space for constraint normal np.
  VectorXd step(const VectorXd& np) {
    d_ = J_.transpose() * np;
    VectorXd z = VectorXd::Zero(n_);
    for (int j = iq_; j < n_; ++j) z += J_.col(j) * d_[j];
    for (int i = iq_ - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq_; ++j) sum += R_(i, j) * r_[j];
      r_[i] = (d_[i] - sum) / R_(i, i);
    }
    return z;
  }

  const VectorXd& r() const { return r_; }
  VectorXd& u() { return u_; }

  bool add(int id) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d_[j - 1];
      double ss = d_[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d_[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d_[j - 1] = -h;
      } else {
        d_[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d_[i];
    active_[static_cast<std::size_t>(iq_ - 1)] = id;
    if (std::abs(d_[iq_ - 1]) <= std::numeric_limits<double>::epsilon() * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d_[iq_ - 1]));
    return true;
  }

  void remove(int id) {
    int qq = -1;
    for (int k = 0; k < iq_; ++k) {
      if (active_[static_cast<std::size_t>(k)] == id) {
        qq = k;
        break;
      }
    }
    if (qq < 0) return;
    for (int i = qq; i < iq_ - 1; ++i) {
      active_[static_cast<std::size_t>(i)] = active_[static_cast<std::size_t>(i + 1)];
      u_[i] = u_[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    active_[static_cast<std::size_t>(iq_ - 1)] = active_[static_cast<std::size_t>(iq_)];
    u_[iq_ - 1] = u_[iq_];
    active_[static_cast<std::size_t>(iq_)] = -1;
    u_[iq_] = 0.0;
    for (int j = 0; j < iq_; ++j) R_(j, iq_ - 1) = 0.0;
    --iq_;
    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

 private:
  int n_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  MatrixXd J_, R_;
  VectorXd d_, r_, u_;
  std::vector<int> active_;
};

}  // namespace

BoxQpResult solve_box_eq_qp(const MatrixXd& G, const MatrixXd& E, const VectorXd& e, const VectorXd& lo,
                            const VectorXd& hi) {
  const int n = static_cast<int>(G.rows());
  const int me = static_cast<int>(E.rows());
  if (G.cols() != n || E.cols() != n || e.size() != me || lo.size() != n || hi.size() != n) {
    throw Error(Errc::invalid_argument, "QP dimension mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) throw Error(Errc::infeasible_limits, "empty box for variable " + std::to_string(i));
  }

  DualActiveSet ws(G);
  VectorXd x = VectorXd::Zero(n);
  const double scale = 1.0 + std::max(e.cwiseAbs().maxCoeff(), std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff()));
  const double tol = 1e-13 * scale;

  // Equalities enter with full steps and are never dropped.
  for (int i = 0; i < me; ++i) {
    const VectorXd np = E.row(i).transpose();
    const VectorXd z = ws.step(np);
    const double zn = z.dot(np);
    const double t = std::abs(zn) > 0.0 ? (e[i] - np.dot(x)) / zn : 0.0;
    x += t * z;
    ws.u()[ws.size()] = t;
    for (int k = 0; k < ws.size(); ++k) ws.u()[k] -= t * ws.r()[k];
    if (!ws.add(i)) throw Error(Errc::invalid_argument, "equality constraints are linearly dependent");
  }

  // Inequality ids: me + i  ->  x_i >= lo_i ;  me + n + i  ->  -x_i >= -hi_i
  auto normal = [&](int id) {
    VectorXd np = VectorXd::Zero(n);
    const int k = id - me;
    np[k % n] = k < n ? 1.0 : -1.0;
    return np;
  };
  auto slack = [&](int id, const VectorXd& at) {
    const int k = id - me;
    return k < n ? at[k] - lo[k] : hi[k - n] - at[k - n];
  };

  int iterations = 0;
  const int max_iterations = 50 * (n + me + 2);
  for (;;) {
    int p = -1;
    double worst = -tol;
    for (int id = me; id < me + 2 * n; ++id) {
      const double s = slack(id, x);
      if (s < worst) {
        worst = s;
        p = id;
      }
    }
    if (p < 0) break;

    const VectorXd np = normal(p);
    ws.u()[ws.size()] = 0.0;
    double sp = slack(p, x);
    for (;;) {
      if (++iterations > max_iterations) throw Error(Errc::infeasible_limits, "QP active set failed to converge");
      const VectorXd z = ws.step(np);
      double t1 = kInf;
      int drop = -1;
      for (int k = me; k < ws.size(); ++k) {
        const double rk = ws.r()[k];
        if (rk > 0.0 && ws.multiplier(k) / rk < t1) {
          t1 = ws.multiplier(k) / rk;
          drop = ws.active(k);
        }
      }
      const double zn = z.dot(np);
      const double t2 = z.norm() > 1e-14 && zn > 0.0 ? -sp / zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) throw Error(Errc::infeasible_limits, "joint limits leave no feasible step");

      if (t2 == kInf) {
        for (int k = 0; k < ws.size(); ++k) ws.u()[k] -= t * ws.r()[k];
        ws.u()[ws.size()] += t;
        ws.remove(drop);
        continue;
      }
      x += t * z;
      for (int k = 0; k < ws.size(); ++k) ws.u()[k] -= t * ws.r()[k];
      ws.u()[ws.size()] += t;
      if (t == t2) {
        if (!ws.add(p)) throw Error(Errc::infeasible_limits, "degenerate active set");
        break;
      }
      ws.remove(drop);
      sp = slack(p, x);
    }
  }

  BoxQpResult out;
  out.iterations = iterations;
  // Snap variables sitting on an active bound exactly onto it.
  for (int k = me; k < ws.size(); ++k) {
    const int j = ws.active(k) - me;
    if (j < n) {
      x[j] = lo[j];
      out.at_lower.push_back(j);
    } else {
      x[j - n] = hi[j - n];
      out.at_upper.push_back(j - n);
    }
  }
  out.x = x;
  out.objective = 0.5 * x.dot(G * x);
  return out;
}

}  // namespace sinusnav
