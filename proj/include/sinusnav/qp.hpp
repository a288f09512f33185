#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sinusnav {

struct BoxQpResult {
  Eigen::VectorXd x;
  std::vector<int> at_lower;  // variable indices whose lower bound is active
  std::vector<int> at_upper;
  double objective = 0.0;     // 0.5 x^T G x
  int iterations = 0;
};

/// min 0.5 x^T G x  s.t.  E x = e,  lo <= x <= hi
///
/// Goldfarb-Idnani dual active set: starts from the unconstrained minimum,
/// adds the most violated constraint each round and drops constraints whose
/// multipliers would turn negative. G must be symmetric positive definite and
/// the rows of E linearly independent. Throws infeasible_limits when no point
/// satisfies both the equalities and the box.
BoxQpResult solve_box_eq_qp(const Eigen::MatrixXd& G, const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

}  // namespace sinusnav
