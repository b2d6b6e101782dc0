#pragma once

#include <Eigen/Core>

namespace ooskit::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::iteration_limit;
  double objective = 0.0;
  Eigen::VectorXd x;
  long iterations = 0;
};

/// maximize c'x subject to A x <= b, x >= 0.
///
/// Dense two-phase tableau simplex with Bland's rule. Right-hand sides may be
/// negative; phase one introduces artificials for those rows.
Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                double pivot_tol = 1e-10);

}  // namespace ooskit::lp
