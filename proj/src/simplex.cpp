#include "ooskit/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ooskit/errors.hpp"

namespace ooskit::lp {

namespace {

// Tableau rows 0..m-1 hold constraints with the RHS in the last column; row m
// holds reduced costs of the current objective (maximization: a column may
// enter while its reduced cost is positive) with -z in the RHS slot.
struct Tableau {
  Eigen::MatrixXd t;
  std::vector<Eigen::Index> basis;
  Eigen::Index cols;  // number of structural + slack + artificial columns
  long iterations = 0;

  void pivot(Eigen::Index row, Eigen::Index col) {
    t.row(row) /= t(row, col);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (r != row && t(r, col) != 0.0) t.row(r) -= t(r, col) * t.row(row);
    }
    basis[row] = col;
    ++iterations;
  }

  void set_objective(const Eigen::VectorXd& cost) {
    const Eigen::Index m = t.rows() - 1;
    t.row(m).setZero();
    t.row(m).head(cost.size()) = cost.transpose();
    for (Eigen::Index r = 0; r < m; ++r) {
      const double cb = basis[r] < cost.size() ? cost[basis[r]] : 0.0;
      if (cb != 0.0) t.row(m) -= cb * t.row(r);
    }
  }

  // Bland's rule. Returns optimal / unbounded / iteration_limit.
  Status run(Eigen::Index allowed_cols, double tol, long max_iter) {
    const Eigen::Index m = t.rows() - 1;
    const Eigen::Index rhs = t.cols() - 1;
    while (true) {
      if (iterations >= max_iter) return Status::iteration_limit;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t(m, j) > tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Status::optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < m; ++r) {
        if (t(r, enter) > tol) {
          const double ratio = t(r, rhs) / t(r, enter);
          if (ratio < best - 1e-15 ||
              (std::abs(ratio - best) <= 1e-15 && leave >= 0 && basis[r] < basis[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
    }
  }
};

}  // namespace

Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                double pivot_tol) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) throw InvalidArgument("LP dimensions are inconsistent");

  std::vector<Eigen::Index> needs_artificial;
  for (Eigen::Index r = 0; r < m; ++r)
    if (b[r] < 0.0) needs_artificial.push_back(r);
  const Eigen::Index na = static_cast<Eigen::Index>(needs_artificial.size());
  const Eigen::Index cols = n + m + na;

  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  tab.basis.assign(m, 0);
  tab.cols = cols;
  Eigen::Index art = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    tab.t.row(r).head(n) = sign * A.row(r);
    tab.t(r, n + r) = sign;
    tab.t(r, cols) = sign * b[r];
    if (b[r] < 0.0) {
      tab.t(r, n + m + art) = 1.0;
      tab.basis[r] = n + m + art;
      ++art;
    } else {
      tab.basis[r] = n + r;
    }
  }

  const long max_iter = 200 * (m + cols) + 1000;
  Result res;

  if (na > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    phase1.tail(na).setConstant(-1.0);
    tab.set_objective(phase1);
    const Status s = tab.run(cols, pivot_tol, max_iter);
    if (s != Status::optimal) {
      res.status = s == Status::unbounded ? Status::iteration_limit : s;
      res.iterations = tab.iterations;
      return res;
    }
    const double infeas = tab.t(m, cols);  // = sum of artificials
    if (infeas > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
      res.status = Status::infeasible;
      res.iterations = tab.iterations;
      return res;
    }
    // Drive remaining artificials out of the basis.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis[r] < n + m) continue;
      for (Eigen::Index j = 0; j < n + m; ++j) {
        if (std::abs(tab.t(r, j)) > pivot_tol) {
          tab.pivot(r, j);
          break;
        }
      }
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(n) = c;
  tab.set_objective(cost);
  // Artificial columns never re-enter.
  const Status s = tab.run(n + m, pivot_tol, max_iter);
  res.status = s;
  res.iterations = tab.iterations;
  if (s != Status::optimal) return res;
  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis[r] < n) res.x[tab.basis[r]] = tab.t(r, cols);
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace ooskit::lp
