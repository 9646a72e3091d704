#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fvarseg/error.hpp"

namespace fvarseg {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

/// Dense two-phase primal simplex for
///
///   minimise c^T x  subject to  A x <= b,  x >= 0.
///
/// Pivoting uses Dantzig's rule with lowest-index tie-breaking and falls back
/// to Bland's rule after a run of degenerate pivots. The final basic solution
/// is recomputed from the original data by an LU solve on the optimal basis.
class DenseSimplex {
 public:
  struct Options {
    double pivot_tol = 1e-11;
    double cost_tol = 1e-10;
    double feas_tol = 1e-9;
    int max_iterations = 0;  // 0: 50 * (rows + columns)
    int degenerate_switch = 50;
  };

  DenseSimplex() = default;
  explicit DenseSimplex(Options opt) : opt_(opt) {}

  [[nodiscard]] LpResult solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c) const {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n) throw ContractError("DenseSimplex: dimension mismatch");

    // Columns: [x (n) | slack (m) | artificial (n_art)] | rhs
    std::vector<int> art_row;
    for (int i = 0; i < m; ++i) {
      if (b(i) < 0) art_row.push_back(i);
    }
    const int n_art = static_cast<int>(art_row.size());
    const int cols = n + m + n_art;
    Tableau T(m + 1, cols + 1);
    T.setZero();
    std::vector<int> basis(static_cast<std::size_t>(m), -1);
    int a = 0;
    for (int i = 0; i < m; ++i) {
      const double sign = b(i) < 0 ? -1.0 : 1.0;
      T.row(i).head(n) = sign * A.row(i);
      T(i, n + i) = sign;
      T(i, cols) = sign * b(i);
      if (b(i) < 0) {
        T(i, n + m + a) = 1.0;
        basis[static_cast<std::size_t>(i)] = n + m + a;
        ++a;
      } else {
        basis[static_cast<std::size_t>(i)] = n + i;
      }
    }

    LpResult out;
    const int limit = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m + cols);
    int iters = 0;

    if (n_art > 0) {
      // Phase 1: minimise the sum of artificials.
      T.row(m).setZero();
      for (int k = 0; k < n_art; ++k) T(m, n + m + k) = 1.0;
      for (int i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] >= n + m) T.row(m) -= T.row(i);
      }
      const LpStatus st = iterate(T, basis, m, cols, cols, iters, limit);
      if (st == LpStatus::iteration_limit) {
        out.status = st;
        out.iterations = iters;
        return out;
      }
      if (-T(m, cols) > opt_.feas_tol * std::max(1.0, b.cwiseAbs().maxCoeff())) {
        out.status = LpStatus::infeasible;
        out.iterations = iters;
        return out;
      }
      // Drive zero-level artificials out of the basis where possible.
      for (int i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] < n + m) continue;
        int enter = -1;
        double best = opt_.pivot_tol;
        for (int j = 0; j < n + m; ++j) {
          if (std::abs(T(i, j)) > best) {
            best = std::abs(T(i, j));
            enter = j;
          }
        }
        if (enter >= 0) pivot(T, basis, i, enter);
      }
    }

    // Phase 2 objective row: reduced costs c_j - c_B^T B^{-1} a_j.
    T.row(m).setZero();
    T.row(m).head(n) = c.transpose();
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<std::size_t>(i)];
      if (j < n && c(j) != 0.0) T.row(m) -= c(j) * T.row(i);
    }
    const LpStatus st = iterate(T, basis, m, n + m, cols, iters, limit);
    out.iterations = iters;
    out.status = st;
    if (st != LpStatus::optimal) return out;

    out.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<std::size_t>(i)];
      if (j < n) out.x(j) = T(i, cols);
    }
    refine(A, b, basis, n, m, out.x);
    out.objective = c.dot(out.x);
    return out;
  }

 private:
  using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  static void pivot(Tableau& T, std::vector<int>& basis, int row, int col) {
    const double piv = T(row, col);
    T.row(row) /= piv;
    const Eigen::VectorXd colv = T.col(col);
    for (int i = 0; i < T.rows(); ++i) {
      if (i == row) continue;
      const double f = colv(i);
      if (f != 0.0) T.row(i) -= f * T.row(row);
    }
    T(row, col) = 1.0;
    basis[static_cast<std::size_t>(row)] = col;
  }

  // Columns [0, enter_limit) may enter; the rhs lives in column `rhs`.
  LpStatus iterate(Tableau& T, std::vector<int>& basis, int m, int enter_limit, int rhs, int& iters, int limit) const {
    int degenerate_run = 0;
    for (;;) {
      if (iters >= limit) return LpStatus::iteration_limit;
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      int enter = -1;
      double best = -opt_.cost_tol;
      for (int j = 0; j < enter_limit; ++j) {
        const double rc = T(m, j);
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return LpStatus::optimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = T(i, enter);
        if (a <= opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, T(i, rhs)) / a;
        if (ratio < best_ratio - 1e-14 ||
            (ratio <= best_ratio + 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = std::min(ratio, best_ratio);
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      degenerate_run = (best_ratio <= 1e-14) ? degenerate_run + 1 : 0;
      pivot(T, basis, leave, enter);
      ++iters;
    }
  }

  // Recompute basic variables from the original constraints A x + s = b.
  void refine(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<int>& basis,
              int n, int m, Eigen::VectorXd& x) const {
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<std::size_t>(i)];
      if (j >= n + m) return;  // redundant row kept an artificial
      if (j < n) {
        B.col(i) = A.col(j);
      } else {
        B.col(i).setZero();
        B(j - n, i) = 1.0;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::VectorXd xb = lu.solve(b);
    if (!xb.allFinite() || (B * xb - b).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
      return;
    }
    Eigen::VectorXd refined = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<std::size_t>(i)];
      if (xb(i) < -opt_.feas_tol) return;
      if (j < n) refined(j) = std::max(0.0, xb(i));
    }
    x = refined;
  }

  Options opt_{};
};

}  // namespace fvarseg
