#pragma once

#include <string>
#include <vector>

#include "fvarseg/error.hpp"
#include "fvarseg/parallel.hpp"
#include "fvarseg/simplex.hpp"
#include "fvarseg/spectral.hpp"

namespace fvarseg {

/// Yule-Walker pair for a VAR(d): Gmat (pd x pd) and gvec (pd x p).
///
/// Block (r, c) of Gmat is Gamma(r - c) and block r of gvec is Gamma(r + 1),
/// with Gamma(l) = E(xi_{t-l} xi_t^T). Then Gmat * beta = gvec for
/// beta = [A_1, ..., A_d]^T.
struct YuleWalkerSystem {
  Matrix Gmat;
  Matrix gvec;
  int p = 0;
  int d = 0;
};

[[nodiscard]] inline YuleWalkerSystem build_yule_walker(const LagCovSet& acv, int d) {
  if (d < 1) throw ContractError("build_yule_walker: VAR order d must be >= 1");
  if (acv.max_lag() < d) {
    throw ContractError("build_yule_walker: lags 0.." + std::to_string(d) + " required, have 0.." +
                        std::to_string(acv.max_lag()));
  }
  const int p = acv.dim();
  YuleWalkerSystem sys{Matrix(p * d, p * d), Matrix(p * d, p), p, d};
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) sys.Gmat.block(r * p, c * p, p, p) = acv.at(r - c);
    sys.gvec.block(r * p, 0, p, p) = acv.nonnegative(r + 1);
  }
  return sys;
}

/// Residual Gmat * beta - gvec.
[[nodiscard]] inline Matrix yule_walker_residual(const YuleWalkerSystem& sys, const Matrix& beta) {
  return sys.Gmat * beta - sys.gvec;
}

/// Constrained l1 estimate of the VAR transition matrices.
struct VarEstimate {
  Matrix beta;  // pd x p, [A_1, ..., A_d]^T
  double lambda = 0.0;
  int anchor = 0;
  double residual = 0.0;  // |Gmat beta - gvec|_inf
  int lp_iterations = 0;
};

/// Solves, for each column j independently,
///   min |b|_1  subject to  |Gmat b - gvec_{.j}|_inf <= lambda
/// as a linear program in (u, w) >= 0 with b = u - w.
[[nodiscard]] inline VarEstimate l1_yule_walker(const YuleWalkerSystem& sys, double lambda,
                                                int workers = 1) {
  if (!(lambda > 0.0)) throw ContractError("l1_yule_walker: lambda must be positive");
  const auto k = static_cast<int>(sys.Gmat.rows());
  const auto cols = static_cast<int>(sys.gvec.cols());
  if (sys.Gmat.cols() != k || sys.gvec.rows() != k) {
    throw ContractError("l1_yule_walker: inconsistent system dimensions");
  }

  Matrix A(2 * k, 2 * k);
  A << sys.Gmat, -sys.Gmat, -sys.Gmat, sys.Gmat;
  const Vector cost = Vector::Ones(2 * k);

  VarEstimate est;
  est.beta = Matrix::Zero(k, cols);
  est.lambda = lambda;
  std::vector<int> iterations(static_cast<std::size_t>(cols), 0);
  const DenseSimplex solver;

  parallel_for(static_cast<std::size_t>(cols), workers, [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const Vector g = sys.gvec.col(j);
    if (g.cwiseAbs().maxCoeff() <= lambda) {
      iterations[jj] = 0;  // zero is feasible and has the least l1 norm
      return;
    }
    Vector b(2 * k);
    b << g.array() + lambda, lambda - g.array();
    const LpResult res = solver.solve(A, b, cost);
    if (res.status != LpStatus::optimal) {
      throw NumericalError("l1_yule_walker: LP for column " + std::to_string(j + 1) + " failed (" +
                           (res.status == LpStatus::infeasible  ? "infeasible"
                            : res.status == LpStatus::unbounded ? "unbounded"
                                                                : "iteration limit") +
                           ")");
    }
    est.beta.col(j) = res.x.head(k) - res.x.tail(k);
    iterations[jj] = res.iterations;
  });

  est.residual = yule_walker_residual(sys, est.beta).cwiseAbs().maxCoeff();
  for (int it : iterations) est.lp_iterations += it;
  return est;
}

/// Stage-2 detector |(G_L b - g_L) - (G_R b - g_R)|_inf.
[[nodiscard]] inline double stage2_detector(const Matrix& beta, const YuleWalkerSystem& left,
                                            const YuleWalkerSystem& right) {
  if (left.Gmat.rows() != right.Gmat.rows() || left.gvec.cols() != right.gvec.cols() ||
      beta.rows() != left.Gmat.cols() || beta.cols() != left.gvec.cols()) {
    throw ContractError("stage2_detector: dimension mismatch");
  }
  return (yule_walker_residual(left, beta) - yule_walker_residual(right, beta)).cwiseAbs().maxCoeff();
}

}  // namespace fvarseg
