#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fvarseg/error.hpp"
#include "fvarseg/panel.hpp"
#include "fvarseg/rng.hpp"

namespace fvarseg {

enum class ChiModel { none, c1, c2 };

[[nodiscard]] inline std::string to_string(ChiModel m) {
  switch (m) {
    case ChiModel::c1: return "C1";
    case ChiModel::c2: return "C2";
    default: return "none";
  }
}

[[nodiscard]] inline ChiModel chi_model_from_string(const std::string& s) {
  if (s == "C1" || s == "c1") return ChiModel::c1;
  if (s == "C2" || s == "c2") return ChiModel::c2;
  if (s == "none" || s == "0") return ChiModel::none;
  throw ConfigError("unknown factor model '" + s + "' (valid: C1, C2, none)");
}

struct DgpSpec {
  std::string scenario = "custom";
  int n = 1000;
  int p = 20;
  int q = 2;
  int d = 1;
  double beta = 1.0;
  ChiModel chi = ChiModel::c1;
  std::vector<int> chi_points;
  std::vector<int> xi_points;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 2) throw ConfigError("n must be at least 2");
    if (p < 1) throw ConfigError("p must be at least 1");
    if (d < 1 || d > 2) throw ConfigError("VAR order d must be 1 or 2");
    if (chi != ChiModel::none && (q < 1 || q > p)) {
      throw ConfigError("factor number q=" + std::to_string(q) + " outside [1, p]");
    }
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
    for (const auto* pts : {&chi_points, &xi_points}) {
      for (std::size_t i = 0; i < pts->size(); ++i) {
        const int c = (*pts)[i];
        if (c <= 0 || c >= n) throw ConfigError("change point " + std::to_string(c) + " outside (0, n)");
        if (i > 0 && c <= (*pts)[i - 1]) throw ConfigError("change points must be strictly increasing");
      }
    }
    if (chi == ChiModel::none && !chi_points.empty()) {
      throw ConfigError("factor change points given without a factor model");
    }
  }
};

/// Scenarios M1 (C1 factors), M2 (C2 factors) and M3 (no factors). For M3 the
/// VAR order selects (d, beta) = (1, 0.6) or (2, 0.8).
[[nodiscard]] inline DgpSpec scenario_spec(const std::string& name, int n, int p, int d = 1, bool with_changes = true,
                                           std::uint64_t seed = 1) {
  DgpSpec s;
  s.scenario = name;
  s.n = n;
  s.p = p;
  s.seed = seed;
  if (name == "M1") {
    s.chi = ChiModel::c1;
    s.q = 2;
    s.d = 1;
    s.beta = 1.0;
    if (with_changes) s.chi_points = {n / 4, n / 2, 3 * n / 4};
    s.xi_points = {3 * n / 8, 5 * n / 8};
  } else if (name == "M2") {
    s.chi = ChiModel::c2;
    s.q = 2;
    s.d = 1;
    s.beta = 1.0;
    if (with_changes) s.chi_points = {n / 3, 2 * n / 3};
    s.xi_points = {n / 3, 2 * n / 3};
  } else if (name == "M3") {
    s.chi = ChiModel::none;
    s.q = 0;
    s.d = d;
    s.beta = d == 1 ? 0.6 : 0.8;
    if (with_changes) s.xi_points = {3 * n / 8, 5 * n / 8};
  } else if (name == "null") {
    s.chi = ChiModel::c1;
    s.q = 2;
    s.d = d;
  } else {
    throw ConfigError("unknown scenario '" + name + "' (valid: M1, M2, M3, null)");
  }
  return s;
}

/// Segment index of time t (1-based) for change points c_1 < ... < c_K:
/// t in (c_k, c_{k+1}] belongs to segment k.
[[nodiscard]] inline int segment_of(int t, const std::vector<int>& points) {
  return static_cast<int>(std::upper_bound(points.begin(), points.end(), t - 1) - points.begin());
}

/// MA(2) loadings B_0, B_1, B_2 (each p x q) for one segment.
using MaLoadings = std::array<Matrix, 3>;

/// chi_it = sum_j (B0 + B1 L + B2 L^2)_{ij} u_jt. `u` is q x (n + 2); its first
/// two columns are the presample shocks u_{-1}, u_0.
[[nodiscard]] inline Matrix c1_component(const std::vector<MaLoadings>& B, const std::vector<int>& points,
                                         const Matrix& u) {
  const auto n = u.cols() - 2;
  const auto p = B.front()[0].rows();
  Matrix chi(p, n);
  for (Eigen::Index t = 1; t <= n; ++t) {
    const auto& b = B[static_cast<std::size_t>(segment_of(static_cast<int>(t), points))];
    chi.col(t - 1) = b[0] * u.col(t + 1) + b[1] * u.col(t) + b[2] * u.col(t - 1);
  }
  return chi;
}

struct C1Draw {
  Matrix chi;
  std::vector<MaLoadings> loadings;
  std::vector<std::vector<int>> redrawn;  // rows redrawn at each change
};

[[nodiscard]] inline C1Draw gen_chi_c1(int n, int p, int q, const std::vector<int>& points, std::uint64_t seed) {
  if (q < 1 || q > p) throw ConfigError("C1: q must lie in [1, p]");
  RandomStream coef(derive_seed(seed, "c1-loadings"));
  RandomStream shocks(derive_seed(seed, "c1-shocks"));
  C1Draw out;
  MaLoadings b;
  for (auto& m : b) {
    m.resize(p, q);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coef.normal();
  }
  out.loadings.push_back(b);
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto rows = coef.subset(p, p / 2);
    for (int i : rows) {
      for (int j = 0; j < q; ++j)
        for (auto& m : b) m(i, j) = coef.normal();
    }
    out.loadings.push_back(b);
    out.redrawn.push_back(std::move(rows));
  }
  Matrix u(q, n + 2);
  for (Eigen::Index t = 0; t < u.cols(); ++t) {
    for (int j = 0; j < q; ++j) u(j, t) = (j == 0 ? 1.0 : 0.5) * shocks.normal();
  }
  out.chi = c1_component(out.loadings, points, u);
  return out;
}

/// chi_it = sum_j a_ij f_ijt with f_ijt = alpha_ij f_ij,t-1 + u_jt. `u` is
/// q x (burn + n); the first `burn` steps use the segment-0 coefficients.
[[nodiscard]] inline Matrix c2_component(const Matrix& a, const std::vector<Matrix>& alpha,
                                         const std::vector<int>& points, const Matrix& u, int burn) {
  const auto p = a.rows();
  const auto q = a.cols();
  const auto n = u.cols() - burn;
  Matrix f = Matrix::Zero(p, q);
  Matrix chi(p, n);
  for (Eigen::Index s = 0; s < u.cols(); ++s) {
    const Eigen::Index t = s - burn + 1;
    const Matrix& al = alpha[static_cast<std::size_t>(t < 1 ? 0 : segment_of(static_cast<int>(t), points))];
    for (Eigen::Index j = 0; j < q; ++j) f.col(j) = (al.col(j).cwiseProduct(f.col(j)).array() + u(j, s)).matrix();
    if (t >= 1) chi.col(t - 1) = a.cwiseProduct(f).rowwise().sum();
  }
  return chi;
}

struct C2Draw {
  Matrix chi;
  Matrix a;
  std::vector<Matrix> alpha;
  std::vector<std::vector<int>> flipped;
};

[[nodiscard]] inline C2Draw gen_chi_c2(int n, int p, int q, const std::vector<int>& points, std::uint64_t seed,
                                       int burn = 100) {
  if (q < 1 || q > p) throw ConfigError("C2: q must lie in [1, p]");
  RandomStream coef(derive_seed(seed, "c2-coefficients"));
  RandomStream shocks(derive_seed(seed, "c2-shocks"));
  C2Draw out;
  out.a.resize(p, q);
  Matrix al(p, q);
  for (Eigen::Index i = 0; i < out.a.size(); ++i) out.a.data()[i] = coef.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < al.size(); ++i) al.data()[i] = coef.uniform(-0.8, 0.8);
  out.alpha.push_back(al);
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto rows = coef.subset(p, p / 2);
    for (int i : rows) al.row(i) *= -1.0;
    out.alpha.push_back(al);
    out.flipped.push_back(std::move(rows));
  }
  Matrix u(q, burn + n);
  for (Eigen::Index t = 0; t < u.cols(); ++t)
    for (int j = 0; j < q; ++j) u(j, t) = shocks.normal();
  out.chi = c2_component(out.a, out.alpha, points, u, burn);
  return out;
}

/// Spectral radius of the VAR(d) companion matrix.
[[nodiscard]] inline double companion_radius(const std::vector<Matrix>& A) {
  const auto p = A.front().rows();
  const auto d = static_cast<Eigen::Index>(A.size());
  Matrix F = Matrix::Zero(p * d, p * d);
  for (Eigen::Index l = 0; l < d; ++l) F.block(0, l * p, p, p) = A[static_cast<std::size_t>(l)];
  if (d > 1) F.block(p, 0, p * (d - 1), p * (d - 1)).setIdentity();
  return Eigen::EigenSolver<Matrix>(F, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Directed Erdos-Renyi graph (link probability 1/p, no self-loops) with 0.4 on
/// edges, rescaled to spectral norm `norm`. Empty graphs are redrawn.
[[nodiscard]] inline Matrix er_transition(int p, double norm, RandomStream& rng, int max_tries = 10) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Matrix A = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (i != j && rng.bernoulli(1.0 / p)) A(i, j) = 0.4;
    if (A.isZero()) continue;
    const double s = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
    return A * (norm / s);
  }
  throw ConfigError("VAR generator: Erdos-Renyi graph empty after " + std::to_string(max_tries) +
                    " draws (p=" + std::to_string(p) + ")");
}

struct VarDraw {
  Matrix xi;
  std::vector<std::vector<Matrix>> A;  // A[k][l-1]: lag-l transition in segment k
  int regenerations = 0;
};

/// xi_t = sum_l A_l^{[k]} xi_{t-l} + eps_t. `eps` is p x (burn + n); the burn-in
/// uses the segment-0 coefficients.
[[nodiscard]] inline Matrix var_component(const std::vector<std::vector<Matrix>>& A, const std::vector<int>& points,
                                          const Matrix& eps, int burn) {
  const auto p = eps.rows();
  const auto total = eps.cols();
  const auto d = static_cast<Eigen::Index>(A.front().size());
  Matrix path = Matrix::Zero(p, total);
  for (Eigen::Index s = 0; s < total; ++s) {
    const Eigen::Index t = s - burn + 1;
    const auto& seg = A[static_cast<std::size_t>(t < 1 ? 0 : segment_of(static_cast<int>(t), points))];
    Vector x = eps.col(s);
    for (Eigen::Index l = 1; l <= d && s - l >= 0; ++l) x.noalias() += seg[static_cast<std::size_t>(l - 1)] * path.col(s - l);
    path.col(s) = x;
  }
  return path.rightCols(total - burn);
}

[[nodiscard]] inline VarDraw gen_piecewise_var(int n, int p, int d, double beta, const std::vector<int>& points,
                                               std::uint64_t seed, int burn = 200) {
  if (p < 2) throw ConfigError("VAR generator requires p >= 2 (no self-loops, unit-norm rescale)");
  if (d < 1 || d > 2) throw ConfigError("VAR generator supports d = 1 or 2");
  RandomStream graph(derive_seed(seed, "var-graph"));
  RandomStream innov(derive_seed(seed, "var-innovations"));
  VarDraw out;
  const double norm = d == 1 ? 1.0 : 0.5;
  constexpr int kMaxTries = 10;
  for (int attempt = 0;; ++attempt) {
    std::vector<Matrix> A0;
    for (int l = 0; l < d; ++l) A0.push_back(er_transition(p, norm, graph));
    out.A.assign(1, A0);
    for (std::size_t k = 1; k <= points.size(); ++k) {
      std::vector<Matrix> next;
      for (const auto& a : out.A.back()) next.push_back(-std::pow(beta, static_cast<double>(k)) * a);
      out.A.push_back(std::move(next));
    }
    bool stable = true;
    for (const auto& seg : out.A) stable = stable && companion_radius(seg) < 1.0;
    if (stable) break;
    if (attempt + 1 >= kMaxTries) {
      throw NumericalError("VAR generator: no stable transition found in " + std::to_string(kMaxTries) + " draws");
    }
    ++out.regenerations;
  }
  Matrix eps(p, burn + n);
  for (Eigen::Index t = 0; t < eps.cols(); ++t)
    for (int i = 0; i < p; ++i) eps(i, t) = innov.normal();
  out.xi = var_component(out.A, points, eps, burn);
  return out;
}

struct GeneratedDataset {
  DgpSpec spec;
  Matrix chi;
  Matrix xi;
  PanelSeries X;
  std::vector<std::vector<Matrix>> var_coefficients;
  int var_regenerations = 0;
};

[[nodiscard]] inline GeneratedDataset gen_dataset(const DgpSpec& spec) {
  spec.validate();
  const std::uint64_t root = derive_seed(spec.seed, "dataset");
  Matrix chi;
  switch (spec.chi) {
    case ChiModel::c1: chi = gen_chi_c1(spec.n, spec.p, spec.q, spec.chi_points, derive_seed(root, "chi")).chi; break;
    case ChiModel::c2: chi = gen_chi_c2(spec.n, spec.p, spec.q, spec.chi_points, derive_seed(root, "chi")).chi; break;
    case ChiModel::none: chi = Matrix::Zero(spec.p, spec.n); break;
  }
  VarDraw var = gen_piecewise_var(spec.n, spec.p, spec.d, spec.beta, spec.xi_points, derive_seed(root, "xi"));
  Matrix x = chi + var.xi;
  return {spec, std::move(chi), std::move(var.xi), PanelSeries(std::move(x)), std::move(var.A), var.regenerations};
}

}  // namespace fvarseg
