#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fvarseg/error.hpp"
#include "fvarseg/panel.hpp"

namespace fvarseg {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Bartlett lag window, max(0, 1 - |x|).
[[nodiscard]] constexpr double bartlett_weight(double x) noexcept {
  const double a = x < 0 ? -x : x;
  return a >= 1.0 ? 0.0 : 1.0 - a;
}

/// K(lag/m) evaluated from the integer ratio.
[[nodiscard]] constexpr double bartlett_lag_weight(int lag, int m) noexcept {
  const int a = lag < 0 ? -lag : lag;
  if (m <= 0) return a == 0 ? 1.0 : 0.0;
  return a >= m ? 0.0 : static_cast<double>(m - a) / static_cast<double>(m);
}

/// Fourier frequency 2*pi*l/(2m+1); l may be negative.
[[nodiscard]] inline double fourier_frequency(int l, int m) noexcept {
  return kTwoPi * static_cast<double>(l) / static_cast<double>(2 * m + 1);
}

/// The m+1 non-negative Fourier frequencies 2*pi*l/(2m+1), l = 0..m.
[[nodiscard]] inline std::vector<double> fourier_frequencies(int m) {
  if (m < 0) throw ContractError("fourier_frequencies: m must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(m) + 1);
  for (int l = 0; l <= m; ++l) out[static_cast<std::size_t>(l)] = fourier_frequency(l, m);
  return out;
}

/// Moving window I_v(G) = {v-G+1, ..., v} with lag-window bandwidth m.
struct WindowSpec {
  int v = 0;
  int G = 0;
  int m = 0;

  void validate(int n) const {
    if (G < 1 || G > v || v > n) {
      throw RangeError("window I_v(G) out of range: v=" + std::to_string(v) +
                       ", G=" + std::to_string(G) + ", n=" + std::to_string(n));
    }
    if (m < 1 || m >= G) {
      throw RangeError("kernel bandwidth must satisfy 1 <= m < G (m=" + std::to_string(m) +
                       ", G=" + std::to_string(G) + ")");
    }
  }
};

/// Autocovariance matrices for lags 0..max_lag; negative lags are served as
/// transposes so that at(-l) == at(l)^T holds by construction.
class LagCovSet {
 public:
  LagCovSet() = default;
  explicit LagCovSet(std::vector<Matrix> nonnegative) : lags_(std::move(nonnegative)) {
    if (lags_.empty()) throw ContractError("LagCovSet needs at least lag 0");
    const auto p = lags_.front().rows();
    for (const auto& g : lags_) {
      if (g.rows() != p || g.cols() != p) throw ContractError("LagCovSet matrices must all be p x p");
    }
  }

  [[nodiscard]] int max_lag() const noexcept { return static_cast<int>(lags_.size()) - 1; }
  [[nodiscard]] int dim() const noexcept {
    return lags_.empty() ? 0 : static_cast<int>(lags_.front().rows());
  }
  [[nodiscard]] bool has(int lag) const noexcept {
    return !lags_.empty() && std::abs(lag) <= max_lag();
  }

  /// Matrix for lag >= 0, by reference.
  [[nodiscard]] const Matrix& nonnegative(int lag) const {
    if (lag < 0 || lag > max_lag()) throw ContractError("LagCovSet: missing lag " + std::to_string(lag));
    return lags_[static_cast<std::size_t>(lag)];
  }

  [[nodiscard]] Matrix at(int lag) const {
    if (lag >= 0) return nonnegative(lag);
    return nonnegative(-lag).transpose();
  }

  [[nodiscard]] const std::vector<Matrix>& raw() const noexcept { return lags_; }

 private:
  std::vector<Matrix> lags_;
};

/// Spectral density estimate at one frequency.
struct SpectralMatrix {
  double omega = 0.0;
  CMatrix mat;
};

namespace detail {

inline void check_acv_window(const PanelSeries& X, int v, int lag, int G) {
  if (G < 1 || G > v || v > X.n()) {
    throw RangeError("local ACV window out of range: v=" + std::to_string(v) + ", G=" +
                     std::to_string(G) + ", n=" + std::to_string(X.n()));
  }
  if (std::abs(lag) >= G) {
    throw RangeError("lag " + std::to_string(lag) + " must be smaller than G=" + std::to_string(G));
  }
}

}  // namespace detail

/// Local sample ACV over I_v(G):
///   (1/G) sum_{t=v-G+1+l}^{v} X_{t-l} X_t^T  for l >= 0, transpose for l < 0.
/// The divisor stays G for every lag.
[[nodiscard]] inline Matrix local_acv(const PanelSeries& X, int v, int lag, int G) {
  detail::check_acv_window(X, v, lag, G);
  const int l = std::abs(lag);
  const int terms = G - l;
  const auto& data = X.values();
  // Columns (0-based) of X_{t-l} start at v-G, those of X_t at v-G+l.
  Matrix out = data.middleCols(v - G, terms) * data.middleCols(v - G + l, terms).transpose();
  out /= static_cast<double>(G);
  if (lag < 0) out.transposeInPlace();
  return out;
}

/// Local ACVs for lags 0..max_lag on I_v(G).
[[nodiscard]] inline LagCovSet local_acv_set(const PanelSeries& X, int v, int G, int max_lag) {
  detail::check_acv_window(X, v, max_lag, G);
  std::vector<Matrix> lags;
  lags.reserve(static_cast<std::size_t>(max_lag) + 1);
  for (int l = 0; l <= max_lag; ++l) lags.push_back(local_acv(X, v, l, G));
  return LagCovSet(std::move(lags));
}

/// Local ACVs for consecutive anchors v, v+1, ... by rank-one updates of the
/// window sums. Restart from a direct evaluation with reset().
class SlidingAcv {
 public:
  SlidingAcv(const PanelSeries& X, int G, int max_lag) : X_(&X), G_(G), L_(max_lag) {}

  void reset(int v) {
    detail::check_acv_window(*X_, v, L_, G_);
    v_ = v;
    sums_.clear();
    for (int l = 0; l <= L_; ++l) sums_.push_back(local_acv(*X_, v, l, G_) * static_cast<double>(G_));
  }

  void advance() {
    if (v_ + 1 > X_->n()) throw RangeError("SlidingAcv: cannot advance past n");
    const Matrix& x = X_->values();
    const int add = v_;             // 0-based column of X_{v+1}
    const int drop = v_ - G_;       // 0-based column of X_{v-G+1}
    for (int l = 0; l <= L_; ++l) {
      sums_[static_cast<std::size_t>(l)].noalias() += x.col(add - l) * x.col(add).transpose();
      sums_[static_cast<std::size_t>(l)].noalias() -= x.col(drop) * x.col(drop + l).transpose();
    }
    ++v_;
  }

  [[nodiscard]] int anchor() const noexcept { return v_; }

  [[nodiscard]] LagCovSet current() const {
    std::vector<Matrix> lags;
    lags.reserve(sums_.size());
    for (const auto& s : sums_) lags.push_back(s / static_cast<double>(G_));
    return LagCovSet(std::move(lags));
  }

 private:
  const PanelSeries* X_;
  int G_;
  int L_;
  int v_ = 0;
  std::vector<Matrix> sums_;
};

/// Lag-window transform (2 pi)^{-1} sum_{|l|<=m} K(l/m) Gamma(l) exp(-i l omega).
[[nodiscard]] inline CMatrix spectral_from_acv(const LagCovSet& acv, int m, double omega) {
  if (m < 0 || acv.max_lag() < std::max(0, m - 1)) {
    throw ContractError("spectral_from_acv: LagCovSet does not cover lags up to m-1");
  }
  using cd = std::complex<double>;
  CMatrix out = acv.nonnegative(0).cast<cd>();
  for (int l = 1; l < m; ++l) {  // K(m/m) = 0
    const double w = bartlett_lag_weight(l, m);
    const cd e = std::polar(1.0, -static_cast<double>(l) * omega);
    const Matrix& g = acv.nonnegative(l);
    // Gamma(l) e^{-il w} + Gamma(-l) e^{il w}
    out.real() += w * (e.real() * (g + g.transpose()));
    out.imag() += w * (e.imag() * (g - g.transpose()));
  }
  out /= kTwoPi;
  return out;
}

/// Local spectral density of X on I_v(G) at frequency omega.
[[nodiscard]] inline SpectralMatrix local_spectral(const PanelSeries& X, const WindowSpec& w,
                                                   double omega) {
  w.validate(X.n());
  return {omega, spectral_from_acv(local_acv_set(X, w.v, w.G, w.m - 1), w.m, omega)};
}

/// Local spectral densities at the Fourier frequencies omega_l, l = 0..m.
[[nodiscard]] inline std::vector<CMatrix> local_spectra(const PanelSeries& X, const WindowSpec& w) {
  w.validate(X.n());
  const LagCovSet acv = local_acv_set(X, w.v, w.G, w.m - 1);
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(w.m) + 1);
  for (int l = 0; l <= w.m; ++l) out.push_back(spectral_from_acv(acv, w.m, fourier_frequency(l, w.m)));
  return out;
}

namespace detail {

inline void check_hermitian(const CMatrix& H, double tol, const char* who) {
  if (H.rows() != H.cols()) throw ContractError(std::string(who) + ": matrix must be square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw ContractError(std::string(who) + ": matrix is not Hermitian (max asymmetry " +
                        std::to_string(asym) + ")");
  }
}

}  // namespace detail

/// Spectral norm of a Hermitian matrix, max_j |mu_j|.
[[nodiscard]] inline double hermitian_opnorm(const CMatrix& H) {
  detail::check_hermitian(H, 1e-10, "hermitian_opnorm");
  if (H.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_opnorm: eigensolver failed");
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Leading eigenpairs, eigenvalues in descending signed order.
struct TopEigen {
  Vector values;    // length q
  CMatrix vectors;  // p x q, orthonormal columns
};

[[nodiscard]] inline TopEigen hermitian_top_eigs(const CMatrix& H, int q) {
  detail::check_hermitian(H, 1e-10, "hermitian_top_eigs");
  const int p = static_cast<int>(H.rows());
  if (q < 0 || q > p) {
    throw ContractError("hermitian_top_eigs: q=" + std::to_string(q) + " outside [0, " +
                        std::to_string(p) + "]");
  }
  TopEigen out{Vector(q), CMatrix(p, q)};
  if (q == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_top_eigs: eigensolver failed");
  // Eigen returns ascending eigenvalues.
  for (int j = 0; j < q; ++j) {
    out.values(j) = es.eigenvalues()(p - 1 - j);
    out.vectors.col(j) = es.eigenvectors().col(p - 1 - j);
  }
  return out;
}

/// All eigenvalues, descending.
[[nodiscard]] inline Vector hermitian_eigenvalues_desc(const CMatrix& H) {
  detail::check_hermitian(H, 1e-10, "hermitian_eigenvalues_desc");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  return es.eigenvalues().reverse();
}

}  // namespace fvarseg
