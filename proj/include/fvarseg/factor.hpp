#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fvarseg/error.hpp"
#include "fvarseg/parallel.hpp"
#include "fvarseg/spectral.hpp"

namespace fvarseg {

/// Spectral density of the segment (a, b] treated as one window, at
/// omega_l for l = -m..m (element l + m). Negative frequencies by conjugation.
[[nodiscard]] inline std::vector<SpectralMatrix> segment_spectral(const PanelSeries& X, int a, int b,
                                                                  int m) {
  if (a < 0 || b > X.n() || b <= a) {
    throw RangeError("segment (" + std::to_string(a) + ", " + std::to_string(b) + "] out of range");
  }
  if (m < 1 || b - a <= m) {
    throw ConfigError("segment (" + std::to_string(a) + ", " + std::to_string(b) +
                      "] is shorter than m+1 = " + std::to_string(m + 1));
  }
  const LagCovSet acv = local_acv_set(X, b, b - a, m - 1);
  std::vector<SpectralMatrix> out(static_cast<std::size_t>(2 * m + 1));
  for (int l = 0; l <= m; ++l) {
    const double w = fourier_frequency(l, m);
    auto& pos = out[static_cast<std::size_t>(m + l)];
    pos = {w, spectral_from_acv(acv, m, w)};
    if (l > 0) out[static_cast<std::size_t>(m - l)] = {-w, pos.mat.conjugate()};
  }
  return out;
}

/// Rank-q reconstruction sum_{j<=q} mu_j e_j e_j^* from the leading eigenpairs.
[[nodiscard]] inline CMatrix truncate_rank(const CMatrix& S, int q) {
  const int p = static_cast<int>(S.rows());
  if (q < 0 || q > p) {
    throw ContractError("truncate_rank: q=" + std::to_string(q) + " outside [0, " + std::to_string(p) + "]");
  }
  if (q == 0) return CMatrix::Zero(p, p);
  const TopEigen te = hermitian_top_eigs(S, q);
  CMatrix out = te.vectors * te.values.cast<std::complex<double>>().asDiagonal() * te.vectors.adjoint();
  return (out + out.adjoint()) * 0.5;
}

/// Inverse transform (2 pi / (2m+1)) sum_{l=-m}^{m} S_l exp(i omega_l lag) for
/// lags 0..max_lag. `spectra` holds S_l at index l + m.
[[nodiscard]] inline LagCovSet acv_from_spectrum(const std::vector<CMatrix>& spectra, int max_lag,
                                                 double residue_tol = 1e-8) {
  if (spectra.empty() || spectra.size() % 2 == 0) {
    throw ContractError("acv_from_spectrum: expected 2m+1 spectral matrices");
  }
  const int m = static_cast<int>(spectra.size() / 2);
  const auto p = spectra.front().rows();
  std::vector<Matrix> lags;
  lags.reserve(static_cast<std::size_t>(max_lag) + 1);
  const double scale = kTwoPi / static_cast<double>(2 * m + 1);
  for (int lag = 0; lag <= max_lag; ++lag) {
    CMatrix acc = CMatrix::Zero(p, p);
    for (int l = -m; l <= m; ++l) {
      acc += spectra[static_cast<std::size_t>(l + m)] *
             std::polar(1.0, fourier_frequency(l, m) * static_cast<double>(lag));
    }
    acc *= scale;
    const double residue = acc.imag().cwiseAbs().maxCoeff();
    const double size = std::max(1.0, acc.real().cwiseAbs().maxCoeff());
    if (residue > residue_tol * size) {
      throw NumericalError("acv_from_spectrum: imaginary residue " + std::to_string(residue) +
                           " at lag " + std::to_string(lag));
    }
    lags.push_back(acc.real());
  }
  return LagCovSet(std::move(lags));
}

/// Information criterion for the number of dynamic factors:
///   IC(q) = log(p^{-1} sum_{j>q} mu_j) + q * c * pen,
///   pen = min(p, sqrt(G/m))^{-1/2} * log(min(p, sqrt(G/m))),
/// with mu_j the frequency-averaged eigenvalues in descending order.
[[nodiscard]] inline double factor_ic_penalty(int p, int G, int m) {
  const double r = std::min(static_cast<double>(p), std::sqrt(static_cast<double>(G) / m));
  return std::log(r) / std::sqrt(r);
}

[[nodiscard]] inline int estimate_factor_number(const Vector& avg_eigenvalues, int p, int G, int m,
                                                int q_max, double c = 1.0,
                                                std::optional<int> user_q = std::nullopt) {
  if (user_q) {
    if (*user_q < 0 || *user_q > p) throw ConfigError("factor number override outside [0, p]");
    return *user_q;
  }
  if (q_max < 0 || q_max > p || avg_eigenvalues.size() < p) {
    throw ContractError("estimate_factor_number: need p eigenvalues and 0 <= q_max <= p");
  }
  if (avg_eigenvalues.head(p).maxCoeff() <= 0.0) {
    throw DataError("estimate_factor_number: all averaged eigenvalues are non-positive");
  }
  const double pen = factor_ic_penalty(p, G, m);
  int best_q = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int q = 0; q <= q_max; ++q) {
    const double tail = avg_eigenvalues.segment(q, p - q).sum() / p;
    const double ic = std::log(std::max(tail, std::numeric_limits<double>::min())) + q * c * pen;
    if (ic < best) {
      best = ic;
      best_q = q;
    }
  }
  return best_q;
}

/// Default upper bound on the factor number, min(20, floor(p/2)).
[[nodiscard]] constexpr int default_q_max(int p) noexcept { return std::min(20, p / 2); }

/// Common-component model for one segment (start, end].
struct SegmentFactorModel {
  int index = 0;
  int start = 0;
  int end = 0;
  int q = 0;
  bool q_from_user = false;
  Vector eigen_profile;  // frequency-averaged eigenvalues, descending
  LagCovSet acv_chi;     // lags 0..d
  std::string note;
};

struct FactorOptions {
  int m = 1;        // kernel bandwidth for the segment spectra
  int d = 1;        // largest lag required downstream
  int q_max = -1;   // -1: default_q_max(p)
  double ic_constant = 1.0;
  std::map<int, int> q_override;  // segment index -> q
};

/// Segment models over the partition 0 = c_0 < c_1 < ... < c_{K+1} = n.
class FactorState {
 public:
  FactorState() = default;
  FactorState(std::vector<int> boundaries, std::vector<SegmentFactorModel> models)
      : boundaries_(std::move(boundaries)), models_(std::move(models)) {
    if (boundaries_.size() < 2 || models_.size() + 1 != boundaries_.size()) {
      throw ContractError("FactorState: need K+2 boundaries and K+1 segment models");
    }
  }

  [[nodiscard]] const std::vector<int>& boundaries() const noexcept { return boundaries_; }
  [[nodiscard]] const std::vector<SegmentFactorModel>& models() const noexcept { return models_; }
  [[nodiscard]] int max_lag() const noexcept {
    int out = std::numeric_limits<int>::max();
    for (const auto& mdl : models_) out = std::min(out, mdl.acv_chi.max_lag());
    return models_.empty() ? -1 : out;
  }

  /// Integer weights |I_v(G) cap (c_k, c_{k+1}]| per segment k; they sum to G.
  [[nodiscard]] std::vector<std::pair<int, int>> weights(int v, int G) const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t k = 0; k + 1 < boundaries_.size(); ++k) {
      const int w = std::min(boundaries_[k + 1], v) - std::max(boundaries_[k], v - G);
      if (w > 0) out.emplace_back(static_cast<int>(k), w);
    }
    return out;
  }

  /// (1/G) sum_k w_k Gamma_chi^{[k]}(lag).
  [[nodiscard]] Matrix local_chi_acv(int v, int G, int lag) const {
    const auto ws = weights(v, G);
    if (ws.empty()) throw ContractError("local_chi_acv: window does not meet any segment");
    Matrix out;
    for (auto [k, w] : ws) {
      const auto& mdl = models_[static_cast<std::size_t>(k)];
      if (!mdl.acv_chi.has(lag)) {
        throw ContractError("local_chi_acv: segment " + std::to_string(k) + " has no ACV for lag " +
                            std::to_string(lag));
      }
      const Matrix term = mdl.acv_chi.at(lag) * static_cast<double>(w);
      if (out.size() == 0) {
        out = term;
      } else {
        out += term;
      }
    }
    return out / static_cast<double>(G);
  }

 private:
  std::vector<int> boundaries_;
  std::vector<SegmentFactorModel> models_;
};

/// Local ACV of the idiosyncratic component: Gamma_x - Gamma_chi, or Gamma_x
/// alone when no factor state is supplied.
[[nodiscard]] inline Matrix local_xi_acv(const PanelSeries& X, int v, int G, int lag,
                                         const FactorState* state) {
  Matrix out = local_acv(X, v, lag, G);
  if (state != nullptr) out -= state->local_chi_acv(v, G, lag);
  return out;
}

/// Lags 0..max_lag of the idiosyncratic ACV on I_v(G).
class XiAcvProvider {
 public:
  XiAcvProvider(const PanelSeries& X, const FactorState* state) : X_(&X), state_(state) {}

  [[nodiscard]] LagCovSet operator()(int v, int G, int max_lag) const {
    LagCovSet raw = local_acv_set(*X_, v, G, max_lag);
    if (state_ == nullptr) return raw;
    std::vector<Matrix> lags;
    lags.reserve(static_cast<std::size_t>(max_lag) + 1);
    for (int l = 0; l <= max_lag; ++l) lags.push_back(raw.nonnegative(l) - state_->local_chi_acv(v, G, l));
    return LagCovSet(std::move(lags));
  }

  /// Calls f(v, acv) for v = lo..hi using sliding window updates.
  template <class F>
  void for_range(int lo, int hi, int G, int max_lag, F&& f) const {
    SlidingAcv slide(*X_, G, max_lag);
    slide.reset(lo);
    for (int v = lo; v <= hi; ++v) {
      if (v > lo) slide.advance();
      LagCovSet cur = slide.current();
      if (state_ != nullptr) {
        std::vector<Matrix> lags;
        lags.reserve(static_cast<std::size_t>(max_lag) + 1);
        for (int l = 0; l <= max_lag; ++l) lags.push_back(cur.nonnegative(l) - state_->local_chi_acv(v, G, l));
        cur = LagCovSet(std::move(lags));
      }
      f(v, cur);
    }
  }

  [[nodiscard]] const PanelSeries& data() const noexcept { return *X_; }
  [[nodiscard]] const FactorState* state() const noexcept { return state_; }

 private:
  const PanelSeries* X_;
  const FactorState* state_;
};

/// Fits one segment: spectra, factor number, rank-q truncation, inverse transform.
[[nodiscard]] inline SegmentFactorModel fit_segment_factor_model(const PanelSeries& X, int index, int a,
                                                                 int b, const FactorOptions& opt) {
  const int p = X.p();
  const int m = opt.m;
  SegmentFactorModel mdl;
  mdl.index = index;
  mdl.start = a;
  mdl.end = b;
  const auto user_q = opt.q_override.find(index);

  if (b - a < 2 * (m + 1)) {
    mdl.q = 0;
    mdl.note = "segment shorter than 2(m+1); treated as purely idiosyncratic";
    std::vector<Matrix> zeros(static_cast<std::size_t>(opt.d) + 1, Matrix::Zero(p, p));
    mdl.acv_chi = LagCovSet(std::move(zeros));
    mdl.eigen_profile = Vector::Zero(p);
    return mdl;
  }

  const auto spectra = segment_spectral(X, a, b, m);
  // Eigenvalues at -omega equal those at omega.
  std::vector<Vector> evals(static_cast<std::size_t>(m) + 1);
  Vector avg = Vector::Zero(p);
  for (int l = 0; l <= m; ++l) {
    evals[static_cast<std::size_t>(l)] = hermitian_eigenvalues_desc(spectra[static_cast<std::size_t>(m + l)].mat);
    avg += (l == 0 ? 1.0 : 2.0) * evals[static_cast<std::size_t>(l)];
  }
  avg /= static_cast<double>(2 * m + 1);
  mdl.eigen_profile = avg;

  const int q_max = opt.q_max >= 0 ? std::min(opt.q_max, p) : default_q_max(p);
  if (user_q != opt.q_override.end()) {
    mdl.q = estimate_factor_number(avg, p, b - a, m, q_max, opt.ic_constant, user_q->second);
    mdl.q_from_user = true;
  } else {
    mdl.q = estimate_factor_number(avg, p, b - a, m, q_max, opt.ic_constant);
  }

  std::vector<CMatrix> chi_spectra(spectra.size());
  for (int l = 0; l <= m; ++l) {
    chi_spectra[static_cast<std::size_t>(m + l)] = truncate_rank(spectra[static_cast<std::size_t>(m + l)].mat, mdl.q);
    if (l > 0) chi_spectra[static_cast<std::size_t>(m - l)] = chi_spectra[static_cast<std::size_t>(m + l)].conjugate();
  }
  mdl.acv_chi = acv_from_spectrum(chi_spectra, opt.d);
  return mdl;
}

/// Factor adjustment over the segmentation induced by `chi_points`.
[[nodiscard]] inline FactorState factor_adjust(const PanelSeries& X, const std::vector<int>& chi_points,
                                               const FactorOptions& opt, int workers = 1) {
  if (opt.d > opt.m) {
    throw ConfigError("VAR order d=" + std::to_string(opt.d) + " exceeds kernel bandwidth m=" +
                      std::to_string(opt.m));
  }
  std::vector<int> bounds{0};
  for (int c : chi_points) {
    if (c <= bounds.back() || c >= X.n()) throw ContractError("factor_adjust: change points must be increasing in (0, n)");
    bounds.push_back(c);
  }
  bounds.push_back(X.n());
  std::vector<SegmentFactorModel> models(bounds.size() - 1);
  parallel_for(models.size(), workers, [&](std::size_t k) {
    models[k] = fit_segment_factor_model(X, static_cast<int>(k), bounds[k], bounds[k + 1], opt);
  });
  return FactorState(std::move(bounds), std::move(models));
}

}  // namespace fvarseg
