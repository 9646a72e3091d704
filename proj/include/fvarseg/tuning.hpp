#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fvarseg/change_points.hpp"
#include "fvarseg/error.hpp"
#include "fvarseg/factor.hpp"
#include "fvarseg/simulate.hpp"
#include "fvarseg/stage1.hpp"
#include "fvarseg/stage2.hpp"

namespace fvarseg {

/// max(1, floor(G^{1/3})), integer cube root.
[[nodiscard]] inline int kernel_bandwidth(int G) {
  if (G < 1) throw ConfigError("bandwidth G must be positive");
  int m = static_cast<int>(std::cbrt(static_cast<double>(G)));
  while (static_cast<long long>(m + 1) * (m + 1) * (m + 1) <= G) ++m;
  while (m > 0 && static_cast<long long>(m) * m * m > G) --m;
  return std::max(1, m);
}

struct BandwidthPlan {
  std::vector<int> stage1;
  std::vector<int> stage2;

  [[nodiscard]] static int kernel(int G) { return kernel_bandwidth(G); }
};

/// Stage 1: {n/10, n/8, n/6, n/4}; stage 2: four equispaced integers from
/// floor(2.5p) to floor(n/4). Duplicates are removed.
[[nodiscard]] inline BandwidthPlan default_bandwidths(int n, int p) {
  BandwidthPlan plan;
  plan.stage1 = {n / 10, n / 8, n / 6, n / 4};
  const int lo = static_cast<int>(std::floor(2.5 * p));
  const int hi = n / 4;
  if (lo > hi) {
    throw ConfigError("stage-2 bandwidth floor(2.5p)=" + std::to_string(lo) + " exceeds floor(n/4)=" +
                      std::to_string(hi) + " (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  for (int i = 0; i < 4; ++i) plan.stage2.push_back(lo + (hi - lo) * i / 3);
  for (auto* set : {&plan.stage1, &plan.stage2}) {
    set->erase(std::unique(set->begin(), set->end()), set->end());
    for (int G : *set) {
      if (G < 2 * (kernel_bandwidth(G) + 1)) {
        throw ConfigError("bandwidth G=" + std::to_string(G) + " too small for n=" + std::to_string(n));
      }
    }
  }
  return plan;
}

/// Per-frequency detector values at anchor v = G.
[[nodiscard]] inline Vector stage1_scale_denominator(const PanelSeries& X, int G, int m) {
  return stage1_detector(X, G, G, m);
}

/// Divides every column l of the trace by denom(l).
[[nodiscard]] inline Stage1Trace scale_stage1(const Stage1Trace& trace, const Vector& denom) {
  if (denom.size() != trace.values.cols()) throw ContractError("scale_stage1: denominator size mismatch");
  if ((denom.array() <= 0.0).any()) throw DataError("stage-1 scaling term is zero at some frequency");
  Stage1Trace out = trace;
  out.values = trace.values.array().rowwise() / denom.transpose().array();
  return out;
}

/// max_{0<=l<=d} |Gamma_{xi, h}(l, h) - Gamma_{xi, G}(l, h)|_inf, h = floor(G/2).
[[nodiscard]] inline double stage2_scale_denominator(const XiAcvProvider& acv, int G, int d) {
  const int h = G / 2;
  if (h <= d) throw ConfigError("stage-2 scaling needs floor(G/2) > d");
  const LagCovSet a = acv(h, h, d);
  const LagCovSet b = acv(G, h, d);
  double out = 0.0;
  for (int l = 0; l <= d; ++l) out = std::max(out, (a.nonnegative(l) - b.nonnegative(l)).cwiseAbs().maxCoeff());
  if (!(out > 0.0)) throw DataError("stage-2 scaling term is zero");
  return out;
}

[[nodiscard]] inline double scale_stage2(double raw, double denom) {
  if (!(denom > 0.0)) throw DataError("stage-2 scaling term is zero");
  return raw / denom;
}

/// Sample quantile with linear interpolation between order statistics.
[[nodiscard]] inline double percentile(std::vector<double> xs, double prob) {
  if (xs.empty()) throw ContractError("percentile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// OLS with intercept. Features that are constant over the sample are dropped
/// (their coefficient is reported as 0).
struct LinearFit {
  std::vector<std::string> features;
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<bool> used;
  double r2_adj = 1.0;
  int observations = 0;

  [[nodiscard]] double predict(const std::vector<double>& x) const {
    double y = intercept;
    for (std::size_t i = 0; i < coefficients.size(); ++i) y += coefficients[i] * x[i];
    return y;
  }
};

[[nodiscard]] inline LinearFit fit_ols(const std::vector<std::string>& names, const std::vector<std::vector<double>>& X,
                                       const std::vector<double>& y) {
  const auto N = static_cast<Eigen::Index>(y.size());
  if (N == 0 || X.size() != y.size()) throw ContractError("fit_ols: need matching, non-empty samples");
  LinearFit fit;
  fit.features = names;
  fit.observations = static_cast<int>(N);
  fit.coefficients.assign(names.size(), 0.0);
  fit.used.assign(names.size(), false);
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (Eigen::Index i = 1; i < N; ++i) {
      if (X[static_cast<std::size_t>(i)][j] != X[0][j]) {
        cols.push_back(j);
        fit.used[j] = true;
        break;
      }
    }
  }
  const auto k = static_cast<Eigen::Index>(cols.size());
  Matrix D(N, k + 1);
  Vector Y(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    D(i, 0) = 1.0;
    for (Eigen::Index c = 0; c < k; ++c) D(i, c + 1) = X[static_cast<std::size_t>(i)][cols[static_cast<std::size_t>(c)]];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(D);
  if (qr.rank() < k + 1) throw NumericalError("threshold regression: singular design matrix");
  const Vector b = qr.solve(Y);
  fit.intercept = b(0);
  for (Eigen::Index c = 0; c < k; ++c) fit.coefficients[cols[static_cast<std::size_t>(c)]] = b(c + 1);

  const double mean = Y.mean();
  const double sst = (Y.array() - mean).square().sum();
  const double sse = (Y - D * b).squaredNorm();
  if (N - k - 1 <= 0 || sst == 0.0) {
    fit.r2_adj = 1.0;
  } else {
    const double r2 = 1.0 - sse / sst;
    fit.r2_adj = 1.0 - (1.0 - r2) * static_cast<double>(N - 1) / static_cast<double>(N - k - 1);
  }
  return fit;
}

[[nodiscard]] inline std::vector<double> stage1_features(int n, int G) {
  return {std::log(std::log(static_cast<double>(n))), std::log(static_cast<double>(G))};
}

[[nodiscard]] inline std::vector<double> stage2_features(int n, int p, int G) {
  return {std::log(std::log(static_cast<double>(n))), std::log(std::log(static_cast<double>(std::max(p, 2)))),
          std::log(static_cast<double>(G))};
}

/// Thresholds exp(fit) for both stages; the fits model the log of the
/// 100(1 - tau)th percentile of max_v of the scaled statistics.
struct ThresholdModel {
  static constexpr int kSchemaVersion = 1;
  double tau = 0.05;
  LinearFit stage1;
  LinearFit stage2;
  nlohmann::json provenance = nlohmann::json::object();

  [[nodiscard]] double kappa(int n, int G) const { return std::exp(stage1.predict(stage1_features(n, G))); }
  [[nodiscard]] double pi(int n, int p, int G) const { return std::exp(stage2.predict(stage2_features(n, p, G))); }
};

inline nlohmann::json to_json(const LinearFit& f, int stage) {
  nlohmann::json j;
  j["stage"] = stage;
  j["features"] = f.features;
  j["intercept"] = f.intercept;
  j["coefficients"] = f.coefficients;
  j["used"] = f.used;
  j["r2_adj"] = f.r2_adj;
  j["observations"] = f.observations;
  return j;
}

inline LinearFit linear_fit_from_json(const nlohmann::json& j) {
  LinearFit f;
  f.features = j.at("features").get<std::vector<std::string>>();
  f.intercept = j.at("intercept").get<double>();
  f.coefficients = j.at("coefficients").get<std::vector<double>>();
  f.used = j.at("used").get<std::vector<bool>>();
  f.r2_adj = j.at("r2_adj").get<double>();
  f.observations = j.at("observations").get<int>();
  if (f.coefficients.size() != f.features.size()) throw ConfigError("threshold model: coefficient count mismatch");
  return f;
}

inline nlohmann::json to_json(const ThresholdModel& m) {
  nlohmann::json j;
  j["schema_version"] = ThresholdModel::kSchemaVersion;
  j["kind"] = "threshold_model";
  j["tau"] = m.tau;
  j["response"] = "log of percentile of max_v scaled statistic";
  j["stages"] = nlohmann::json::array({to_json(m.stage1, 1), to_json(m.stage2, 2)});
  j["provenance"] = m.provenance;
  return j;
}

inline ThresholdModel threshold_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != ThresholdModel::kSchemaVersion) {
      throw ConfigError("threshold model: unsupported schema_version");
    }
    ThresholdModel m;
    m.tau = j.at("tau").get<double>();
    bool seen1 = false;
    bool seen2 = false;
    for (const auto& s : j.at("stages")) {
      const int stage = s.at("stage").get<int>();
      if (stage == 1) {
        m.stage1 = linear_fit_from_json(s);
        seen1 = true;
      } else if (stage == 2) {
        m.stage2 = linear_fit_from_json(s);
        seen2 = true;
      }
    }
    if (!seen1 || !seen2) throw ConfigError("threshold model: both stage entries are required");
    if (j.contains("provenance")) m.provenance = j.at("provenance");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("threshold model: ") + e.what());
  }
}

/// Cross-validated lambda for the stage-2 estimator at anchor v0. Each lambda
/// is fitted on the first half of I_{v0}(G) and scored on the second.
struct CvResult {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;
};

[[nodiscard]] inline std::vector<double> default_lambda_grid(double gmax, int points = 10) {
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    const double e = points == 1 ? 0.0 : -2.0 + 2.0 * i / (points - 1);
    out.push_back(gmax * std::pow(10.0, e));
  }
  return out;
}

[[nodiscard]] inline CvResult cv_lambda(const XiAcvProvider& acv, int v0, int G, int d, std::vector<double> grid = {},
                                        int workers = 1) {
  const int h = G / 2;
  if (h <= d || G - h <= d) throw ConfigError("cross-validation needs G/2 > d");
  if (grid.empty()) {
    const auto full = build_yule_walker(acv(v0, G, d), d);
    const double gmax = full.gvec.cwiseAbs().maxCoeff();
    if (!(gmax > 0.0)) throw DataError("cross-validation: Yule-Walker right-hand side is zero");
    grid = default_lambda_grid(gmax);
  }
  std::sort(grid.begin(), grid.end());
  const auto train = build_yule_walker(acv(v0 - (G - h), h, d), d);
  const auto test = build_yule_walker(acv(v0, G - h, d), d);
  CvResult out;
  out.grid = grid;
  out.scores.assign(grid.size(), 0.0);
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    const auto est = l1_yule_walker(train, grid[i], 1);
    out.scores[i] = yule_walker_residual(test, est.beta).cwiseAbs().maxCoeff();
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (out.scores[i] < out.scores[best]) best = i;
  }
  out.lambda = grid[best];
  return out;
}

/// Bottom-up merge: all estimates from the finest bandwidth, then an estimate
/// from G_h is kept when it is at least G_h / 2 from every kept point.
[[nodiscard]] inline ChangePointSet multiscale_merge(const std::map<int, ChangePointSet>& by_bandwidth) {
  ChangePointSet out;
  bool first = true;
  for (const auto& [G, set] : by_bandwidth) {
    std::vector<ChangePoint> accept;
    for (const auto& cp : set.points()) {
      bool far = true;
      for (const auto& kept : out.points()) {
        if (2 * std::abs(cp.location - kept.location) < G) {
          far = false;
          break;
        }
      }
      if (first || far) accept.push_back(cp);
    }
    for (const auto& cp : accept) out.add(cp);
    first = false;
  }
  return out;
}

/// Null-simulation threshold calibration.
struct CalibrationCell {
  int n = 0;
  int p = 0;
  int q = 2;
  int d = 1;
};

struct CalibrationConfig {
  std::vector<CalibrationCell> grid;
  int replicates = 100;
  double tau = 0.05;
  std::uint64_t seed = 1;
  ChiModel chi = ChiModel::c1;
  int workers = 1;
};

struct CalibrationRecord {
  int stage = 1;
  CalibrationCell cell;
  int G = 0;
  double percentile = 0.0;
  std::vector<double> maxima;
};

struct CalibrationResult {
  ThresholdModel model;
  std::vector<CalibrationRecord> records;
};

/// Max over anchors and frequencies of the scaled stage-1 statistic.
[[nodiscard]] inline double stage1_null_maximum(const PanelSeries& X, int G, int workers = 1) {
  const int m = kernel_bandwidth(G);
  const Stage1Trace tr = scale_stage1(build_stage1_trace(X, G, m, workers), stage1_scale_denominator(X, G, m));
  return tr.values.maxCoeff();
}

/// Max over v of the scaled stage-2 statistic with the estimate anchored at v = G.
[[nodiscard]] inline double stage2_null_maximum(const XiAcvProvider& acv, int G, int d, int workers = 1) {
  const double denom = stage2_scale_denominator(acv, G, d);
  const double lambda = cv_lambda(acv, G, G, d, {}, workers).lambda;
  const auto est = l1_yule_walker(build_yule_walker(acv(G, G, d), d), lambda, workers);
  const int n = acv.data().n();
  const auto vals = stage2_statistics(acv, est.beta, G, n - G, G, d, denom, workers);
  return *std::max_element(vals.begin(), vals.end());
}

[[nodiscard]] inline CalibrationResult calibrate_thresholds(const CalibrationConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("calibration grid is empty");
  if (cfg.replicates < 20) {
    throw ConfigError("calibration needs at least 20 replicates per cell (got " + std::to_string(cfg.replicates) + ")");
  }
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");

  CalibrationResult out;
  std::vector<std::vector<double>> f1, f2;
  std::vector<double> y1, y2;
  for (std::size_t c = 0; c < cfg.grid.size(); ++c) {
    const auto& cell = cfg.grid[c];
    const BandwidthPlan plan = default_bandwidths(cell.n, cell.p);
    const int m_factor = kernel_bandwidth(plan.stage1.front());
    const auto B = static_cast<std::size_t>(cfg.replicates);
    std::vector<std::vector<double>> max1(plan.stage1.size(), std::vector<double>(B));
    std::vector<std::vector<double>> max2(plan.stage2.size(), std::vector<double>(B));
    const std::uint64_t cell_seed = derive_seed(derive_seed(cfg.seed, "calibration"), c);

    parallel_for(B, cfg.workers, [&](std::size_t r) {
      DgpSpec spec;
      spec.scenario = "null";
      spec.n = cell.n;
      spec.p = cell.p;
      spec.q = cfg.chi == ChiModel::none ? 0 : cell.q;
      spec.d = cell.d;
      spec.chi = cfg.chi;
      spec.seed = derive_seed(cell_seed, r);
      const PanelSeries X = gen_dataset(spec).X.demeaned();
      for (std::size_t g = 0; g < plan.stage1.size(); ++g) max1[g][r] = stage1_null_maximum(X, plan.stage1[g]);
      FactorState state;
      const FactorState* sp = nullptr;
      if (cfg.chi != ChiModel::none) {
        FactorOptions fo;
        fo.m = m_factor;
        fo.d = cell.d;
        state = factor_adjust(X, {}, fo);
        sp = &state;
      }
      const XiAcvProvider acv(X, sp);
      for (std::size_t g = 0; g < plan.stage2.size(); ++g) max2[g][r] = stage2_null_maximum(acv, plan.stage2[g], cell.d);
    });

    for (std::size_t g = 0; g < plan.stage1.size(); ++g) {
      const double pc = percentile(max1[g], 1.0 - cfg.tau);
      out.records.push_back({1, cell, plan.stage1[g], pc, max1[g]});
      f1.push_back(stage1_features(cell.n, plan.stage1[g]));
      y1.push_back(std::log(pc));
    }
    for (std::size_t g = 0; g < plan.stage2.size(); ++g) {
      const double pc = percentile(max2[g], 1.0 - cfg.tau);
      out.records.push_back({2, cell, plan.stage2[g], pc, max2[g]});
      f2.push_back(stage2_features(cell.n, cell.p, plan.stage2[g]));
      y2.push_back(std::log(pc));
    }
  }
  out.model.tau = cfg.tau;
  out.model.stage1 = fit_ols({"loglog_n", "log_G"}, f1, y1);
  out.model.stage2 = fit_ols({"loglog_n", "loglog_p", "log_G"}, f2, y2);
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& cell : cfg.grid) grid.push_back({{"n", cell.n}, {"p", cell.p}, {"q", cell.q}, {"d", cell.d}});
  out.model.provenance = {{"grid", grid},
                          {"replicates", cfg.replicates},
                          {"seed", cfg.seed},
                          {"chi_model", to_string(cfg.chi)}};
  return out;
}

}  // namespace fvarseg
