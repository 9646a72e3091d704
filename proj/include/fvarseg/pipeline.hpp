#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fvarseg/factor.hpp"
#include "fvarseg/stage1.hpp"
#include "fvarseg/stage2.hpp"
#include "fvarseg/tuning.hpp"

namespace fvarseg {

struct SegmentConfig {
  bool factor = true;  // false: stage 2 alone on X (standalone VAR segmentation)
  bool demean = true;
  std::vector<int> stage1_bandwidths;  // empty: default_bandwidths
  std::vector<int> stage2_bandwidths;
  int d = 1;
  double eta1 = 0.5;
  double eta2 = 0.0;
  bool refine = true;
  std::optional<double> kappa;   // fixed stage-1 threshold
  std::optional<double> pi;      // fixed stage-2 threshold
  std::optional<ThresholdModel> model;
  double standalone_pi = 1.0;
  std::optional<double> lambda;  // fixed lambda; otherwise cross-validated per G
  int factor_m = 0;              // 0: kernel_bandwidth(min stage-1 G)
  int q_max = -1;
  double ic_constant = 1.0;
  std::map<int, int> q_override;
  int workers = 1;
};

struct Stage1Run {
  int G = 0;
  int m = 0;
  double kappa = 0.0;
  Stage1Trace trace;  // scaled
  ChangePointSet points;
};

struct Stage2Run {
  int G = 0;
  double lambda = 0.0;
  double pi = 0.0;
  double scale = 1.0;
  Stage2Result result;
};

struct SegmentResult {
  int n = 0;
  int p = 0;
  ChangePointSet chi_points;
  ChangePointSet xi_points;
  std::vector<Stage1Run> stage1;
  std::vector<Stage2Run> stage2;
  FactorState factor_state;
  bool factor = true;
};

namespace detail {

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

/// Stage 1 over each bandwidth, bottom-up merge, factor adjustment on the
/// merged segmentation, then stage 2 over each bandwidth and a second merge.
[[nodiscard]] inline SegmentResult segment(const PanelSeries& input, const SegmentConfig& cfg) {
  const PanelSeries X = cfg.demean ? input.demeaned() : input;
  const int n = X.n();
  const int p = X.p();
  SegmentResult out;
  out.n = n;
  out.p = p;
  out.factor = cfg.factor;

  BandwidthPlan plan;
  if (cfg.stage1_bandwidths.empty() || cfg.stage2_bandwidths.empty()) plan = default_bandwidths(n, p);
  if (!cfg.stage1_bandwidths.empty()) plan.stage1 = detail::sorted_unique(cfg.stage1_bandwidths);
  if (!cfg.stage2_bandwidths.empty()) plan.stage2 = detail::sorted_unique(cfg.stage2_bandwidths);
  if (cfg.d < 1) throw ConfigError("VAR order d must be >= 1");
  for (int G : plan.stage2) {
    if (G / 2 <= cfg.d || 2 * G > n) {
      throw ConfigError("stage-2 bandwidth G=" + std::to_string(G) + " needs d < G/2 and 2G <= n");
    }
  }

  if (cfg.factor) {
    const bool need_model_1 = !cfg.kappa;
    if (need_model_1 && !cfg.model) throw ConfigError("stage-1 threshold: give kappa or a threshold model");
    std::map<int, ChangePointSet> by_g;
    for (int G : plan.stage1) {
      if (2 * G > n) throw ConfigError("stage-1 bandwidth G=" + std::to_string(G) + " exceeds n/2");
      Stage1Run run;
      run.G = G;
      run.m = kernel_bandwidth(G);
      run.kappa = cfg.kappa ? *cfg.kappa : cfg.model->kappa(n, G);
      const Stage1Trace raw = build_stage1_trace(X, G, run.m, cfg.workers);
      run.trace = scale_stage1(raw, stage1_scale_denominator(X, G, run.m));
      run.points = stage1_scan(run.trace, {run.kappa, cfg.eta1, cfg.refine});
      by_g[G] = run.points;
      out.stage1.push_back(std::move(run));
    }
    out.chi_points = multiscale_merge(by_g);

    FactorOptions fo;
    fo.m = cfg.factor_m > 0 ? cfg.factor_m : kernel_bandwidth(plan.stage1.front());
    fo.d = cfg.d;
    fo.q_max = cfg.q_max;
    fo.ic_constant = cfg.ic_constant;
    fo.q_override = cfg.q_override;
    out.factor_state = factor_adjust(X, out.chi_points.locations(), fo, cfg.workers);
  }

  const XiAcvProvider acv(X, cfg.factor ? &out.factor_state : nullptr);
  std::map<int, ChangePointSet> by_g;
  for (int G : plan.stage2) {
    Stage2Run run;
    run.G = G;
    if (cfg.pi) {
      run.pi = *cfg.pi;
    } else if (cfg.factor) {
      if (!cfg.model) throw ConfigError("stage-2 threshold: give pi or a threshold model");
      run.pi = cfg.model->pi(n, p, G);
    } else {
      run.pi = cfg.standalone_pi;
    }
    run.scale = stage2_scale_denominator(acv, G, cfg.d);
    run.lambda = cfg.lambda ? *cfg.lambda : cv_lambda(acv, G, G, cfg.d, {}, cfg.workers).lambda;
    Stage2ScanOptions so;
    so.threshold = run.pi;
    so.eta = cfg.eta2;
    so.scale = run.scale;
    so.workers = cfg.workers;
    run.result = stage2_scan(acv, G, cfg.d, run.lambda, so);
    by_g[G] = run.result.points;
    out.stage2.push_back(std::move(run));
  }
  out.xi_points = multiscale_merge(by_g);
  return out;
}

inline nlohmann::json to_json(const ChangePointSet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cp : set.points()) arr.push_back({{"location", cp.location}, {"G", cp.bandwidth}, {"stat", cp.stat}});
  return arr;
}

inline nlohmann::json to_json(const SegmentResult& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "segmentation";
  j["n"] = r.n;
  j["p"] = r.p;
  j["mode"] = r.factor ? "factor-adjusted" : "standalone";
  j["chi_points"] = to_json(r.chi_points);
  j["xi_points"] = to_json(r.xi_points);
  nlohmann::json s1 = nlohmann::json::array();
  for (const auto& run : r.stage1) {
    s1.push_back({{"G", run.G}, {"m", run.m}, {"kappa", run.kappa}, {"points", to_json(run.points)}});
  }
  j["stage1"] = s1;
  nlohmann::json s2 = nlohmann::json::array();
  for (const auto& run : r.stage2) {
    s2.push_back({{"G", run.G},
                  {"lambda", run.lambda},
                  {"pi", run.pi},
                  {"scale", run.scale},
                  {"lp_solves", run.result.lp_solves},
                  {"points", to_json(run.result.points)}});
  }
  j["stage2"] = s2;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& mdl : r.factor_state.models()) {
    nlohmann::json e{{"segment", mdl.index}, {"start", mdl.start}, {"end", mdl.end}, {"q", mdl.q},
                     {"q_from_user", mdl.q_from_user}};
    if (!mdl.note.empty()) e["note"] = mdl.note;
    segs.push_back(e);
  }
  j["factor_segments"] = segs;
  return j;
}

}  // namespace fvarseg
