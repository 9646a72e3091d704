#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fvarseg/parallel.hpp"
#include "fvarseg/pipeline.hpp"
#include "fvarseg/simulate.hpp"

namespace fvarseg {

/// Scaled Hausdorff distance between two change-point sets. Both empty: 0;
/// exactly one empty: 1.
[[nodiscard]] inline double hausdorff(const std::vector<int>& est, const std::vector<int>& truth, int n) {
  if (n < 1) throw ContractError("hausdorff: n must be >= 1");
  if (est.empty() && truth.empty()) return 0.0;
  if (est.empty() || truth.empty()) return 1.0;
  auto directed = [](const std::vector<int>& a, const std::vector<int>& b) {
    long worst = 0;
    for (int x : a) {
      long best = std::numeric_limits<long>::max();
      for (int y : b) best = std::min(best, std::labs(static_cast<long>(x) - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return static_cast<double>(std::max(directed(est, truth), directed(truth, est))) / n;
}

/// Counts of K_hat - K in the buckets {<= -2, -1, 0, 1, >= 2}.
struct KDistribution {
  std::array<int, 5> counts{};
  int total = 0;

  [[nodiscard]] double share(int bucket) const {
    return total == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(bucket)]) / total;
  }
};

[[nodiscard]] inline KDistribution k_distribution(const std::vector<int>& diffs) {
  KDistribution out;
  for (int v : diffs) {
    const int b = std::clamp(v, -2, 2) + 2;
    ++out.counts[static_cast<std::size_t>(b)];
    ++out.total;
  }
  return out;
}

struct ReplicateResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<int> chi_est;
  std::vector<int> xi_est;
  int k_chi_diff = 0;
  int k_xi_diff = 0;
  double dh_chi = 0.0;
  double dh_xi = 0.0;
  double runtime = 0.0;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;
  DgpSpec spec;
  std::vector<ReplicateResult> replicates;
  KDistribution k_chi;
  KDistribution k_xi;
  double mean_dh_chi = 0.0;
  double mean_dh_xi = 0.0;
  double mean_runtime = 0.0;
  int failures = 0;
};

struct ExperimentConfig {
  DgpSpec spec;  // spec.seed is the master seed
  SegmentConfig method;
  int replicates = 1;
  int workers = 1;  // replicate-level parallelism
};

[[nodiscard]] inline ReplicateResult score_replicate(const GeneratedDataset& data, const SegmentResult& seg) {
  ReplicateResult r;
  r.chi_est = seg.chi_points.locations();
  r.xi_est = seg.xi_points.locations();
  const auto& s = data.spec;
  r.k_chi_diff = static_cast<int>(r.chi_est.size()) - static_cast<int>(s.chi_points.size());
  r.k_xi_diff = static_cast<int>(r.xi_est.size()) - static_cast<int>(s.xi_points.size());
  r.dh_chi = hausdorff(r.chi_est, s.chi_points, s.n);
  r.dh_xi = hausdorff(r.xi_est, s.xi_points, s.n);
  return r;
}

[[nodiscard]] inline EvalReport summarize(const DgpSpec& spec, std::vector<ReplicateResult> reps) {
  EvalReport rep;
  rep.spec = spec;
  rep.replicates = std::move(reps);
  std::vector<int> kc, kx;
  double dc = 0.0, dx = 0.0, rt = 0.0;
  int ok = 0;
  for (const auto& r : rep.replicates) {
    if (!r.ok) {
      ++rep.failures;
      continue;
    }
    ++ok;
    kc.push_back(r.k_chi_diff);
    kx.push_back(r.k_xi_diff);
    dc += r.dh_chi;
    dx += r.dh_xi;
    rt += r.runtime;
  }
  rep.k_chi = k_distribution(kc);
  rep.k_xi = k_distribution(kx);
  if (ok > 0) {
    rep.mean_dh_chi = dc / ok;
    rep.mean_dh_xi = dx / ok;
    rep.mean_runtime = rt / ok;
  }
  return rep;
}

/// Generate, segment and score `replicates` datasets. Replicate r uses the
/// dataset seed derive_seed(master, r); failures are recorded, not dropped.
[[nodiscard]] inline EvalReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  cfg.spec.validate();
  std::vector<ReplicateResult> reps(static_cast<std::size_t>(cfg.replicates));
  const std::uint64_t master = derive_seed(cfg.spec.seed, "experiment");
  parallel_for(reps.size(), cfg.workers, [&](std::size_t r) {
    DgpSpec spec = cfg.spec;
    spec.seed = derive_seed(master, r);
    ReplicateResult res;
    const auto start = std::chrono::steady_clock::now();
    try {
      const GeneratedDataset data = gen_dataset(spec);
      SegmentConfig method = cfg.method;
      method.workers = 1;
      res = score_replicate(data, segment(data.X, method));
    } catch (const Error& e) {
      res.ok = false;
      res.error = e.what();
    }
    res.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.index = static_cast<int>(r);
    res.seed = spec.seed;
    reps[r] = std::move(res);
  });
  return summarize(cfg.spec, std::move(reps));
}

inline nlohmann::json to_json(const KDistribution& k) {
  return {{"le_-2", k.counts[0]}, {"-1", k.counts[1]}, {"0", k.counts[2]},
          {"1", k.counts[3]},     {"ge_2", k.counts[4]}, {"total", k.total}};
}

inline nlohmann::json to_json(const EvalReport& rep, bool with_runtime = false) {
  nlohmann::json j;
  j["schema_version"] = EvalReport::kSchemaVersion;
  j["kind"] = "evaluation";
  j["scenario"] = rep.spec.scenario;
  j["n"] = rep.spec.n;
  j["p"] = rep.spec.p;
  j["K_chi"] = rep.spec.chi_points.size();
  j["K_xi"] = rep.spec.xi_points.size();
  j["replicates"] = rep.replicates.size();
  j["failures"] = rep.failures;
  j["k_chi"] = to_json(rep.k_chi);
  j["k_xi"] = to_json(rep.k_xi);
  j["mean_dh_chi"] = rep.mean_dh_chi;
  j["mean_dh_xi"] = rep.mean_dh_xi;
  if (with_runtime) j["mean_runtime"] = rep.mean_runtime;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rep.replicates) {
    nlohmann::json e{{"replicate", r.index}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      e["chi_points"] = r.chi_est;
      e["xi_points"] = r.xi_est;
      e["k_chi_diff"] = r.k_chi_diff;
      e["k_xi_diff"] = r.k_xi_diff;
      e["dh_chi"] = r.dh_chi;
      e["dh_xi"] = r.dh_xi;
    } else {
      e["error"] = r.error;
    }
    if (with_runtime) e["runtime"] = r.runtime;
    arr.push_back(e);
  }
  j["per_replicate"] = arr;
  return j;
}

}  // namespace fvarseg
