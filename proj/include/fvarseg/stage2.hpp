#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fvarseg/change_points.hpp"
#include "fvarseg/error.hpp"
#include "fvarseg/factor.hpp"
#include "fvarseg/parallel.hpp"
#include "fvarseg/yule_walker.hpp"

namespace fvarseg {

struct Stage2ScanOptions {
  double threshold = 1.0;  // pi, compared against T / scale
  double eta = 0.0;
  double scale = 1.0;      // detector denominator (1: unscaled)
  int workers = 1;
  int block = 128;         // anchors evaluated per batch
};

struct Stage2TracePoint {
  int v = 0;
  double stat = 0.0;  // scaled detector
  int beta_anchor = 0;
};

struct Stage2Result {
  ChangePointSet points;
  std::vector<Stage2TracePoint> trace;
  std::vector<VarEstimate> estimates;
  int lp_solves = 0;
};

struct Stage2ScanCore {
  ChangePointSet points;
  std::vector<Stage2TracePoint> trace;
  int estimations = 0;
};

/// Sequential scan with re-estimated inspection parameter:
///
///   v0 <- G
///   repeat while v0 <= n - G:
///     beta <- estimate(v0)
///     c_check <- first v in [v0, n-G] with T_v(beta) > pi, stop if none
///     c_hat   <- argmax of T_v(beta) over [c_check, min(c_check + G, n - G)]
///     v0 <- min(c_check + 2G, c_hat + (eta + 1) G)
///
/// `estimate(v0)` fixes the inspection parameter; `stats(lo, hi)` then returns
/// the detector values for v = lo..hi under it.
template <class Estimate, class Stats>
[[nodiscard]] Stage2ScanCore stage2_scan_core(int n, int G, double pi, double eta, int block, Estimate&& estimate,
                                              Stats&& stats) {
  if (G < 1 || n < 2 * G) {
    throw ConfigError("stage-2 scan needs n >= 2G (n=" + std::to_string(n) + ", G=" + std::to_string(G) + ")");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("stage-2 eta must lie in [0, 1]");
  if (block < 1) block = 1;

  Stage2ScanCore out;
  int v0 = G;
  while (v0 <= n - G) {
    estimate(v0);
    ++out.estimations;
    std::map<int, double> seen;
    int check = -1;
    for (int start = v0; start <= n - G && check < 0; start += block) {
      const int stop = std::min(start + block - 1, n - G);
      const std::vector<double> vals = stats(start, stop);
      for (int v = start; v <= stop; ++v) {
        const double t = vals[static_cast<std::size_t>(v - start)];
        seen[v] = t;
        out.trace.push_back({v, t, v0});
        if (t > pi) {
          check = v;
          break;
        }
      }
    }
    if (check < 0) break;

    const int hi = std::min(check + G, n - G);
    if (seen.rbegin()->first < hi) {
      const int lo = seen.rbegin()->first + 1;
      const std::vector<double> vals = stats(lo, hi);
      for (int v = lo; v <= hi; ++v) {
        seen[v] = vals[static_cast<std::size_t>(v - lo)];
        out.trace.push_back({v, seen[v], v0});
      }
    }
    int best = check;
    for (int v = check + 1; v <= hi; ++v) {
      if (seen.at(v) > seen.at(best)) best = v;
    }
    out.points.add({best, G, seen.at(best), Stage::idiosyncratic});
    const double next = std::min(static_cast<double>(check) + 2.0 * G, best + (eta + 1.0) * G);
    v0 = static_cast<int>(std::ceil(next));
  }
  return out;
}

/// Detector values T_v(beta) for v = lo..hi, divided by `scale`. Windows are
/// processed in fixed chunks so the result does not depend on `workers`.
[[nodiscard]] inline std::vector<double> stage2_statistics(const XiAcvProvider& acv, const Matrix& beta, int lo,
                                                           int hi, int G, int d, double scale, int workers) {
  constexpr int chunk = 32;
  const int count = hi - lo + 1;
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  const int chunks = (count + chunk - 1) / chunk;
  parallel_for(static_cast<std::size_t>(std::max(chunks, 0)), workers, [&](std::size_t c) {
    const int a = lo + static_cast<int>(c) * chunk;
    const int b = std::min(a + chunk - 1, hi);
    std::vector<Matrix> left;
    left.reserve(static_cast<std::size_t>(b - a + 1));
    acv.for_range(a, b, G, d, [&](int, const LagCovSet& s) {
      left.push_back(yule_walker_residual(build_yule_walker(s, d), beta));
    });
    acv.for_range(a + G, b + G, G, d, [&](int v, const LagCovSet& s) {
      const Matrix& l = left[static_cast<std::size_t>(v - G - a)];
      out[static_cast<std::size_t>(v - G - lo)] =
          (l - yule_walker_residual(build_yule_walker(s, d), beta)).cwiseAbs().maxCoeff() / scale;
    });
  });
  return out;
}

/// Stage-2 scan over the idiosyncratic ACV with the l1 Yule-Walker estimator.
/// Detector values are divided by `opt.scale` before comparison with pi.
[[nodiscard]] inline Stage2Result stage2_scan(const XiAcvProvider& acv, int G, int d, double lambda,
                                              const Stage2ScanOptions& opt) {
  const int n = acv.data().n();
  if (d < 1 || d >= G) throw ConfigError("stage-2 scan needs 1 <= d < G");
  if (!(opt.scale > 0.0)) throw ConfigError("stage-2 detector scale must be positive");

  Stage2Result out;
  Matrix beta;
  auto estimate = [&](int v0) {
    VarEstimate est = l1_yule_walker(build_yule_walker(acv(v0, G, d), d), lambda, opt.workers);
    est.anchor = v0;
    beta = est.beta;
    out.estimates.push_back(std::move(est));
  };
  auto stats = [&](int lo, int hi) { return stage2_statistics(acv, beta, lo, hi, G, d, opt.scale, opt.workers); };

  auto core = stage2_scan_core(n, G, opt.threshold, opt.eta, opt.block, estimate, stats);
  out.points = std::move(core.points);
  out.trace = std::move(core.trace);
  out.lp_solves = core.estimations;
  return out;
}

}  // namespace fvarseg
