#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fvarseg/change_points.hpp"
#include "fvarseg/error.hpp"
#include "fvarseg/parallel.hpp"
#include "fvarseg/spectral.hpp"

namespace fvarseg {

/// Detector values T_{chi,v}(omega_l, G) on a grid of anchors.
/// Row a of `values` belongs to anchors[a]; column l to omega_l, l = 0..m.
struct Stage1Trace {
  int G = 0;
  int m = 0;
  std::vector<int> anchors;
  Matrix values;

  [[nodiscard]] std::size_t size() const noexcept { return anchors.size(); }

  [[nodiscard]] double max_value(std::size_t a) const {
    return values.row(static_cast<Eigen::Index>(a)).maxCoeff();
  }

  /// omega(v): frequency index of the largest value, smallest index on ties.
  [[nodiscard]] int argmax_frequency(std::size_t a) const {
    const auto row = values.row(static_cast<Eigen::Index>(a));
    int best = 0;
    for (int l = 1; l < row.size(); ++l) {
      if (row(l) > row(best)) best = l;
    }
    return best;
  }

  [[nodiscard]] double mean_value(std::size_t a) const {
    return values.row(static_cast<Eigen::Index>(a)).mean();
  }
};

/// T_{chi,v}(omega_l, G) for l = 0..m: operator norm of the difference of the
/// local spectra on I_v(G) and I_{v+G}(G).
[[nodiscard]] inline Vector stage1_detector(const PanelSeries& X, int v, int G, int m) {
  if (v < G || v > X.n() - G) {
    throw RangeError("stage-1 anchor v=" + std::to_string(v) + " outside [G, n-G] = [" +
                     std::to_string(G) + ", " + std::to_string(X.n() - G) + "]");
  }
  const auto left = local_spectra(X, {v, G, m});
  const auto right = local_spectra(X, {v + G, G, m});
  Vector out(m + 1);
  for (int l = 0; l <= m; ++l) {
    CMatrix diff = left[static_cast<std::size_t>(l)] - right[static_cast<std::size_t>(l)];
    diff = (diff + diff.adjoint()) * 0.5;
    out(l) = hermitian_opnorm(diff);
  }
  return out;
}

/// Anchors {G + a*b_n : 0 <= a <= floor((n-2G)/b_n)} with b_n = floor(2 ln n).
[[nodiscard]] inline std::vector<int> stage1_grid(int n, int G) {
  if (G < 1 || n < 2 * G) {
    throw ConfigError("stage-1 grid needs n >= 2G (n=" + std::to_string(n) + ", G=" + std::to_string(G) + ")");
  }
  int step = static_cast<int>(std::floor(2.0 * std::log(static_cast<double>(n))));
  if (step < 1) step = 1;
  std::vector<int> out;
  for (int v = G; v <= n - G; v += step) out.push_back(v);
  return out;
}

/// Evaluates the stage-1 detector over `anchors` (default: stage1_grid).
[[nodiscard]] inline Stage1Trace build_stage1_trace(const PanelSeries& X, int G, int m, int workers = 1,
                                                    std::vector<int> anchors = {}) {
  if (anchors.empty()) anchors = stage1_grid(X.n(), G);
  Stage1Trace tr{G, m, std::move(anchors), Matrix()};
  tr.values.resize(static_cast<Eigen::Index>(tr.anchors.size()), m + 1);
  parallel_for(tr.anchors.size(), workers, [&](std::size_t a) {
    tr.values.row(static_cast<Eigen::Index>(a)) = stage1_detector(X, tr.anchors[a], G, m).transpose();
  });
  return tr;
}

/// Anchor maximising the frequency-averaged detector among `candidates`
/// (trace row indices); smallest anchor on ties.
[[nodiscard]] inline int stage1_refine_location(const Stage1Trace& trace, const std::vector<std::size_t>& candidates) {
  if (candidates.empty()) throw ContractError("stage1_refine_location: empty candidate set");
  std::size_t best = candidates.front();
  for (std::size_t a : candidates) {
    const double val = trace.mean_value(a);
    const double cur = trace.mean_value(best);
    if (val > cur || (val == cur && trace.anchors[a] < trace.anchors[best])) best = a;
  }
  return trace.anchors[best];
}

struct Stage1ScanOptions {
  double kappa = 1.0;
  double eta = 0.5;
  bool refine = true;  // frequency-averaged location estimate
};

/// Maximum-check scan with interval removal.
///
/// Candidates are anchors whose largest detector value exceeds kappa. Each
/// round picks the strongest remaining candidate c, accepts it when
/// T_c(omega(c)) dominates T_v(omega(c)) over grid anchors in (c - eta G, c + eta G],
/// then drops all candidates in {c-G+1, ..., c+G}.
[[nodiscard]] inline ChangePointSet stage1_scan(const Stage1Trace& trace, const Stage1ScanOptions& opt) {
  if (!(opt.eta > 0.0 && opt.eta <= 1.0)) throw ConfigError("stage-1 eta must lie in (0, 1]");
  if (!(opt.kappa > 0.0)) throw ConfigError("stage-1 threshold kappa must be positive");
  const int G = trace.G;
  std::vector<std::size_t> live;
  for (std::size_t a = 0; a < trace.size(); ++a) {
    if (trace.max_value(a) > opt.kappa) live.push_back(a);
  }

  ChangePointSet out;
  while (!live.empty()) {
    std::size_t c = live.front();
    if (opt.refine) {
      const int loc = stage1_refine_location(trace, live);
      for (std::size_t a : live) {
        if (trace.anchors[a] == loc) c = a;
      }
    } else {
      for (std::size_t a : live) {
        if (trace.max_value(a) > trace.max_value(c)) c = a;
      }
    }
    const int cv = trace.anchors[c];
    const int l = trace.argmax_frequency(c);
    const double peak = trace.values(static_cast<Eigen::Index>(c), l);
    bool local_max = true;
    for (std::size_t a = 0; a < trace.size(); ++a) {
      const int v = trace.anchors[a];
      if (v > cv - opt.eta * G && v <= cv + opt.eta * G &&
          trace.values(static_cast<Eigen::Index>(a), l) > peak) {
        local_max = false;
        break;
      }
    }
    if (local_max) out.add({cv, G, peak, Stage::factor});
    std::erase_if(live, [&](std::size_t a) {
      const int v = trace.anchors[a];
      return v >= cv - G + 1 && v <= cv + G;
    });
  }
  return out;
}

}  // namespace fvarseg
