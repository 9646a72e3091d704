#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fvarseg/evaluation.hpp"
#include "fvarseg/io.hpp"
#include "fvarseg/pipeline.hpp"
#include "fvarseg/simulate.hpp"
#include "fvarseg/tuning.hpp"

#ifndef FVARSEG_DATA_DIR
#define FVARSEG_DATA_DIR "data"
#endif

namespace fvarseg::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] inline std::string default_model_path() { return std::string(FVARSEG_DATA_DIR) + "/threshold_model.json"; }

/// Threshold source for one stage: a number, a model file, or an in-line calibration.
struct ThresholdSpec {
  enum class Kind { value, model, calibrate, standalone } kind = Kind::model;
  double value = 0.0;
  std::string path = default_model_path();
};

[[nodiscard]] inline ThresholdSpec threshold_from_json(const json& j) {
  ThresholdSpec t;
  if (j.is_number()) {
    t.kind = ThresholdSpec::Kind::value;
    t.value = j.get<double>();
    if (!(t.value > 0.0)) throw ConfigError("thresholds must be positive");
    return t;
  }
  if (!j.is_string()) throw ConfigError("threshold must be a number, \"model:<path>\" or \"calibrate\"");
  const auto s = j.get<std::string>();
  if (s == "calibrate") {
    t.kind = ThresholdSpec::Kind::calibrate;
  } else if (s == "model") {
    t.path = default_model_path();
  } else if (s.rfind("model:", 0) == 0) {
    t.path = s.substr(6);
  } else {
    throw ConfigError("threshold '" + s + "' not understood (use a number, \"model:<path>\" or \"calibrate\")");
  }
  return t;
}

struct SegmentSettings {
  std::string input;
  Orientation orientation = Orientation::time_by_series;
  bool factor = true;
  bool demean = true;
  std::vector<int> stage1_bandwidths;  // empty: auto
  std::vector<int> stage2_bandwidths;
  int d = 1;
  double eta1 = 0.5;
  double eta2 = 0.0;
  ThresholdSpec kappa;
  ThresholdSpec pi;
  std::optional<double> lambda;
  std::map<int, int> q_override;
  int q_max = -1;
  int calibration_replicates = 100;
};

struct CalibrateSettings {
  std::vector<CalibrationCell> grid{{500, 20}, {500, 40}, {1000, 20}, {1000, 40}};
  int replicates = 100;
  double tau = 0.05;
  ChiModel chi = ChiModel::c1;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "fvarseg-out";
  DgpSpec scenario = scenario_spec("M3", 1000, 20);
  SegmentSettings segment;
  CalibrateSettings calibrate;
  int replicates = 50;
};

namespace detail {

inline std::vector<int> bandwidths_from_json(const json& j, const char* what) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") throw ConfigError(std::string(what) + ": expected \"auto\" or a list of integers");
    return {};
  }
  auto v = j.get<std::vector<int>>();
  if (v.empty()) throw ConfigError(std::string(what) + ": empty bandwidth list");
  for (int G : v)
    if (G < 2) throw ConfigError(std::string(what) + ": bandwidths must be >= 2");
  return v;
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

[[nodiscard]] inline DgpSpec scenario_from_json(const json& j, std::uint64_t seed) {
  const auto name = j.value("name", std::string("M3"));
  const int n = j.value("n", 1000);
  const int p = j.value("p", 20);
  const int d = j.value("d", 1);
  DgpSpec s = name == "custom" ? DgpSpec{} : scenario_spec(name, n, p, d, j.value("with_changes", true), seed);
  s.scenario = name;
  s.n = n;
  s.p = p;
  s.seed = seed;
  s.d = d;
  detail::read_if(j, "q", s.q);
  detail::read_if(j, "beta", s.beta);
  if (j.contains("chi_model")) s.chi = chi_model_from_string(j.at("chi_model").get<std::string>());
  detail::read_if(j, "chi_points", s.chi_points);
  detail::read_if(j, "xi_points", s.xi_points);
  if (s.chi == ChiModel::none) s.q = 0;
  s.validate();
  return s;
}

[[nodiscard]] inline json scenario_to_json(const DgpSpec& s) {
  return {{"name", s.scenario}, {"n", s.n},
          {"p", s.p},           {"q", s.q},
          {"d", s.d},           {"beta", s.beta},
          {"chi_model", to_string(s.chi)}, {"chi_points", s.chi_points},
          {"xi_points", s.xi_points}};
}

inline void segment_from_json(const json& j, SegmentSettings& s) {
  detail::read_if(j, "input", s.input);
  if (j.contains("orientation")) s.orientation = orientation_from_string(j.at("orientation").get<std::string>());
  detail::read_if(j, "factor", s.factor);
  detail::read_if(j, "demean", s.demean);
  detail::read_if(j, "d", s.d);
  if (j.contains("bandwidths")) {
    const auto& b = j.at("bandwidths");
    if (b.contains("stage1")) s.stage1_bandwidths = detail::bandwidths_from_json(b.at("stage1"), "bandwidths.stage1");
    if (b.contains("stage2")) s.stage2_bandwidths = detail::bandwidths_from_json(b.at("stage2"), "bandwidths.stage2");
  }
  if (j.contains("eta")) {
    detail::read_if(j.at("eta"), "stage1", s.eta1);
    detail::read_if(j.at("eta"), "stage2", s.eta2);
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    if (t.is_string()) {
      s.kappa = s.pi = threshold_from_json(t);
    } else {
      if (t.contains("stage1")) s.kappa = threshold_from_json(t.at("stage1"));
      if (t.contains("stage2")) s.pi = threshold_from_json(t.at("stage2"));
    }
  }
  if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
  if (j.contains("q_override")) {
    for (const auto& [k, v] : j.at("q_override").items()) s.q_override[std::stoi(k)] = v.get<int>();
  }
  detail::read_if(j, "q_max", s.q_max);
  detail::read_if(j, "calibration_replicates", s.calibration_replicates);
}

[[nodiscard]] inline RunConfig run_config_from_json(const json& j) {
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ConfigError("config: unsupported schema_version");
    }
    RunConfig c;
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "workers", c.workers);
    detail::read_if(j, "output_dir", c.output_dir);
    detail::read_if(j, "replicates", c.replicates);
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"), c.seed);
    c.scenario.seed = c.seed;
    if (j.contains("segment")) segment_from_json(j.at("segment"), c.segment);
    if (j.contains("calibrate")) {
      const auto& k = j.at("calibrate");
      if (k.contains("grid")) {
        c.calibrate.grid.clear();
        for (const auto& cell : k.at("grid")) {
          c.calibrate.grid.push_back({cell.at("n").get<int>(), cell.at("p").get<int>(), cell.value("q", 2),
                                      cell.value("d", 1)});
        }
      }
      detail::read_if(k, "replicates", c.calibrate.replicates);
      detail::read_if(k, "tau", c.calibrate.tau);
      if (k.contains("chi_model")) c.calibrate.chi = chi_model_from_string(k.at("chi_model").get<std::string>());
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

[[nodiscard]] inline RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json_file(path)); }

/// Resolves the configured thresholds into a SegmentConfig for data of size (n, p).
[[nodiscard]] inline SegmentConfig method_config(const SegmentSettings& s, int n, int p, std::uint64_t seed, int workers) {
  SegmentConfig m;
  m.factor = s.factor;
  m.demean = s.demean;
  m.stage1_bandwidths = s.stage1_bandwidths;
  m.stage2_bandwidths = s.stage2_bandwidths;
  m.d = s.d;
  m.eta1 = s.eta1;
  m.eta2 = s.eta2;
  m.lambda = s.lambda;
  m.q_override = s.q_override;
  m.q_max = s.q_max;
  m.workers = workers;

  auto need_model = [&](const ThresholdSpec& t) { return t.kind == ThresholdSpec::Kind::model; };
  auto need_cal = [&](const ThresholdSpec& t) { return t.kind == ThresholdSpec::Kind::calibrate; };
  if (s.factor && need_model(s.kappa)) m.model = threshold_model_from_json(read_json_file(s.kappa.path));
  if (s.factor && need_model(s.pi) && !m.model) m.model = threshold_model_from_json(read_json_file(s.pi.path));
  std::optional<ThresholdModel> calibrated;
  if ((s.factor && need_cal(s.kappa)) || (s.factor && need_cal(s.pi))) {
    CalibrationConfig cc;
    cc.grid = {{n, p, 2, s.d}};
    cc.replicates = s.calibration_replicates;
    cc.seed = seed;
    cc.workers = workers;
    calibrated = calibrate_thresholds(cc).model;
  }
  if (s.factor && s.kappa.kind == ThresholdSpec::Kind::value) m.kappa = s.kappa.value;
  if (s.pi.kind == ThresholdSpec::Kind::value) m.pi = s.pi.value;
  if (calibrated) {
    // An in-line calibration replaces the model fit for whichever stage asked for it.
    ThresholdModel merged = m.model ? *m.model : *calibrated;
    if (need_cal(s.kappa)) merged.stage1 = calibrated->stage1;
    if (need_cal(s.pi)) merged.stage2 = calibrated->stage2;
    m.model = merged;
  }
  return m;
}

namespace detail {

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return std::filesystem::path(dir);
}

inline std::string stage1_trace_csv(const Stage1Run& run) {
  std::ostringstream os;
  os << "v";
  for (Eigen::Index l = 0; l < run.trace.values.cols(); ++l) os << ",omega_" << l;
  os << ",max\n";
  for (std::size_t a = 0; a < run.trace.anchors.size(); ++a) {
    os << run.trace.anchors[a];
    for (Eigen::Index l = 0; l < run.trace.values.cols(); ++l)
      os << ',' << format_double(run.trace.values(static_cast<Eigen::Index>(a), l));
    os << ',' << format_double(run.trace.max_value(a)) << '\n';
  }
  return os.str();
}

inline std::string stage2_trace_csv(const Stage2Run& run) {
  std::ostringstream os;
  os << "v,stat,beta_anchor\n";
  for (const auto& tp : run.result.trace) os << tp.v << ',' << format_double(tp.stat) << ',' << tp.beta_anchor << '\n';
  return os.str();
}

}  // namespace detail

[[nodiscard]] inline int cmd_simulate(const RunConfig& c, std::ostream& log) {
  DgpSpec spec = c.scenario;
  spec.seed = c.seed;
  const auto data = gen_dataset(spec);
  const auto dir = detail::ensure_dir(c.output_dir);
  std::ostringstream csv;
  write_panel_csv(csv, data.X.values());
  write_text_file((dir / "data.csv").string(), csv.str());
  write_text_file((dir / "truth.json").string(), dump_json(truth_json(data)));
  log << "simulated " << spec.scenario << ": n=" << spec.n << " p=" << spec.p << " K_chi=" << spec.chi_points.size()
      << " K_xi=" << spec.xi_points.size() << " -> " << dir.string() << "\n";
  return 0;
}

/// Segments a loaded panel and returns the results document.
[[nodiscard]] inline json segment_document(const PanelSeries& X, const RunConfig& c, SegmentResult* keep = nullptr) {
  const SegmentConfig m = method_config(c.segment, X.n(), X.p(), c.seed, c.workers);
  SegmentResult res = segment(X, m);
  json j = to_json(res);
  j["input"] = c.segment.input;
  j["demean"] = c.segment.demean;
  j["d"] = c.segment.d;
  if (keep) *keep = std::move(res);
  return j;
}

[[nodiscard]] inline int cmd_segment(const RunConfig& c, std::ostream& log) {
  if (c.segment.input.empty()) throw ConfigError("segment: no input file given");
  const PanelSeries X = read_panel_csv(c.segment.input, c.segment.orientation);
  SegmentResult res;
  const json doc = segment_document(X, c, &res);
  const auto dir = detail::ensure_dir(c.output_dir);
  write_text_file((dir / "change_points.json").string(), dump_json(doc));
  for (const auto& run : res.stage1) {
    write_text_file((dir / ("stage1_trace_G" + std::to_string(run.G) + ".csv")).string(), detail::stage1_trace_csv(run));
  }
  for (const auto& run : res.stage2) {
    write_text_file((dir / ("stage2_trace_G" + std::to_string(run.G) + ".csv")).string(), detail::stage2_trace_csv(run));
  }
  std::ostringstream seg;
  seg << "segment,start,end,q,q_from_user\n";
  for (const auto& mdl : res.factor_state.models())
    seg << mdl.index << ',' << mdl.start << ',' << mdl.end << ',' << mdl.q << ',' << (mdl.q_from_user ? 1 : 0) << '\n';
  write_text_file((dir / "factor_segments.csv").string(), seg.str());
  log << "chi change points:";
  for (int c0 : res.chi_points.locations()) log << ' ' << c0;
  log << "\nxi change points:";
  for (int c0 : res.xi_points.locations()) log << ' ' << c0;
  log << "\n";
  return 0;
}

[[nodiscard]] inline int cmd_calibrate(const RunConfig& c, std::ostream& log) {
  CalibrationConfig cc;
  cc.grid = c.calibrate.grid;
  cc.replicates = c.calibrate.replicates;
  cc.tau = c.calibrate.tau;
  cc.chi = c.calibrate.chi;
  cc.seed = c.seed;
  cc.workers = c.workers;
  const auto res = calibrate_thresholds(cc);
  const auto dir = detail::ensure_dir(c.output_dir);
  write_text_file((dir / "threshold_model.json").string(), dump_json(to_json(res.model)));
  std::ostringstream rec;
  rec << "stage,n,p,q,d,G,percentile\n";
  for (const auto& r : res.records) {
    rec << r.stage << ',' << r.cell.n << ',' << r.cell.p << ',' << r.cell.q << ',' << r.cell.d << ',' << r.G << ','
        << format_double(r.percentile) << '\n';
  }
  write_text_file((dir / "calibration_records.csv").string(), rec.str());
  log << "stage 1 R2_adj = " << res.model.stage1.r2_adj << "\nstage 2 R2_adj = " << res.model.stage2.r2_adj << "\n";
  return 0;
}

[[nodiscard]] inline std::string report_table_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << "component,K,le_-2,-1,0,1,ge_2,mean_dH,failures\n";
  auto row = [&](const char* name, std::size_t K, const KDistribution& k, double dh) {
    os << name << ',' << K;
    for (int b : k.counts) os << ',' << b;
    os << ',' << format_double(dh) << ',' << rep.failures << '\n';
  };
  row("chi", rep.spec.chi_points.size(), rep.k_chi, rep.mean_dh_chi);
  row("xi", rep.spec.xi_points.size(), rep.k_xi, rep.mean_dh_xi);
  return os.str();
}

[[nodiscard]] inline int cmd_evaluate(const RunConfig& c, std::ostream& log) {
  ExperimentConfig ec;
  ec.spec = c.scenario;
  ec.spec.seed = c.seed;
  ec.replicates = c.replicates;
  ec.workers = c.workers;
  ec.method = method_config(c.segment, ec.spec.n, ec.spec.p, c.seed, c.workers);
  const auto rep = run_experiment(ec);
  const auto dir = detail::ensure_dir(c.output_dir);
  json j = to_json(rep);
  j["scenario_spec"] = scenario_to_json(ec.spec);
  write_text_file((dir / "report.json").string(), dump_json(j));
  write_text_file((dir / "report.csv").string(), report_table_csv(rep));
  std::ostringstream timing;
  timing << "replicate,runtime_seconds\n";
  for (const auto& r : rep.replicates) timing << r.index << ',' << format_double(r.runtime) << '\n';
  write_text_file((dir / "timing.csv").string(), timing.str());
  log << report_table_csv(rep);
  return 0;
}

}  // namespace fvarseg::cli
