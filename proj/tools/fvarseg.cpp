#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fvarseg/cli.hpp"

using namespace fvarseg;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
  // simulate / evaluate
  std::string scenario;
  int n = 0;
  int p = 0;
  int d = 0;
  int replicates = 0;
  // segment
  std::string input;
  std::string orientation;
  std::string model;
  double kappa = 0.0;
  double pi = 0.0;
  bool no_factor = false;
  bool no_demean = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON run configuration");
  sub->add_option("-o,--out", o.out, "Output directory");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("-j,--workers", o.workers, "Worker threads");
}

void add_method(CLI::App* sub, Overrides& o) {
  sub->add_option("--model", o.model, "Threshold model file (JSON)");
  sub->add_option("--kappa", o.kappa, "Fixed stage-1 threshold");
  sub->add_option("--pi", o.pi, "Fixed stage-2 threshold");
  sub->add_flag("--no-factor", o.no_factor, "Skip stage 1 and segment X as a VAR process");
  sub->add_flag("--no-demean", o.no_demean, "Do not remove column means");
  sub->add_option("-d,--order", o.d, "VAR order d");
}

void add_scenario(CLI::App* sub, Overrides& o) {
  sub->add_option("--scenario", o.scenario, "M1, M2, M3 or null");
  sub->add_option("-n", o.n, "Series length");
  sub->add_option("-p", o.p, "Dimension");
}

cli::RunConfig resolve(const Overrides& o) {
  cli::RunConfig c = o.config.empty() ? cli::RunConfig{} : cli::load_run_config(o.config);
  if (o.seed != 0) c.seed = o.seed;
  if (o.workers > 0) c.workers = o.workers;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.scenario.empty() || o.n > 0 || o.p > 0 || o.d > 0) {
    nlohmann::json s = cli::scenario_to_json(c.scenario);
    if (!o.scenario.empty()) {
      s = {{"name", o.scenario}, {"n", c.scenario.n}, {"p", c.scenario.p}, {"d", c.scenario.d}};
    }
    if (o.n > 0) s["n"] = o.n;
    if (o.p > 0) s["p"] = o.p;
    if (o.d > 0) s["d"] = o.d;
    if (!o.scenario.empty() || o.n > 0 || o.p > 0) {
      // Scenario defaults are rebuilt so that truth sets follow the new n.
      s.erase("chi_points");
      s.erase("xi_points");
      s.erase("beta");
      s.erase("q");
      s.erase("chi_model");
    }
    c.scenario = cli::scenario_from_json(s, c.seed);
  }
  c.scenario.seed = c.seed;
  if (o.replicates > 0) c.replicates = o.replicates;
  if (!o.input.empty()) c.segment.input = o.input;
  if (!o.orientation.empty()) c.segment.orientation = orientation_from_string(o.orientation);
  if (o.d > 0) c.segment.d = o.d;
  if (o.no_factor) c.segment.factor = false;
  if (o.no_demean) c.segment.demean = false;
  if (!o.model.empty()) c.segment.kappa = c.segment.pi = cli::threshold_from_json("model:" + o.model);
  if (o.kappa > 0.0) c.segment.kappa = cli::threshold_from_json(o.kappa);
  if (o.pi > 0.0) c.segment.pi = cli::threshold_from_json(o.pi);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fvarseg: change-point detection for factor-adjusted VAR time series"};
  app.require_subcommand(1);
  Overrides o;

  auto* sim = app.add_subcommand("simulate", "Generate a dataset (data.csv and truth.json)");
  add_common(sim, o);
  add_scenario(sim, o);
  sim->add_option("-d,--order", o.d, "VAR order d");

  auto* seg = app.add_subcommand("segment", "Detect change points in a CSV panel");
  add_common(seg, o);
  add_method(seg, o);
  seg->add_option("-i,--input", o.input, "Input CSV (rows = time, columns = series)");
  seg->add_option("--orientation", o.orientation, "rows-are-time (default) or rows-are-series");

  auto* cal = app.add_subcommand("calibrate", "Fit threshold models from null simulations");
  add_common(cal, o);
  cal->add_option("-B,--replicates", o.replicates, "Replicates per grid cell");

  auto* ev = app.add_subcommand("evaluate", "Monte Carlo evaluation against simulated truth");
  add_common(ev, o);
  add_scenario(ev, o);
  add_method(ev, o);
  ev->add_option("-R,--replicates", o.replicates, "Replicates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cli::RunConfig c = resolve(o);
    if (*sim) return cli::cmd_simulate(c, std::cout);
    if (*seg) return cli::cmd_segment(c, std::cout);
    if (*cal) {
      if (o.replicates > 0) c.calibrate.replicates = o.replicates;
      return cli::cmd_calibrate(c, std::cout);
    }
    if (*ev) return cli::cmd_evaluate(c, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
