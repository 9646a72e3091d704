#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fvarseg/evaluation.hpp"
#include "fvarseg/io.hpp"
#include "fvarseg/pipeline.hpp"

using namespace fvarseg;

namespace {

SegmentConfig standalone_config() {
  SegmentConfig cfg;
  cfg.factor = false;
  cfg.stage2_bandwidths = {60, 100};
  return cfg;
}

}  // namespace

TEST(Hausdorff, Examples) {
  EXPECT_EQ(hausdorff({100, 500}, {100, 500}, 1000), 0.0);
  EXPECT_DOUBLE_EQ(hausdorff({100}, {120}, 1000), 0.02);
  EXPECT_DOUBLE_EQ(hausdorff({100, 900}, {120}, 1000), 0.78);
  EXPECT_EQ(hausdorff({}, {}, 10), 0.0);
  EXPECT_EQ(hausdorff({}, {3}, 10), 1.0);
  EXPECT_EQ(hausdorff({3}, {}, 10), 1.0);
}

TEST(Hausdorff, SymmetricAndBounded) {
  std::mt19937 gen(1);
  std::uniform_int_distribution<int> loc(1, 500), size(1, 6);
  for (int r = 0; r < 200; ++r) {
    std::vector<int> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
    for (auto& x : a) x = loc(gen);
    for (auto& x : b) x = loc(gen);
    EXPECT_EQ(hausdorff(a, b, 500), hausdorff(b, a, 500));
    EXPECT_EQ(hausdorff(a, a, 500), 0.0);
    EXPECT_LE(hausdorff(a, b, 500), 1.0);
  }
}

TEST(KDistribution, Examples) {
  const auto k = k_distribution({-3, -1, 0, 0, 2});
  EXPECT_EQ(k.counts, (std::array<int, 5>{1, 1, 2, 0, 1}));
  EXPECT_EQ(k.total, 5);
  const auto exact = k_distribution({0, 0, 0});
  EXPECT_EQ(exact.share(2), 1.0);
  const auto none = k_distribution({});
  EXPECT_EQ(none.counts, (std::array<int, 5>{}));
  EXPECT_EQ(none.total, 0);
}

TEST(Segment, StandaloneSkipsStageOne) {
  const auto data = gen_dataset(scenario_spec("M3", 400, 6, 1, true, 2));
  const auto res = segment(data.X, standalone_config());
  EXPECT_TRUE(res.chi_points.empty());
  EXPECT_TRUE(res.stage1.empty());
  EXPECT_EQ(res.stage2.size(), 2u);
  for (const auto& run : res.stage2) EXPECT_EQ(run.pi, 1.0);
  const auto j = to_json(res);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_TRUE(j.at("chi_points").empty());
  for (const auto& e : j.at("xi_points")) {
    EXPECT_TRUE(e.contains("location"));
    EXPECT_TRUE(e.contains("G"));
    EXPECT_TRUE(e.contains("stat"));
  }
}

TEST(Segment, DemeaningRemovesOffsets) {
  const auto data = gen_dataset(scenario_spec("M3", 300, 5, 1, false, 4));
  Matrix shifted = data.X.values();
  shifted.colwise() += Vector::LinSpaced(5, 10.0, 50.0);
  const auto a = segment(data.X, standalone_config());
  const auto b = segment(PanelSeries(shifted), standalone_config());
  EXPECT_EQ(a.xi_points.locations(), b.xi_points.locations());
  for (std::size_t g = 0; g < a.stage2.size(); ++g) EXPECT_NEAR(a.stage2[g].scale, b.stage2[g].scale, 1e-9);
}

TEST(Segment, FactorModeNeedsThresholds) {
  const auto data = gen_dataset(scenario_spec("M1", 400, 8, 1, true, 1));
  SegmentConfig cfg;
  cfg.stage1_bandwidths = {80};
  cfg.stage2_bandwidths = {60};
  EXPECT_THROW((void)segment(data.X, cfg), ConfigError);
  cfg.kappa = 1.5;
  cfg.pi = 1.5;
  const auto res = segment(data.X, cfg);
  EXPECT_EQ(res.stage1.size(), 1u);
  EXPECT_FALSE(res.factor_state.models().empty());
}

TEST(Segment, WorkerCountInvariant) {
  const auto data = gen_dataset(scenario_spec("M1", 400, 8, 1, true, 6));
  SegmentConfig cfg;
  cfg.stage1_bandwidths = {60, 90};
  cfg.stage2_bandwidths = {60};
  cfg.kappa = 1.2;
  cfg.pi = 1.2;
  const auto a = to_json(segment(data.X, cfg)).dump();
  cfg.workers = 3;
  EXPECT_EQ(a, to_json(segment(data.X, cfg)).dump());
}

TEST(Segment, BandwidthGuards) {
  const auto data = gen_dataset(scenario_spec("M3", 200, 4, 1, false, 1));
  SegmentConfig cfg = standalone_config();
  cfg.stage2_bandwidths = {150};
  EXPECT_THROW((void)segment(data.X, cfg), ConfigError);
  cfg.stage2_bandwidths = {3};
  EXPECT_THROW((void)segment(data.X, cfg), ConfigError);
}

TEST(RunExperiment, ReproducibleAndSingleReplicate) {
  ExperimentConfig cfg;
  cfg.spec = scenario_spec("M3", 400, 6, 1, true, 12);
  cfg.method = standalone_config();
  cfg.replicates = 2;
  cfg.workers = 2;
  const auto a = run_experiment(cfg);
  cfg.workers = 1;
  const auto b = run_experiment(cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.k_xi.total, 2);

  cfg.replicates = 1;
  const auto one = run_experiment(cfg);
  EXPECT_EQ(one.mean_dh_xi, one.replicates[0].dh_xi);
  EXPECT_EQ(one.replicates[0].seed, a.replicates[0].seed);
}

TEST(RunExperiment, FailuresAreRecorded) {
  ExperimentConfig cfg;
  cfg.spec = scenario_spec("M3", 200, 4, 1, true, 1);
  cfg.method = standalone_config();
  cfg.method.stage2_bandwidths = {150};
  cfg.replicates = 2;
  const auto rep = run_experiment(cfg);
  EXPECT_EQ(rep.failures, 2);
  EXPECT_EQ(rep.replicates.size(), 2u);
  EXPECT_FALSE(rep.replicates[0].ok);
  EXPECT_FALSE(rep.replicates[0].error.empty());
}

TEST(Csv, RoundTripsExactly) {
  const auto data = gen_dataset(scenario_spec("M1", 60, 4, 1, true, 3));
  std::stringstream ss;
  write_panel_csv(ss, data.X.values());
  const PanelSeries back = read_panel_csv(ss);
  EXPECT_TRUE(back.values() == data.X.values());
}

TEST(Csv, OrientationFlag) {
  std::stringstream a("1,2,3\n4,5,6\n");
  const auto t = read_panel_csv(a, Orientation::time_by_series);
  EXPECT_EQ(t.p(), 3);
  EXPECT_EQ(t.n(), 2);
  std::stringstream b("1,2,3\n4,5,6\n");
  const auto s = read_panel_csv(b, Orientation::series_by_time);
  EXPECT_EQ(s.p(), 2);
  EXPECT_EQ(s.n(), 3);
  EXPECT_THROW((void)orientation_from_string("sideways"), ConfigError);
}

TEST(Csv, ErrorsCarryCoordinates) {
  auto message = [](const std::string& text) {
    std::stringstream ss(text);
    try {
      (void)read_panel_csv(ss);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("a,b\n1,2\n3,x\n").find("line 3, column 2"), std::string::npos);
  EXPECT_NE(message("1,2\n3\n").find("line 2 has 1 columns"), std::string::npos);
  EXPECT_NE(message("1,2\nnan,1\n").find("line 2, column 1"), std::string::npos);
  EXPECT_NE(message("").find("no data"), std::string::npos);
}

TEST(Csv, FormatsShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  const double x = 1.0 / 3.0;
  double back = 0.0;
  std::stringstream(format_double(x)) >> back;
  EXPECT_EQ(back, x);
}
