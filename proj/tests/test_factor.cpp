#include <gtest/gtest.h>

#include "fvarseg/factor.hpp"
#include "fvarseg/rng.hpp"
#include "oracles.hpp"

using namespace fvarseg;

namespace {

PanelSeries random_panel(int p, int n, std::uint64_t seed) {
  RandomStream rng(seed);
  Matrix X(p, n);
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < p; ++i) X(i, t) = rng.normal();
  return PanelSeries(X);
}

SegmentFactorModel constant_model(int p, double value, int d) {
  SegmentFactorModel mdl;
  mdl.acv_chi = LagCovSet(std::vector<Matrix>(static_cast<std::size_t>(d) + 1, Matrix::Constant(p, p, value)));
  return mdl;
}

}  // namespace

TEST(SegmentSpectral, WholeSeriesMatchesLocalSpectral) {
  const PanelSeries X = random_panel(3, 40, 12);
  const int m = 3;
  const auto seg = segment_spectral(X, 0, 40, m);
  ASSERT_EQ(seg.size(), 7u);
  for (int l = -m; l <= m; ++l) {
    const auto ref = local_spectral(X, {40, 40, m}, fourier_frequency(l, m));
    EXPECT_LE((seg[static_cast<std::size_t>(l + m)].mat - ref.mat).cwiseAbs().maxCoeff(), 1e-13) << "l=" << l;
  }
}

TEST(SegmentSpectral, MatchesOracle) {
  const PanelSeries X = random_panel(3, 50, 3);
  const auto seg = segment_spectral(X, 0, 32, 3);
  const oracle::CMat ref = oracle::spectral(X.values(), 32, 32, 3, 0.0);
  EXPECT_LE((seg[3].mat - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SegmentSpectral, TooShort) {
  const PanelSeries X = random_panel(2, 20, 1);
  EXPECT_THROW((void)segment_spectral(X, 10, 13, 3), ConfigError);
  EXPECT_THROW((void)segment_spectral(X, 10, 25, 3), RangeError);
}

TEST(TruncateRank, Examples) {
  RandomStream rng(2);
  CMatrix A(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = {rng.normal(), rng.normal()};
  const CMatrix H = (A + A.adjoint()) / 2.0;
  EXPECT_LE((truncate_rank(H, 4) - H).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(truncate_rank(H, 0), CMatrix::Zero(4, 4));
  CMatrix D = CMatrix::Zero(3, 3);
  D(0, 0) = 5;
  D(1, 1) = 3;
  D(2, 2) = 1;
  CMatrix expect = D;
  expect(2, 2) = 0;
  EXPECT_LE((truncate_rank(D, 2) - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW((void)truncate_rank(D, 4), ContractError);
}

TEST(AcvFromSpectrum, ZeroSpectrum) {
  const std::vector<CMatrix> S(5, CMatrix::Zero(2, 2));
  const auto acv = acv_from_spectrum(S, 2);
  for (int l = 0; l <= 2; ++l) EXPECT_EQ(acv.at(l), Matrix::Zero(2, 2));
}

TEST(AcvFromSpectrum, FlatSpectrum) {
  const int m = 3;
  const std::vector<CMatrix> S(2 * m + 1, CMatrix::Constant(1, 1, 1.0 / kTwoPi));
  const auto acv = acv_from_spectrum(S, m);
  EXPECT_NEAR(acv.at(0)(0, 0), 1.0, 1e-14);
  for (int l = 1; l <= m; ++l) EXPECT_NEAR(acv.at(l)(0, 0), 0.0, 1e-14);
}

TEST(AcvFromSpectrum, RoundTripRecoversKernelWeightedAcv) {
  RandomStream rng(8);
  for (int rep = 0; rep < 40; ++rep) {
    const int p = 1 + static_cast<int>(rng.below(8));
    const int m = 1 + static_cast<int>(rng.below(6));
    std::vector<Matrix> lags;
    for (int l = 0; l <= m; ++l) {
      Matrix g(p, p);
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
      if (l == 0) g = (g + g.transpose()).eval();
      lags.push_back(g);
    }
    const LagCovSet acv(lags);
    std::vector<CMatrix> S;
    for (int l = -m; l <= m; ++l) S.push_back(spectral_from_acv(acv, m, fourier_frequency(l, m)));
    const auto back = acv_from_spectrum(S, m);
    for (int l = 0; l <= m; ++l) {
      const Matrix expect = bartlett_lag_weight(l, m) * lags[static_cast<std::size_t>(l)];
      EXPECT_LE((back.at(l) - expect).cwiseAbs().maxCoeff(), 1e-10) << "p=" << p << " m=" << m << " l=" << l;
    }
  }
}

TEST(AcvFromSpectrum, RejectsImaginaryResidue) {
  std::vector<CMatrix> S(3, CMatrix::Zero(1, 1));
  S[2](0, 0) = {0.0, 1.0};
  EXPECT_THROW((void)acv_from_spectrum(S, 1), NumericalError);
}

TEST(FactorNumber, InformationCriterion) {
  Vector mu = Vector::Constant(20, 0.01);
  mu(0) = 100.0;
  EXPECT_EQ(estimate_factor_number(mu, 20, 500, 7, 10), 1);
  // by hand: pen = log(r)/sqrt(r), r = min(20, sqrt(500/7))
  const double r = std::sqrt(500.0 / 7.0);
  EXPECT_NEAR(factor_ic_penalty(20, 500, 7), std::log(r) / std::sqrt(r), 1e-15);
  EXPECT_EQ(estimate_factor_number(Vector::Constant(20, 1e-6), 20, 500, 7, 10), 0);
  EXPECT_EQ(estimate_factor_number(mu, 20, 500, 7, 10, 1.0, 2), 2);
  EXPECT_THROW((void)estimate_factor_number(Vector::Zero(20), 20, 500, 7, 10), DataError);
  EXPECT_EQ(default_q_max(50), 20);
  EXPECT_EQ(default_q_max(15), 7);
}

TEST(FactorState, SingleSegmentWindow) {
  const FactorState st({0, 50, 100}, {constant_model(2, 1.0, 1), constant_model(2, 3.0, 1)});
  EXPECT_EQ(st.local_chi_acv(40, 20, 1), Matrix::Constant(2, 2, 1.0));
  EXPECT_EQ(st.local_chi_acv(100, 20, 0), Matrix::Constant(2, 2, 3.0));
}

TEST(FactorState, SplitWindows) {
  const FactorState st({0, 50, 100}, {constant_model(2, 1.0, 1), constant_model(2, 3.0, 1)});
  EXPECT_EQ(st.local_chi_acv(60, 20, 0), Matrix::Constant(2, 2, 2.0));
  const auto w = st.weights(51, 4);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0], std::make_pair(0, 3));
  EXPECT_EQ(w[1], std::make_pair(1, 1));
  EXPECT_DOUBLE_EQ(st.local_chi_acv(51, 4, 1)(0, 0), (3.0 * 1.0 + 1.0 * 3.0) / 4.0);
  EXPECT_THROW((void)st.local_chi_acv(60, 20, 2), ContractError);
}

TEST(LocalXiAcv, NoFactorStateIsRawAcv) {
  const PanelSeries X = random_panel(3, 60, 4);
  EXPECT_EQ(local_xi_acv(X, 50, 20, 1, nullptr), local_acv(X, 50, 1, 20));
  const XiAcvProvider prov(X, nullptr);
  EXPECT_EQ(prov(50, 20, 2).at(2), local_acv(X, 50, 2, 20));
}

TEST(LocalXiAcv, SelfCancellation) {
  const PanelSeries X = random_panel(3, 60, 5);
  SegmentFactorModel mdl;
  mdl.acv_chi = local_acv_set(X, 60, 60, 2);
  const FactorState st({0, 60}, {mdl});
  for (int l = 0; l <= 2; ++l) EXPECT_LE(local_xi_acv(X, 60, 60, l, &st).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FactorAdjust, FindsSingleStrongFactor) {
  RandomStream rng(77);
  const int p = 20;
  const int n = 600;
  Vector load(p);
  for (int i = 0; i < p; ++i) load(i) = 1.0 + rng.uniform();
  Matrix X(p, n);
  double f = 0.0;
  for (int t = 0; t < n; ++t) {
    f = 0.5 * f + rng.normal();
    for (int i = 0; i < p; ++i) X(i, t) = load(i) * f + rng.normal();
  }
  FactorOptions opt;
  opt.m = 6;
  opt.d = 1;
  const auto st = factor_adjust(PanelSeries(X), {}, opt);
  ASSERT_EQ(st.models().size(), 1u);
  EXPECT_EQ(st.models().front().q, 1);
  const auto& prof = st.models().front().eigen_profile;
  for (Eigen::Index j = 1; j < prof.size(); ++j) EXPECT_GE(prof(j - 1), prof(j));
}

TEST(FactorAdjust, ShortSegmentAndGuards) {
  const PanelSeries X = random_panel(4, 100, 6);
  FactorOptions opt;
  opt.m = 3;
  opt.d = 1;
  const auto st = factor_adjust(X, {5, 60}, opt);
  EXPECT_EQ(st.models()[0].q, 0);
  EXPECT_FALSE(st.models()[0].note.empty());
  EXPECT_EQ(st.models()[0].acv_chi.at(1), Matrix::Zero(4, 4));
  opt.d = 4;
  EXPECT_THROW((void)factor_adjust(X, {}, opt), ConfigError);
  opt.d = 1;
  EXPECT_THROW((void)factor_adjust(X, {60, 40}, opt), ContractError);
  opt.q_override[1] = 2;
  EXPECT_EQ(factor_adjust(X, {5, 60}, opt).models()[1].q, 2);
}

TEST(FactorAdjust, WorkerCountInvariant) {
  const PanelSeries X = random_panel(6, 300, 7);
  FactorOptions opt;
  opt.m = 4;
  opt.d = 2;
  const auto a = factor_adjust(X, {100, 200}, opt, 1);
  const auto b = factor_adjust(X, {100, 200}, opt, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (int l = 0; l <= 2; ++l) EXPECT_EQ(a.models()[k].acv_chi.at(l), b.models()[k].acv_chi.at(l));
  }
}
