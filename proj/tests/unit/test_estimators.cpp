#include <cmath>

#include <gtest/gtest.h>

#include "ebpois/error.hpp"
#include "ebpois/estimators.hpp"
#include "ebpois/priors.hpp"
#include "oracles.hpp"

using namespace ebpois;

TEST(Robbins, PlainAndAddOne) {
  const auto h = CountHistogram::from_counts({{0, 2}, {1, 3}});
  EXPECT_DOUBLE_EQ(robbins(h, 0, false).value, 1.5);
  EXPECT_DOUBLE_EQ(robbins(h, 0, true).value, 1.0);
}

TEST(Robbins, InfiniteAndDegenerateFlags) {
  const auto h = CountHistogram::from_counts({{0, 2}, {4, 1}});
  const auto inf = robbins(h, 3, false);
  EXPECT_TRUE(inf.infinite);
  EXPECT_FALSE(inf.degenerate);
  const auto zero = robbins(h, 1, false);
  EXPECT_TRUE(zero.degenerate);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_DOUBLE_EQ(robbins(h, 3, true).value, 4.0);
}

TEST(RobbinsTruncated, Branches) {
  const auto h = CountHistogram::from_counts({{0, 4}, {1, 3}, {2, 6}, {3, 1}});
  EXPECT_EQ(robbins_truncated(h, 7, 2), 7.0);
  for (std::int64_t y = 0; y <= 2; ++y) EXPECT_DOUBLE_EQ(robbins_truncated(h, y, 2), robbins(h, y, true).value);
  for (std::int64_t y = 0; y < 10; ++y)
    EXPECT_DOUBLE_EQ(robbins_truncated(h, y, kNoTruncation), robbins(h, y, true).value);
}

TEST(NpmleEb, PointMassIsItsBayesRule) {
  const DiscretePrior g = DiscretePrior::point_mass(2.0);
  EXPECT_NEAR(npmle_eb(g, 1, 10, 1e-10), 2.0, 1e-12);
  for (std::int64_t y = 0; y <= 15; ++y) EXPECT_NEAR(npmle_eb(g, y, 20, 1e-300), 2.0, 1e-10);
}

TEST(NpmleEb, IdentityAboveThreshold) {
  const DiscretePrior g({1.0, 3.0}, {0.5, 0.5});
  EXPECT_EQ(npmle_eb(g, 6, 5, 1e-10), 6.0);
}

TEST(NpmleEb, FloorRegionStaysNonnegative) {
  const DiscretePrior g = DiscretePrior::point_mass(0.01);
  for (std::int64_t y = 2; y < 8; ++y) {
    const double f = oracle::mixture_pmf(g, y), f1 = oracle::mixture_pmf(g, y + 1);
    const double v = npmle_eb(g, y, 10, 1e-2);
    EXPECT_GE(v, 0.0);
    EXPECT_NEAR(v, (y + 1.0) * ((f1 - f) / 1e-2 + 1.0), 1e-12);
  }
}

TEST(NpmleEb, FormulaAgainstOracle) {
  const DiscretePrior g({0.5, 6.0}, {0.3, 0.7});
  for (std::int64_t y = 0; y < 12; ++y) {
    const double f = oracle::mixture_pmf(g, y), f1 = oracle::mixture_pmf(g, y + 1);
    const double rho = 1e-3;
    const double want = std::max(0.0, (y + 1.0) * ((f1 - f) / std::max(f, rho) + 1.0));
    EXPECT_NEAR(npmle_eb(g, y, 100, rho), want, 1e-12 * std::max(1.0, want));
  }
}

TEST(TuneDefaults, Arithmetic) {
  const auto t = tune_defaults(10000, 2.0, 1.0);
  EXPECT_EQ(t.npmle_y0, 40);
  EXPECT_DOUBLE_EQ(t.rho, 1e-40);
  const double want = std::ceil(std::pow(1e4 / std::pow(std::log(1e4), 3.0), 0.25));
  EXPECT_EQ(t.robbins_y0, static_cast<std::int64_t>(want));
}

TEST(TuneDefaults, Regimes) {
  EXPECT_THROW(tune_defaults(1000, 1.0, 1.0), UnsupportedRegime);
  EXPECT_THROW(tune_defaults(1000, 0.5, 1.0), UnsupportedRegime);
  EXPECT_THROW(tune_defaults(1, 2.0, 1.0), InvalidInput);
}

TEST(EstimatorNames, RoundTrip) {
  for (auto k : {EstimatorKind::oracle, EstimatorKind::mle, EstimatorKind::robbins_plain,
                 EstimatorKind::robbins_addone, EstimatorKind::robbins_trunc, EstimatorKind::npmle_eb})
    EXPECT_EQ(parse_estimator_kind(estimator_name(k)), k);
  EXPECT_THROW(parse_estimator_kind("jamesstein"), InvalidInput);
}

TEST(EstimatorConfig, Validate) {
  EstimatorConfig c;
  c.kind = EstimatorKind::npmle_eb;
  c.rho = 0.9;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.rho = 1e-8;
  c.y0 = -1;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(FitRule, OracleMatchesBayes) {
  const DiscretePrior g({1.0, 4.0}, {0.5, 0.5});
  const MixturePmf f = pmf_table(g, 1e-14);
  EstimatorConfig c;
  c.kind = EstimatorKind::oracle;
  const auto rule = fit_rule(c, CountHistogram{}, 10, &f);
  for (std::int64_t y = 0; y <= 10; ++y) {
    const double want = (y + 1.0) * oracle::mixture_pmf(g, y + 1) / oracle::mixture_pmf(g, y);
    EXPECT_NEAR(rule(y), want, 1e-12 * want);
  }
  EXPECT_THROW(rule(11), RangeError);
  EXPECT_THROW(fit_rule(c, CountHistogram{}, 10, nullptr), InvalidInput);
}

TEST(FitRule, MleIsIdentity) {
  EstimatorConfig c;
  c.kind = EstimatorKind::mle;
  const auto rule = fit_rule(c, CountHistogram::from_counts({{1, 1}}), 20);
  for (std::int64_t y = 0; y <= 20; ++y) EXPECT_EQ(rule(y), static_cast<double>(y));
}

TEST(FitRule, PlainRobbinsCapsInfinities) {
  EstimatorConfig c;
  c.kind = EstimatorKind::robbins_plain;
  const auto rule = fit_rule(c, CountHistogram::from_counts({{0, 2}, {4, 1}}), 6);
  ASSERT_EQ(rule.infinite_at.size(), 1u);
  EXPECT_EQ(rule.infinite_at[0], 3);
  EXPECT_EQ(rule(3), FittedRule::kInfiniteCap);
  EXPECT_FALSE(rule.degenerate_at.empty());
}

TEST(FitRule, NpmleRuleCarriesFit) {
  EstimatorConfig c;
  c.kind = EstimatorKind::npmle_eb;
  c.y0 = 5;
  const auto rule = fit_rule(c, CountHistogram::from_counts({{3, 30}}), 8);
  ASSERT_TRUE(rule.fit.has_value());
  EXPECT_NEAR(rule(2), 3.0, 1e-5);
  EXPECT_EQ(rule(7), 7.0);
}

TEST(CenteredBayesDiagnostic, PointMassIsSmall) {
  const double r = centered_bayes_diagnostic(pmf_table(DiscretePrior::point_mass(10.0), 1e-13));
  EXPECT_TRUE(std::isfinite(r));
  EXPECT_LT(r, 5.0);
}

TEST(CenteredBayesDiagnostic, HeavyTailBounded) {
  PriorSpec s;
  s.family = PriorFamily::heavy_tail;
  s.p = 2.0;
  const auto r = resolve(s, 2.0);
  const MixturePmf f = pmf_table(r.discretization, 1e-12, 201);
  const double d = centered_bayes_diagnostic(f);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_LT(d, 10.0);
}
