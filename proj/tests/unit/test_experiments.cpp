#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ebpois/error.hpp"
#include "ebpois/experiments.hpp"
#include "oracles.hpp"

using namespace ebpois;

namespace {

Truth truth_of(const std::string& spec, double p) {
  const PriorSpec s = parse_prior_spec(spec);
  return make_truth(resolve(s, p));
}

EstimatorConfig config(EstimatorKind kind, std::int64_t y0 = kNoTruncation) {
  EstimatorConfig c;
  c.kind = kind;
  c.y0 = y0;
  return c;
}

}  // namespace

TEST(FitRate, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double e = 3.0; e <= 5.0; e += 0.5) pts.emplace_back(std::pow(10.0, e), std::pow(10.0, -e));
  const auto f = fit_rate(pts);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_EQ(f.n_points, 5);
}

TEST(FitRate, NoisyPowerLaw) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<std::pair<double, double>> pts;
  std::vector<double> xs, ys;
  for (double e = 3.0; e <= 5.0; e += 0.25) {
    const double n = std::pow(10.0, e), v = 3.0 * std::pow(n, -0.8) * (1.0 + u(rng));
    pts.emplace_back(n, v);
    xs.push_back(n);
    ys.push_back(v);
  }
  const auto f = fit_rate(pts);
  EXPECT_GE(f.slope, -0.9);
  EXPECT_LE(f.slope, -0.7);
  EXPECT_NEAR(f.slope, oracle::ols_slope(xs, ys), 1e-12);
  EXPECT_LT(f.ci_lo, f.slope);
  EXPECT_GT(f.ci_hi, f.slope);
}

TEST(FitRate, ConstantAndExclusions) {
  std::vector<std::pair<double, double>> pts = {{1e3, 2.0}, {1e4, 2.0}, {1e5, 2.0}, {3e5, 2.0}, {1e6, -1.0}};
  const auto f = fit_rate(pts);
  EXPECT_NEAR(f.slope, 0.0, 1e-12);
  EXPECT_EQ(f.excluded, 1);
  const std::vector<std::pair<double, double>> narrow = {{100, 1}, {110, 1}, {120, 1}, {130, 1}};
  EXPECT_THROW(fit_rate(narrow), InvalidInput);
}

TEST(Truth, HeavyTailQuantities) {
  const Truth t = truth_of("family=heavy_tail p=2", 2.0);
  EXPECT_GT(t.y_cap, 100);
  EXPECT_LE(t.tail_beyond_cap, 1e-9);
  EXPECT_GT(t.mmse, 0.0);
  EXPECT_LT(t.mmse, 1.0);
  ASSERT_EQ(t.bayes.size(), static_cast<std::size_t>(t.y_cap + 1));
  EXPECT_NEAR(t.bayes[3], bayes_rule(t.pmf, 3), 1e-12);
}

TEST(Trials, OracleHasZeroRegret) {
  const Truth t = truth_of("family=discrete atoms=1,6 weights=0.5,0.5", 2.0);
  const auto r = individual_regret_trial(t, 500, config(EstimatorKind::oracle), 1);
  EXPECT_EQ(r.regret, 0.0);
}

TEST(Trials, MleRegretOnPointMassIsLambda) {
  const Truth t = truth_of("family=point_mass lambda=4", 2.0);
  const auto r = individual_regret_trial(t, 100, config(EstimatorKind::robbins_trunc, 0), 2);
  // y0 = 0 keeps the add-one branch at y = 0 only.
  const auto m = individual_regret_trial(t, 100, config(EstimatorKind::mle), 2);
  EXPECT_NEAR(m.regret + m.tail_uncertainty, 4.0, 1e-6);
  EXPECT_GT(r.regret, 0.0);
}

TEST(Trials, DensityRiskOnPointMassIsSmall) {
  const Truth t = truth_of("family=point_mass lambda=5", 2.0);
  double s = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = density_risk_trial(t, 10000, seed);
    EXPECT_TRUE(d.converged);
    s += d.hellinger_sq;
  }
  EXPECT_LT(s / 5.0, 20.0 / 10000.0);
  EXPECT_EQ(density_risk_trial(t, 1000, 9).hellinger_sq, density_risk_trial(t, 1000, 9).hellinger_sq);
}

TEST(Trials, TwoPathsAgreeOnAverage) {
  const Truth t = truth_of("family=discrete atoms=1,4 weights=0.5,0.5", 2.0);
  const auto m = config(EstimatorKind::robbins_trunc, 6);
  std::vector<double> diff;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto r = total_regret_trial(t, 300, m, seed);
    ASSERT_TRUE(r.direct.has_value());
    diff.push_back(*r.direct - r.via_individual);
  }
  double mean = 0.0, var = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(diff.size());
  for (double d : diff) var += (d - mean) * (d - mean);
  const double se = std::sqrt(var / (diff.size() - 1.0) / diff.size());
  EXPECT_LE(std::fabs(mean), 3.0 * se);
}

TEST(Trials, OracleTotalRegretIsNearZero) {
  const Truth t = truth_of("family=discrete atoms=1,4 weights=0.5,0.5", 2.0);
  double s = 0.0, s2 = 0.0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto v = *total_regret_trial(t, 200, config(EstimatorKind::oracle), r).direct;
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
  EXPECT_LE(std::fabs(mean), 4.0 * se + 1e-9);
}

TEST(Instability, LightTailHasNoFlags) {
  const auto r = resolve(parse_prior_spec("family=point_mass lambda=1"), 2.0);
  const auto c = robbins_instability_probe(r, 100000, 5);
  EXPECT_EQ(c.huge, 0);
  EXPECT_LE(c.infinite, 1);
}

TEST(Instability, SqrtCauchyIsErratic) {
  const auto r = resolve(parse_prior_spec("family=sqrt_cauchy"), 1.0);
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = robbins_instability_probe(r, 2000, seed);
    if (c.infinite + c.huge > 0) ++flagged;
  }
  EXPECT_GE(flagged, 6);
}

TEST(Instability, SingleObservation) {
  const auto r = resolve(parse_prior_spec("family=point_mass lambda=3"), 2.0);
  EXPECT_NO_THROW(robbins_instability_probe(r, 1, 1));
  const auto c = robbins_instability_census(CountHistogram::from_counts({{0, 1}, {2, 1}}));
  EXPECT_EQ(c.infinite, 1);
}

TEST(Methods, ParseAndLabel) {
  const auto m = parse_method("npmle:rho=1e-8:y0=20");
  EXPECT_EQ(m.config.kind, EstimatorKind::npmle_eb);
  EXPECT_EQ(m.config.y0, 20);
  EXPECT_FALSE(m.tune_y0);
  EXPECT_FALSE(m.tune_rho);
  EXPECT_EQ(parse_method(m.label()).config.y0, 20);
  const auto t = parse_method("robbins-trunc");
  EXPECT_TRUE(t.tune_y0);
  EXPECT_EQ(resolve_method(t, 10000, 2.0, 1.0).y0, tune_defaults(10000, 2.0, 1.0).robbins_y0);
  EXPECT_THROW(parse_method("robbins:rho=1"), InvalidInput);
  EXPECT_THROW(parse_method("median"), InvalidInput);
}

TEST(Plans, ParseValidate) {
  const auto plan = parse_plan(
      "prior = family=point_mass lambda=2\n"
      "# comment\n"
      "n_grid = 100, 1000\n"
      "replicates = 2\n"
      "methods = oracle, robbins-trunc:y0=3\n"
      "metrics = individual_regret\n"
      "seed = 9\n");
  EXPECT_EQ(plan.n_grid.size(), 2u);
  EXPECT_EQ(plan.replicates, 2);
  EXPECT_EQ(plan.seed, 9u);
  EXPECT_THROW(parse_plan("n_grid = 100\nbogus = 1\n"), InvalidInput);
  EXPECT_THROW(parse_plan("prior = family=point_mass lambda=2\nn_grid = 0\nmethods=oracle\n"
                          "metrics=individual_regret\n"),
               InvalidInput);
}

TEST(Plans, DeterministicAndThreadIndependent) {
  ExperimentPlan plan = parse_plan(
      "prior = family=discrete atoms=1,5 weights=0.5,0.5\n"
      "n_grid = 100, 300\n"
      "replicates = 3\n"
      "methods = robbins-trunc:y0=4, npmle:y0=10\n"
      "metrics = individual_regret, total_regret, hellinger_sq\n"
      "direct_total = true\n"
      "seed = 3\n");
  auto csv = [&](int threads) {
    plan.threads = threads;
    std::ostringstream os;
    write_rows_csv(os, run_experiment(plan));
    return os.str();
  };
  const std::string a = csv(1);
  EXPECT_EQ(a, csv(1));
  EXPECT_EQ(a, csv(3));
  plan.seed = 4;
  EXPECT_NE(a, csv(1));
}
