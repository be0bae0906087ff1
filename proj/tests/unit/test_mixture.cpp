#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ebpois/discrete_prior.hpp"
#include "ebpois/error.hpp"
#include "ebpois/finite_diff.hpp"
#include "ebpois/mixture.hpp"
#include "ebpois/random.hpp"
#include "oracles.hpp"

using namespace ebpois;

TEST(DiscretePrior, CanonicalizesAtomsAndWeights) {
  const DiscretePrior g({5.0, 1.0, 5.0, 2.0}, {0.25, 0.25, 0.25, 0.25});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g.atoms()[0], 1.0);
  EXPECT_DOUBLE_EQ(g.atoms()[2], 5.0);
  EXPECT_DOUBLE_EQ(g.weights()[2], 0.5);
  EXPECT_NEAR(std::accumulate(g.weights().begin(), g.weights().end(), 0.0), 1.0, 1e-12);
}

TEST(DiscretePrior, PrunesBelowFloor) {
  const DiscretePrior g({1.0, 2.0}, {1.0 - 1e-17, 1e-17});
  EXPECT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.weights()[0], 1.0);
}

TEST(DiscretePrior, RejectsBadInput) {
  EXPECT_THROW(DiscretePrior({}, {}), InvalidInput);
  EXPECT_THROW(DiscretePrior({1.0}, {0.5}), InvalidInput);
  EXPECT_THROW(DiscretePrior({-1.0}, {1.0}), InvalidInput);
  EXPECT_THROW(DiscretePrior({1.0, 2.0}, {1.0}), InvalidInput);
  EXPECT_THROW(DiscretePrior::normalized({1.0}, {0.0}), InvalidInput);
}

TEST(DiscretePrior, Moments) {
  const DiscretePrior g({0.0, 2.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(g.moment(0.0), 1.0);
  EXPECT_DOUBLE_EQ(g.mean(), 1.0);
  EXPECT_DOUBLE_EQ(g.moment(2.0), 2.0);
}

TEST(PmfTable, PointMassAtOne) {
  const MixturePmf f = pmf_table(DiscretePrior::point_mass(1.0), 1e-12);
  EXPECT_NEAR(f(0), 0.36787944117144233, 1e-15);
  EXPECT_LE(f.tail_mass, 1e-12);
}

TEST(PmfTable, TwoTermCombination) {
  const MixturePmf f = pmf_table(DiscretePrior({0.0, 1.0}, {0.5, 0.5}), 1e-12);
  EXPECT_NEAR(f(0), 0.5 * (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(PmfTable, NormalizationOnRandomPriors) {
  Rng rng = make_stream(11, {1});
  for (int t = 0; t < 30; ++t) {
    const DiscretePrior g = oracle::random_prior(rng, 6, 200.0);
    const MixturePmf f = pmf_table(g, 1e-12);
    const double s = oracle::kahan(f.values);
    EXPECT_NEAR(s + f.tail_mass, 1.0, 1e-10);
    EXPECT_LE(f.tail_mass, 1e-12);
    for (std::int64_t y = 0; y <= f.y_max(); y += 7)
      EXPECT_NEAR(f(y), oracle::mixture_pmf(g, y), 1e-13 + 1e-11 * f(y));
  }
}

TEST(PmfTable, LargeAtomsDoNotUnderflow) {
  const DiscretePrior g({1e6}, {1.0});
  const MixturePmf f = pmf_table(g, 1e-12);
  EXPECT_GT(f(1000000), 0.0);
  EXPECT_NEAR(f(1000000), oracle::poisson_pmf(1000000, 1e6), 1e-12);
}

TEST(PmfTable, RejectsBadTolerance) {
  EXPECT_THROW(pmf_table(DiscretePrior::point_mass(1.0), 0.0), InvalidInput);
  EXPECT_THROW(pmf_table(DiscretePrior::point_mass(1.0), 1.0), InvalidInput);
}

TEST(BayesRule, PointMassReturnsLambda) {
  const MixturePmf f = pmf_table(DiscretePrior::point_mass(3.5), 1e-14);
  for (std::int64_t y = 0; y < 15; ++y) EXPECT_NEAR(bayes_rule(f, y), 3.5, 1e-12);
}

TEST(BayesRule, SparseTwoPointAboveZero) {
  const MixturePmf f = pmf_table(DiscretePrior({0.0, 7.0}, {0.9, 0.1}), 1e-14);
  for (std::int64_t y = 1; y < 20; ++y) EXPECT_NEAR(bayes_rule(f, y), 7.0, 1e-12);
}

TEST(BayesRule, ExtremalTwoPointAtZero) {
  const double u = 4.0, m1 = 1.5;
  const MixturePmf f = pmf_table(DiscretePrior({0.0, u * m1}, {1.0 - 1.0 / u, 1.0 / u}), 1e-14);
  const double e = std::exp(-u * m1);
  EXPECT_NEAR(bayes_rule(f, 0), u * m1 * e / ((u - 1.0) + e), 1e-13);
}

TEST(BayesRule, ZeroDensityIsAnError) {
  const MixturePmf f = pmf_table(DiscretePrior::point_mass(0.0), 1e-12, 5);
  EXPECT_EQ(bayes_rule(f, 0), 0.0);
  EXPECT_THROW(bayes_rule(f, 2), DegenerateSupport);
  const MixturePmf g = pmf_table(DiscretePrior::point_mass(2.0), 1e-12);
  EXPECT_THROW(bayes_rule(g, g.y_max()), RangeError);
}

TEST(BayesRule, MonotoneInY) {
  Rng rng = make_stream(12, {1});
  for (int t = 0; t < 20; ++t) {
    const MixturePmf f = pmf_table(oracle::random_prior(rng, 5, 50.0), 1e-12);
    double prev = 0.0;
    for (std::int64_t y = 0; y + 1 <= f.y_max(); ++y) {
      const double b = bayes_rule(f, y);
      EXPECT_GE(b, prev * (1.0 - 1e-12));
      prev = b;
    }
  }
}

TEST(Mmse, PointMassIsZero) {
  const auto r = mmse(DiscretePrior::point_mass(4.0), 1000, 1);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Mmse, ExtremalTwoPointClosedForm) {
  const double u = 3.0, m1 = 0.7;
  const DiscretePrior g({0.0, u * m1}, {1.0 - 1.0 / u, 1.0 / u});
  const double e = std::exp(-u * m1);
  const double want = u * (u - 1.0) * m1 * m1 * e / (u - 1.0 + e);
  EXPECT_NEAR(mmse(g, 10, 1).estimate, want, 1e-12);
  EXPECT_NEAR(mmse_by_summation(g), want, 1e-12);
}

TEST(Mmse, BruteForceSumForThreeAtoms) {
  const DiscretePrior g({1.0, 5.0, 9.0}, {0.3, 0.3, 0.4});
  const double want = oracle::mmse_brute(g, 300);
  EXPECT_NEAR(mmse_by_summation(g), want, 1e-11);
  const auto mc = mmse(g, 200000, 3);
  EXPECT_GT(mc.std_error, 0.0);
  EXPECT_NEAR(mc.estimate, want, 4.0 * mc.std_error);
}

TEST(Mmse, BoundedByFirstMoment) {
  Rng rng = make_stream(13, {1});
  for (int t = 0; t < 20; ++t) {
    const DiscretePrior g = oracle::random_prior(rng, 6, 30.0);
    EXPECT_LE(mmse_by_summation(g), g.mean() * (1.0 + 1e-12));
  }
}

TEST(Hellinger, IdenticalIsZero) {
  const MixturePmf f = pmf_table(DiscretePrior({1.0, 3.0}, {0.5, 0.5}), 1e-12);
  EXPECT_EQ(hellinger_sq(f, f), 0.0);
}

TEST(Hellinger, PoissonPairIsTwiceTheNormalizedForm) {
  const MixturePmf g = pmf_table(DiscretePrior::point_mass(4.0), 1e-13);
  const MixturePmf f = pmf_table(DiscretePrior::point_mass(1.0), 1e-13, g.y_max());
  EXPECT_NEAR(hellinger_sq(f, g), 2.0 * (1.0 - std::exp(-0.5)), 1e-10);
  EXPECT_NEAR(hellinger_sq(f, g), 2.0 * poisson_divergences(1.0, 4.0).hellinger_sq, 1e-10);
}

TEST(Hellinger, MatchesLongDirectSum) {
  Rng rng = make_stream(14, {1});
  for (int t = 0; t < 5; ++t) {
    const DiscretePrior a = oracle::random_prior(rng, 4, 60.0);
    const DiscretePrior b = oracle::random_prior(rng, 4, 60.0);
    const MixturePmf fa = pmf_table(a, 1e-12), fb = pmf_table(b, 1e-12, fa.y_max());
    const double got = hellinger_sq(pmf_table(a, 1e-12, fb.y_max()), fb);
    std::vector<double> terms;
    for (std::int64_t y = 0; y < 2000; ++y) {
      const double fa = oracle::mixture_pmf(a, y), fb = oracle::mixture_pmf(b, y);
      const double d = std::sqrt(fa) - std::sqrt(fb);
      terms.push_back(d * d);
    }
    EXPECT_NEAR(got, oracle::kahan(terms), 1e-10);
  }
}

TEST(Hellinger, ShortTablesAreRejected) {
  const MixturePmf f = pmf_table(DiscretePrior::point_mass(1.0), 1e-3);
  const MixturePmf g = pmf_table(DiscretePrior::point_mass(50.0), 1e-3);
  EXPECT_THROW(hellinger_sq(f, g), RangeError);
}

TEST(Divergences, ClosedForms) {
  const auto same = poisson_divergences(2.0, 2.0);
  EXPECT_EQ(same.chi_sq, 0.0);
  EXPECT_EQ(same.hellinger_sq, 0.0);
  EXPECT_NEAR(poisson_divergences(2.0, 1.0).chi_sq, std::exp(1.0) - 1.0, 1e-12);
  EXPECT_NEAR(poisson_divergences(1.0, 4.0).hellinger_sq, 0.3934693402873666, 1e-12);
  EXPECT_THROW(poisson_divergences(0.0, 1.0), InvalidInput);
}

TEST(Divergences, MatchDirectSummation) {
  for (double l : {0.3, 1.0, 2.0, 6.0}) {
    for (double l2 : {0.5, 1.5, 3.0, 5.0, 8.0}) {
      double chi = 0.0, hel = 0.0;
      for (std::int64_t y = 0; y < 500; ++y) {
        const double p = oracle::poisson_pmf(y, l), q = oracle::poisson_pmf(y, l2);
        if (q > 0.0) chi += (p - q) * (p - q) / q;
        hel += 0.5 * (std::sqrt(p) - std::sqrt(q)) * (std::sqrt(p) - std::sqrt(q));
      }
      const auto d = poisson_divergences(l, l2);
      EXPECT_NEAR(d.chi_sq, chi, 1e-10 * std::max(1.0, chi));
      EXPECT_NEAR(d.hellinger_sq, hel, 1e-12);
    }
  }
}

TEST(TailBound, KnownValueAndMonotone) {
  EXPECT_NEAR(poisson_tail_bound(1.0, 10.0), std::exp(-100.0 / 22.0), 1e-15);
  double prev = 1.0;
  for (double t = 0.5; t < 200.0; t *= 1.5) {
    const double b = poisson_tail_bound(3.0, t);
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_LT(poisson_tail_bound(3.0, 1e6), 1e-100);
}

TEST(TailBound, DominatesSimulatedTails) {
  Rng rng = make_stream(15, {1});
  for (double theta : {0.5, 4.0, 30.0}) {
    const int draws = 1000000;
    std::vector<std::int64_t> ys(draws);
    for (auto& y : ys) y = sample_poisson(rng, theta);
    for (double t : {1.0, 3.0, 10.0}) {
      std::int64_t up = 0, down = 0;
      for (auto y : ys) {
        if (static_cast<double>(y) >= theta + t) ++up;
        if (static_cast<double>(y) <= theta - t) ++down;
      }
      const double b = poisson_tail_bound(theta, t);
      EXPECT_LE(static_cast<double>(up) / draws, b);
      EXPECT_LE(static_cast<double>(down) / draws, b);
    }
  }
}

TEST(GeneratingFunction, BoundaryValues) {
  const DiscretePrior g({0.5, 3.0}, {0.4, 0.6});
  const auto one = generating_function_check(g, 1.0);
  EXPECT_NEAR(one.lhs, 1.0, 1e-12);
  EXPECT_NEAR(one.rhs, 1.0, 1e-15);
  const auto zero = generating_function_check(DiscretePrior::point_mass(1.0), 0.0);
  EXPECT_NEAR(zero.lhs, std::exp(-1.0), 1e-15);
  EXPECT_NEAR(zero.rhs, std::exp(-1.0), 1e-15);
}

TEST(GeneratingFunction, RandomPriors) {
  Rng rng = make_stream(16, {1});
  for (int t = 0; t < 50; ++t) {
    const auto pair = generating_function_check(oracle::random_prior(rng, 5, 25.0), 0.7);
    EXPECT_NEAR(pair.lhs, pair.rhs, 1e-10);
  }
  EXPECT_THROW(generating_function_check(DiscretePrior::point_mass(1.0), 1.5), InvalidInput);
}

// ---------------------------------------------------------------------------

TEST(FiniteDiff, ForwardOfPoissonAtZero) {
  std::vector<double> f;
  for (int y = 0; y < 10; ++y) f.push_back(oracle::poisson_pmf(y, 1.0));
  EXPECT_NEAR(finite_diff(f, 1, DiffDirection::forward, 0), 0.0, 1e-16);
}

TEST(FiniteDiff, BackwardExpansionAndShift) {
  const std::vector<double> f = {0.3, -1.2, 2.5, 0.7, 4.0};
  auto at = [&](std::int64_t y) { return (y >= 0 && y < 5) ? f[static_cast<std::size_t>(y)] : 0.0; };
  for (std::int64_t y = -1; y < 8; ++y) {
    EXPECT_NEAR(finite_diff(f, 2, DiffDirection::backward, y), at(y) - 2 * at(y - 1) + at(y - 2), 1e-14);
    EXPECT_NEAR(finite_diff(f, 1, DiffDirection::backward, y),
                finite_diff(f, 1, DiffDirection::forward, y - 1), 1e-14);
    EXPECT_NEAR(finite_diff(f, 3, DiffDirection::forward, y),
                finite_diff(f, 3, DiffDirection::backward, y + 3), 1e-13);
  }
}

TEST(FiniteDiff, SummationByParts) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> f(1 + t % 20), g(1 + (t * 7) % 23);
    for (auto& x : f) x = u(rng);
    for (auto& x : g) x = u(rng);
    const std::int64_t hi = static_cast<std::int64_t>(std::max(f.size(), g.size())) + 2;
    double lhs = 0.0, rhs = 0.0;
    for (std::int64_t y = 0; y <= hi; ++y) {
      const double fy = y < static_cast<std::int64_t>(f.size()) ? f[static_cast<std::size_t>(y)] : 0.0;
      const double gy = y < static_cast<std::int64_t>(g.size()) ? g[static_cast<std::size_t>(y)] : 0.0;
      lhs += fy * finite_diff(g, 1, DiffDirection::forward, y);
      rhs -= gy * finite_diff(f, 1, DiffDirection::backward, y);
    }
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Charlier, LowOrders) {
  for (std::int64_t y = 0; y < 10; ++y) EXPECT_DOUBLE_EQ(charlier(0, y, 2.5), 1.0);
  EXPECT_NEAR(charlier(1, 0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(charlier(1, 5, 3.0), (3.0 - 5.0) / std::sqrt(3.0), 1e-14);
}

TEST(Charlier, MatchesNaiveBackwardDifference) {
  // p_k = theta^(k/2)/sqrt(k!) nabla^k Poi / Poi, evaluated in long double at small k
  for (double theta : {0.7, 2.0, 6.0}) {
    for (int k = 0; k <= 5; ++k) {
      for (std::int64_t y = 0; y < 12; ++y) {
        long double s = 0.0L;
        for (int j = 0; j <= k; ++j) {
          if (y - j < 0) break;
          s += (j % 2 ? -1.0L : 1.0L) * oracle::binom(k, j) * oracle::poisson_pmf_ld(y - j, theta);
        }
        const long double want = std::pow(static_cast<long double>(theta), k / 2.0L) /
                                 std::sqrt(oracle::factorial_ld(k)) * s / oracle::poisson_pmf_ld(y, theta);
        EXPECT_NEAR(charlier(k, y, theta), static_cast<double>(want), 1e-9 * std::max(1.0L, std::fabs(want)));
      }
    }
  }
}

TEST(Charlier, Orthonormality) {
  for (double theta : {0.5, 1.0, 5.0, 20.0}) {
    for (int k = 0; k <= 8; ++k) {
      for (int l = 0; l <= 8; ++l) {
        std::vector<double> terms;
        for (std::int64_t y = 0; y < 400; ++y)
          terms.push_back(charlier(k, y, theta) * charlier(l, y, theta) * oracle::poisson_pmf(y, theta));
        EXPECT_NEAR(oracle::kahan(terms), k == l ? 1.0 : 0.0, 1e-8);
      }
    }
  }
}

TEST(Charlier, AllMatchesSingle) {
  const auto v = charlier_all(6, 4, 2.2);
  ASSERT_EQ(v.size(), 7u);
  for (int k = 0; k <= 6; ++k) EXPECT_DOUBLE_EQ(v[static_cast<std::size_t>(k)], charlier(k, 4, 2.2));
}

TEST(MixtureDiff, MatchesFiniteDifferenceOfTable) {
  const DiscretePrior g({0.5, 4.0, 11.0}, {0.2, 0.5, 0.3});
  std::vector<double> f;
  for (std::int64_t y = 0; y < 80; ++y) f.push_back(oracle::mixture_pmf(g, y));
  for (int k = 0; k <= 6; ++k)
    for (std::int64_t y = 0; y < 40; ++y)
      EXPECT_NEAR(mixture_forward_diff(g, k, y), finite_diff(f, k, DiffDirection::forward, y), 1e-13);
}

TEST(DiffEnergy, BoundsAndRoutesAgree) {
  Rng rng = make_stream(18, {1});
  for (int t = 0; t < 10; ++t) {
    const DiscretePrior g = oracle::random_prior(rng, 4, 40.0);
    double fact = 1.0;
    for (int k = 0; k <= 10; ++k) {
      if (k > 0) fact *= k;
      const double fwd = forward_diff_energy(g, k);
      const double bwd = backward_diff_energy(g, k);
      EXPECT_NEAR(fwd, bwd, 1e-8 * bwd + 1e-300);
      EXPECT_LE(bwd, 2.0 * fact);
      if (k % 2 == 0) {
        EXPECT_LE(fwd, std::pow(8.0, k) * fact);
      }
    }
  }
}

TEST(AkSequence, IdenticalPriorsVanish) {
  const DiscretePrior g({1.0, 6.0}, {0.5, 0.5});
  for (const auto& a : ak_sequence(g, g, 1e-6, 10)) EXPECT_EQ(a.value, 0.0);
}

TEST(AkSequence, MatchesDirectSummation) {
  const DiscretePrior g1 = DiscretePrior::point_mass(2.0), g2 = DiscretePrior::point_mass(3.0);
  const double rho = 1e-4;
  const auto seq = ak_sequence(g1, g2, rho, 3);
  for (int k = 0; k <= 3; ++k) {
    std::vector<double> terms;
    for (std::int64_t y = 0; y <= 500; ++y) {
      const double d1 = oracle::forward_diff_naive(g1, k, y);
      const double d2 = oracle::forward_diff_naive(g2, k, y);
      const double w = 1.0 / (std::max(oracle::mixture_pmf(g1, y), rho) + std::max(oracle::mixture_pmf(g2, y), rho));
      terms.push_back(std::pow(y + 1.0, k) * (d1 - d2) * (d1 - d2) * w);
    }
    EXPECT_NEAR(seq[static_cast<std::size_t>(k)].value, oracle::kahan(terms), 1e-10) << "k=" << k;
  }
}

TEST(AkSequence, PointwiseBound) {
  Rng rng = make_stream(19, {1});
  for (int t = 0; t < 20; ++t) {
    const DiscretePrior a = oracle::random_prior(rng, 5, 30.0);
    const DiscretePrior b = oracle::random_prior(rng, 5, 30.0);
    for (double rho : {1e-4, 1e-6}) {
      for (const auto& s : ak_sequence(a, b, rho, 10)) {
        EXPECT_GE(s.value, 0.0);
        EXPECT_LE(s.value, 4.0 * std::pow(static_cast<double>(s.k), s.k) / rho);
      }
    }
  }
}

TEST(AkSequence, Preconditions) {
  const DiscretePrior g = DiscretePrior::point_mass(1.0);
  EXPECT_THROW(ak_sequence(g, g, 0.0, 3), InvalidInput);
  EXPECT_THROW(ak_sequence(g, g, 0.5, 3), InvalidInput);
  EXPECT_THROW(ak_sequence(g, g, 1e-3, 31), InvalidInput);
}
