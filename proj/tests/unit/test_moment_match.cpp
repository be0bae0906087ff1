#include <cmath>

#include <gtest/gtest.h>

#include "ebpois/error.hpp"
#include "ebpois/moment_match.hpp"
#include "ebpois/priors.hpp"
#include "oracles.hpp"

using namespace ebpois;

namespace {

DiscretePrior uniform_grid(double hi, int points) {
  std::vector<double> a, w;
  for (int i = 0; i < points; ++i) {
    a.push_back(hi * (i + 0.5) / points);
    w.push_back(1.0);
  }
  return DiscretePrior::normalized(a, w);
}

}  // namespace

TEST(Quadrature, SingleMoment) {
  const std::vector<double> m = {0.3 * 4.0};
  const auto q = quadrature_from_moments(m, 0.3, 0.0, 10.0);
  ASSERT_EQ(q.atoms.size(), 1u);
  EXPECT_NEAR(q.atoms[0], 4.0, 1e-12);
  EXPECT_NEAR(q.weights[0], 0.3, 1e-15);
}

TEST(Quadrature, TwoPointGaussLegendre) {
  const std::vector<double> m = {1.0 / 2, 1.0 / 3, 1.0 / 4};
  const auto q = quadrature_from_moments(m, 1.0, 0.0, 1.0);
  ASSERT_EQ(q.atoms.size(), 2u);
  const double r = 0.5 / std::sqrt(3.0);
  EXPECT_NEAR(q.atoms[0], 0.5 - r, 1e-12);
  EXPECT_NEAR(q.atoms[1], 0.5 + r, 1e-12);
  EXPECT_NEAR(q.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(q.weights[1], 0.5, 1e-12);
}

TEST(Quadrature, RadauForEvenDegree) {
  const std::vector<double> m = {1.0 / 2, 1.0 / 3};
  const auto q = quadrature_from_moments(m, 1.0, 0.0, 1.0);
  ASSERT_EQ(q.atoms.size(), 2u);
  EXPECT_NEAR(q.atoms[0], 0.0, 1e-12);
  // Two-point Radau on [0, 1] with a node at 0: the other node is at 2/3.
  EXPECT_NEAR(q.atoms[1], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(q.weights[0], 0.25, 1e-12);
}

TEST(Quadrature, ReproducesMoments) {
  const DiscretePrior src = uniform_grid(7.0, 200);
  for (int L = 1; L <= 12; ++L) {
    std::vector<double> m;
    for (int k = 1; k <= L; ++k) m.push_back(src.moment(k));
    const auto q = quadrature_from_moments(m, 1.0, 0.0, 7.0);
    EXPECT_EQ(q.atoms.size(), static_cast<std::size_t>((L + 2) / 2));
    for (int k = 1; k <= L; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.atoms.size(); ++i) s += q.weights[i] * std::pow(q.atoms[i], k);
      EXPECT_NEAR(s, m[static_cast<std::size_t>(k - 1)], 1e-9 * m[static_cast<std::size_t>(k - 1)])
          << "L=" << L << " k=" << k;
    }
    for (double a : q.atoms) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 7.0);
    }
  }
}

TEST(Quadrature, DegenerateMomentsThrow) {
  // Moments of a point mass: the Hankel matrix of order 2 is singular.
  const std::vector<double> m = {2.0, 4.0, 8.0};
  EXPECT_THROW(quadrature_from_moments(m, 1.0, 0.0, 5.0), MomentDegeneracy);
}

TEST(Partition, Layout) {
  const auto P = quadratic_partition(64.0, 1e-3, 1.0);
  const double L = std::log(1e3);
  EXPECT_EQ(P.N, static_cast<std::int64_t>(std::ceil(std::sqrt(128.0 / L) - 1.0)));
  ASSERT_EQ(P.lo.size(), static_cast<std::size_t>(P.N + 1));
  EXPECT_EQ(P.lo[0], 0.0);
  EXPECT_NEAR(P.hi[0], L, 1e-12);
  EXPECT_NEAR(P.hi.back(), 128.0, 1e-12);
  for (std::size_t i = 1; i < P.lo.size(); ++i) EXPECT_DOUBLE_EQ(P.lo[i], P.hi[i - 1]);
  EXPECT_EQ(P.locate(0.0), 0);
  EXPECT_EQ(P.locate(128.0), -1);
}

TEST(LocalMatch, PointMassIsPreserved) {
  for (double theta : {0.0, 3.0, 40.0, 127.0}) {
    const auto r = local_moment_match(DiscretePrior::point_mass(theta), 64.0, 1e-3);
    EXPECT_NEAR(r.approximant.atoms()[0], theta, 1e-9 * std::max(1.0, theta));
    EXPECT_EQ(r.approximant.size(), 1u);
    EXPECT_LE(r.achieved_sup_error, 1e-14);
  }
}

TEST(LocalMatch, UniformSourceMeetsTolerance) {
  const DiscretePrior src = uniform_grid(10.0, 2000);
  const auto r = local_moment_match(src, 64.0, 1e-3);
  EXPECT_LE(r.achieved_sup_error, 1e-3);
  EXPECT_LT(r.atom_count, static_cast<std::int64_t>(src.size()));
  EXPECT_NEAR(r.achieved_sup_error, sup_pmf_difference(src, r.approximant, 64), 1e-15);
  // Independent check of the reported error.
  double worst = 0.0;
  for (std::int64_t y = 0; y <= 64; ++y)
    worst = std::max(worst, std::fabs(oracle::mixture_pmf(src, y) - oracle::mixture_pmf(r.approximant, y)));
  EXPECT_NEAR(r.achieved_sup_error, worst, 1e-12);
}

TEST(LocalMatch, MassAboveTwoMIsLumped) {
  const DiscretePrior src({1.0, 200.0, 300.0}, {0.5, 0.25, 0.25});
  const auto r = local_moment_match(src, 64.0, 1e-2);
  EXPECT_DOUBLE_EQ(r.approximant.max_atom(), 128.0);
  EXPECT_NEAR(r.approximant.weights().back(), 0.5, 1e-12);
}

TEST(LocalMatch, AtomsGrowLikeSqrtM) {
  PriorSpec s;
  s.family = PriorFamily::heavy_tail;
  s.p = 2.0;
  const DiscretePrior src = resolve(s, 2.0).discretization;
  std::vector<double> M = {64.0, 256.0, 1024.0}, atoms;
  for (double m : M) {
    const auto r = local_moment_match(src, m, 1e-3);
    atoms.push_back(static_cast<double>(r.atom_count));
    EXPECT_LE(static_cast<double>(r.atom_count), 5.0 * std::sqrt(m) * std::pow(std::log(1e3), 1.5));
  }
  // least-squares fit of atoms = c sqrt(M)
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < M.size(); ++i) {
    num += atoms[i] * std::sqrt(M[i]);
    den += M[i];
  }
  const double c = num / den;
  for (std::size_t i = 0; i < M.size(); ++i) {
    EXPECT_LE(atoms[i], 2.0 * c * std::sqrt(M[i]));
    EXPECT_GE(atoms[i], 0.5 * c * std::sqrt(M[i]));
  }
}

TEST(LocalMatch, RejectsBadArguments) {
  const DiscretePrior g = DiscretePrior::point_mass(1.0);
  EXPECT_THROW(local_moment_match(g, 0.0, 1e-3), InvalidInput);
  EXPECT_THROW(local_moment_match(g, 64.0, 0.5), InvalidInput);
}
