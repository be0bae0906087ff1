#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ebpois/discrete_prior.hpp"

namespace ebpois {

/// I_i = [i^2 C log(1/eta), min((i+1)^2 C log(1/eta), 2M)) for i = 0..N,
/// N = ceil(sqrt(2M / (C log(1/eta))) - 1).
struct QuadraticPartition {
  std::vector<double> lo;
  std::vector<double> hi;
  double C = 1.0;
  double eta_bar = 0.0;
  double M = 0.0;
  std::int64_t N = 0;

  /// Index of the interval containing theta, or -1 when theta >= 2M.
  std::int64_t locate(double theta) const;
};

QuadraticPartition quadratic_partition(double M, double eta, double C);

struct MomentMatchConfig {
  /// Degree schedule: L_i = C1 (i+1)^2 eta_bar^2 for i <= M^(1/6) and
  /// Cprime * 9 C eta_bar beyond, both capped at degree_cap.
  double C1 = 1.0;
  double Cprime = 1.0;
  int degree_cap = 40;
  /// Constant K of the atom budget K sqrt(M) log(1/eta)^(3/2).
  double K = 5.0;
};

struct IntervalMatch {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
  int degree = 0;
  std::int64_t source_atoms = 0;
  std::int64_t atoms = 0;
  /// Largest |moment difference| over k <= degree in the [-1, 1] coordinate.
  double moment_error = 0.0;
  bool copied = false;
  bool reduced = false;
};

struct MatchReport {
  DiscretePrior approximant = DiscretePrior::point_mass(0.0);
  std::int64_t atom_count = 0;
  double achieved_sup_error = 0.0;
  double budget = 0.0;
  double M = 0.0;
  double eta = 0.0;
  QuadraticPartition partition;
  std::vector<IntervalMatch> intervals;
  std::vector<std::string> warnings;
};

/// Replaces the source on each interval by a Gauss rule matching its first
/// L_i moments and lumps the mass at or above 2M into an atom at 2M.
/// achieved_sup_error = max_{y <= M} |f_source(y) - f_approx(y)|.
MatchReport local_moment_match(const DiscretePrior& source, double M, double eta,
                               double C = 1.0, const MomentMatchConfig& config = {});

/// max_{y <= y_max} |f_a(y) - f_b(y)| by direct per-atom summation.
double sup_pmf_difference(const DiscretePrior& a, const DiscretePrior& b,
                          std::int64_t y_max);

/// Unnormalized atoms and weights (weights sum to the mass).
struct QuadratureRule {
  std::vector<double> atoms;
  std::vector<double> weights;
};

/// Gauss rule for a measure on [lo, hi] of total `mass` with raw moments
/// moments[k-1] = int x^k dmu, k = 1..L. Returns ceil((L+1)/2) nodes: Gauss
/// for odd L, Gauss-Radau with a node at lo for even L. The moments are
/// mapped to [-1, 1] before the Hankel/Cholesky step. Throws
/// MomentDegeneracy when the Hankel matrix is not numerically positive
/// definite.
QuadratureRule quadrature_from_moments(std::span<const double> moments, double mass,
                                       double lo, double hi);

}  // namespace ebpois
