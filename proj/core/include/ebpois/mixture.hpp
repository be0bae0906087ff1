#pragma once

#include <cstdint>
#include <vector>

#include "ebpois/discrete_prior.hpp"

namespace ebpois {

/// log Poi(y; theta), with Poi(y; 0) = 1{y == 0}.
double log_poisson_pmf(std::int64_t y, double theta);

/// log f_G(y) by log-sum-exp over the atoms that can contribute.
///
/// Atoms are visited outward from y; a direction stops once the Poisson
/// factor drops more than 60 nats below the running maximum term, which
/// bounds the neglected relative mass by size() * e^-60.
double log_mixture_pmf(const DiscretePrior& prior, std::int64_t y);

/// Certified upper bound on P(Y > y) for Y ~ f_G, from the per-atom Chernoff
/// bound P(Poi(theta) >= k) <= exp(k - theta - k log(k / theta)).
double mixture_tail_bound(const DiscretePrior& prior, std::int64_t y);

/// Poisson deviation bound exp(-t^2 / (2 (theta + t))), valid for both
/// P(X - theta > t) and P(X - theta < -t).
double poisson_tail_bound(double theta, double t);

/// f_G(y) tabulated over 0..y_max with the tail beyond y_max certified
/// below the requested tolerance.
struct MixturePmf {
  std::vector<double> values;
  std::vector<double> log_values;
  /// P(Y > y_max); never larger than the tolerance the table was built for.
  double tail_mass = 0.0;
  DiscretePrior source = DiscretePrior::point_mass(0.0);

  std::int64_t y_max() const {
    return static_cast<std::int64_t>(values.size()) - 1;
  }
  double operator()(std::int64_t y) const {
    return (y < 0 || y > y_max()) ? 0.0 : values[static_cast<std::size_t>(y)];
  }
};

/// Tables are refused beyond this many entries (RangeError).
inline constexpr std::int64_t kMaxTableLength = std::int64_t{1} << 26;

/// y_max is the smallest integer >= min_y_max whose certified tail bound is
/// at most tail_tol.
MixturePmf pmf_table(const DiscretePrior& prior, double tail_tol,
                     std::int64_t min_y_max = 0);

/// (y + 1) f_G(y + 1) / f_G(y). Throws RangeError if y + 1 > y_max and
/// DegenerateSupport if f_G(y) == 0.
double bayes_rule(const MixturePmf& pmf, std::int64_t y);

/// E[theta | Y = y] and Var[theta | Y = y] computed from the atoms directly.
struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;
};
PosteriorMoments posterior_moments(const DiscretePrior& prior, std::int64_t y);

struct MmseEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Bayes risk of the posterior mean. Priors with at most two atoms are
/// summed exactly (std_error 0); otherwise a seeded Monte Carlo average of
/// (theta_G(Y) - theta)^2 over mc_draws pairs.
MmseEstimate mmse(const DiscretePrior& prior, std::int64_t mc_draws,
                  std::uint64_t seed);

/// sum_y f_G(y) Var(theta | Y = y) over the support of a pmf table built with
/// tail_tol.
double mmse_by_summation(const DiscretePrior& prior, double tail_tol = 1e-13);

/// Unnormalized squared Hellinger distance sum_y (sqrt f - sqrt g)^2.
///
/// The remainder beyond the shorter table is replaced by the Hellinger
/// distance between the two lumped tails, a lower bound on the true
/// remainder; the error is at most the joint tail mass, which must not
/// exceed 1e-10 (RangeError otherwise).
double hellinger_sq(const MixturePmf& f, const MixturePmf& g);

/// Closed forms for two Poisson laws. hellinger_sq here carries the 1/2
/// normalization, 1 - exp(-(sqrt(l) - sqrt(l2))^2 / 2); the unnormalized
/// sum returned by hellinger_sq(MixturePmf, MixturePmf) is twice it.
struct PoissonDivergences {
  double chi_sq = 0.0;
  double hellinger_sq = 0.0;
};
PoissonDivergences poisson_divergences(double lambda, double lambda2);

/// Both sides of phi_{f_G}(z) = phi_G(z - 1) for z in [0, 1].
struct GeneratingFunctionPair {
  double lhs = 0.0;
  double rhs = 0.0;
};
GeneratingFunctionPair generating_function_check(const DiscretePrior& prior,
                                                 double z);

}  // namespace ebpois
