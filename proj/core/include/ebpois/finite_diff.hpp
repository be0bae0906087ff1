#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ebpois/discrete_prior.hpp"

namespace ebpois {

enum class DiffDirection { forward, backward };

/// Delta^k f(y) or nabla^k f(y) by the binomial expansion. The sequence is
/// zero-extended outside [0, f.size()).
double finite_diff(std::span<const double> f, int order, DiffDirection direction,
                   std::int64_t y);

/// Orthonormal Poisson-Charlier polynomial
///   p_k(y; theta) = theta^(k/2) / sqrt(k!) * nabla^k Poi(y; theta) / Poi(y; theta),
/// evaluated with the three-term recurrence
///   sqrt(theta (j+1)) p_{j+1} = (j + theta - y) p_j - sqrt(j theta) p_{j-1}.
double charlier(int k, std::int64_t y, double theta);

/// p_0 .. p_k at one point.
std::vector<double> charlier_all(int k, std::int64_t y, double theta);

/// nabla^k Poi(z; theta) without cancellation, via the Charlier factor.
double poisson_backward_diff(int k, std::int64_t z, double theta);

/// Delta^k f_G(y) = sum_i w_i nabla^k Poi(y + k; theta_i).
double mixture_forward_diff(const DiscretePrior& prior, int k, std::int64_t y);

/// Upper end of the y-range used by the infinite sums below; the mixture
/// mass beyond it (and k further points) is certified below 1e-30.
std::int64_t diff_summation_limit(const DiscretePrior& prior, int k);

/// sum_{y >= 0} (y + 1)^k (Delta^k f_G(y))^2. At most 2 k! for every G and,
/// for even k, at most 2^(3k) k!.
double forward_diff_energy(const DiscretePrior& prior, int k);

/// sum_{y >= k} (y - k + 1)^k (nabla^k f_G(y))^2 computed from a pmf table and
/// the backward binomial expansion. Equal to forward_diff_energy by the shift
/// Delta^k f(y) = nabla^k f(y + k); kept as an independent route.
double backward_diff_energy(const DiscretePrior& prior, int k);

/// One term of the weighted finite-difference sequence A_k^2(G1, G2; rho).
struct WeightedDiffSequence {
  int k = 0;
  double value = 0.0;
  double rho = 0.0;
};

/// A_k^2 = sum_y (y+1)^k (Delta^k f_G1(y) - Delta^k f_G2(y))^2 w(y),
/// w(y) = 1 / (max(f_G1(y), rho) + max(f_G2(y), rho)), for k = 0..k_max.
/// Requires rho in (0, 1/e] and k_max <= 30.
std::vector<WeightedDiffSequence> ak_sequence(const DiscretePrior& g1,
                                              const DiscretePrior& g2, double rho,
                                              int k_max);

/// Ratio (A_k^2 - A_{k-1} A_{k+1}) / (A_k A_{k-1}) for k = 1..size-2; entries
/// where A_k or A_{k-1} vanishes are reported as 0.
std::vector<double> ak_recursion_ratios(std::span<const WeightedDiffSequence> seq);

}  // namespace ebpois
