#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ebpois/discrete_prior.hpp"
#include "ebpois/finite_diff.hpp"
#include "ebpois/mixture.hpp"
#include "ebpois/random.hpp"

namespace ebpois {

/// Formulas exercised by the property suite. Defaults are the library
/// implementations; tests swap in perturbed versions to confirm the suite
/// notices.
struct Formulas {
  std::function<PoissonDivergences(double, double)> divergences = poisson_divergences;
  /// ((1 - p) / p) P(Bin(n, p) >= 1).
  std::function<double(int, double)> binomial_first_moment;
  /// (1 - p) / p^2 / (n + 1) P(Bin(n + 1, p) >= 2).
  std::function<double(int, double)> binomial_second_moment;
  std::function<double(int, std::int64_t, double)> charlier = ebpois::charlier;
  std::function<double(std::span<const double>, int, DiffDirection, std::int64_t)> finite_diff =
      ebpois::finite_diff;
  std::function<GeneratingFunctionPair(const DiscretePrior&, double)> generating_function =
      generating_function_check;
  std::function<double(double, double)> tail_bound = poisson_tail_bound;
  /// Bayes rule at y = 0 and Bayes risk of (1 - 1/u) delta_0 + (1/u) delta_{u M1}.
  std::function<double(double, double)> two_point_bayes_zero;
  std::function<double(double, double)> two_point_mmse;
  std::function<std::vector<WeightedDiffSequence>(const DiscretePrior&, const DiscretePrior&,
                                                  double, int)>
      ak = ak_sequence;
  std::function<double(const DiscretePrior&, int)> forward_energy = forward_diff_energy;

  Formulas();
};

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst observed error (or violation count) against `tolerance`.
  double worst = 0.0;
  double tolerance = 0.0;
  std::int64_t cases = 0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  int random_instances = 100;
  int ak_pairs = 50;
  int binomial_n_max = 60;
  bool include_npmle = true;
};

// Individual checks.
CheckResult check_divergences(const Formulas& f = {});
CheckResult check_binomial_identity(int n_max, const Formulas& f = {});
CheckResult check_binomial_second_moment(int n_max, const Formulas& f = {});
CheckResult check_summation_by_parts(int instances, std::uint64_t seed, const Formulas& f = {});
CheckResult check_generating_function(int instances, std::uint64_t seed, const Formulas& f = {});
CheckResult check_charlier_orthonormality(const Formulas& f = {});
CheckResult check_tail_bound(const Formulas& f = {});
CheckResult check_two_point_closed_forms(const Formulas& f = {});
CheckResult check_mixture_invariants(int instances, std::uint64_t seed);
CheckResult check_ak_bound(int pairs, std::uint64_t seed, const Formulas& f = {});
CheckResult check_diff_energy_bounds(int instances, std::uint64_t seed, const Formulas& f = {});
CheckResult check_ak_recursion(int pairs, std::uint64_t seed, const Formulas& f = {});
CheckResult check_npmle_certificates();

/// E[(n - X)/(X + 1)] and E[(n - X)/(X + 1)^2] for X ~ Bin(n, p) by
/// enumeration of the support.
double binomial_first_moment_enumerated(int n, double p);
double binomial_second_moment_enumerated(int n, double p);

struct BinomialIdentityReport {
  double max_first_error = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::int64_t cases = 0;
  bool passed = false;
};

/// First identity to 1e-12 relative; second within the ratio band [1/8, 8].
/// Requires 1 <= n_max <= 60.
BinomialIdentityReport binomial_identity_check(int n_max, const Formulas& f = {});

/// Random prior with 1..max_atoms atoms on [0, max_atom].
DiscretePrior random_prior(Rng& rng, int max_atoms, double max_atom);

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

VerifyReport run_verify(const VerifyOptions& options = {}, const Formulas& f = {});

}  // namespace ebpois
