#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebpois/discrete_prior.hpp"
#include "ebpois/random.hpp"

namespace ebpois {

enum class PriorFamily {
  point_mass,
  two_point,
  discrete,
  heavy_tail,
  sqrt_cauchy,
  assouad,
  moment_class_extremal,
};

std::string_view family_name(PriorFamily family);

/// Parameters of the lower-bound construction G_tau.
struct AssouadParams {
  std::int64_t n = 1000;
  double p = 2.0;
  double m_p = 1.0;
  double c_p = 0.1;
  /// Explicit index range; -1 selects the default recipe.
  std::int64_t i0 = -1;
  std::int64_t N = -1;
  /// tau_i for i = i0..N; drawn from `seed` when empty.
  std::vector<int> tau;
  std::uint64_t seed = 0;
};

/// Declarative prior description. Only the fields of the chosen family are
/// read.
struct PriorSpec {
  PriorFamily family = PriorFamily::point_mass;
  /// point_mass
  double lambda = 1.0;
  /// two_point: (1 - eps) delta_0 + eps delta_a
  double eps = 0.0;
  double a = 0.0;
  /// discrete
  std::optional<DiscretePrior> atoms;
  /// heavy_tail tail index; moment_class_extremal moment order.
  double p = 2.0;
  /// moment_class_extremal: (1 - 1/u) delta_0 + (1/u) delta_{(u m_p)^(1/p)}
  double u = 2.0;
  double m_p = 1.0;
  AssouadParams assouad;

  /// Throws InvalidInput on out-of-range parameters.
  void validate() const;
};

/// Parses whitespace-separated key=value pairs, e.g.
///   family=heavy_tail p=2
///   family=two_point eps=0.01 a=10
///   family=discrete atoms=1,5 weights=0.5,0.5
///   family=assouad n=10000 p=2 m_p=1 i0=1 N=3 seed=7
PriorSpec parse_prior_spec(std::string_view text);
std::string to_string(const PriorSpec& spec);

struct ResolvedPrior {
  PriorSpec spec;
  /// Declared moment order.
  double p = 0.0;
  double p_moment = 0.0;
  /// Largest q with m_q < inf (infinite for compact families).
  double max_moment = std::numeric_limits<double>::infinity();
  /// Whether max_moment itself is finite (heavy_tail) or only approached.
  bool max_moment_inclusive = true;
  DiscretePrior discretization = DiscretePrior::point_mass(0.0);
  /// sup_{y <= certified_y_cap} |f_disc(y) - f_ref(y)| against a 4x refined
  /// reference (0 for exact families).
  double disc_error = 0.0;
  std::int64_t certified_y_cap = 0;
  /// Exact draw from the family (not from the discretization).
  double sample(Rng& rng) const;
};

/// Throws MomentInfinite when m_p is infinite and InvalidInput on bad input.
ResolvedPrior resolve(const PriorSpec& spec, double p, double disc_tol = 1e-6,
                      std::uint64_t seed = 0);

/// Normalizer 1 / int_e^inf a^-(p+1) (log a)^-2 da = 1 / E_2(p).
double heavy_tail_normalizer(double p);
/// c0 a^-(p+1) (log a)^-2 on [e, inf), 0 below e.
double heavy_tail_density(double p, double a);
/// Weight of delta_0 making m_p = c0 (1 - eps) = 1.
double heavy_tail_zero_mass(double p);

/// G_tau = w_0 delta_0 + sum_i w_i delta_{lambda_i}.
DiscretePrior assouad_prior(const AssouadParams& params);

/// Interval indices actually used by assouad_prior.
struct AssouadRange {
  std::int64_t i0 = 0;
  std::int64_t N = 0;
};
AssouadRange assouad_range(const AssouadParams& params);

/// Partial sums S(Y) of the posterior-variance series for the prior with
/// density a^-2 on [1, inf), at Y = 2^j <= y_cap.
struct DivergentSeries {
  std::vector<std::int64_t> y;
  std::vector<double> partial_sum;
  /// Smallest summand over 0..y_cap (nonnegative in exact arithmetic).
  double min_summand = 0.0;
};
DivergentSeries divergent_mmse_diagnostic(double p, std::int64_t y_cap);

/// f(y) for the a^-2 prior on [1, inf).
double inverse_square_mixture_pmf(std::int64_t y);

}  // namespace ebpois
