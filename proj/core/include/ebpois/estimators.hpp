#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebpois/mixture.hpp"
#include "ebpois/npmle.hpp"

namespace ebpois {

enum class EstimatorKind {
  oracle,
  mle,
  robbins_plain,
  robbins_addone,
  robbins_trunc,
  npmle_eb,
};

/// CLI names: oracle, mle, robbins, robbins-addone, robbins-trunc, npmle.
std::string_view estimator_name(EstimatorKind kind);
/// Throws InvalidInput on an unknown name.
EstimatorKind parse_estimator_kind(std::string_view name);

inline constexpr std::int64_t kNoTruncation = std::numeric_limits<std::int64_t>::max();

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::oracle;
  /// Identity (MLE) branch for y > y0. kNoTruncation disables it.
  std::int64_t y0 = kNoTruncation;
  double rho = 1e-10;
  double npmle_tol = 1e-6;
  int grid_density = 4;

  /// Throws InvalidInput when y0 < 0, or rho is outside (0, 1/e] for npmle_eb.
  void validate() const;
};

struct RobbinsValue {
  double value = 0.0;
  /// N(y) == 0 < N(y + 1) for the plain form.
  bool infinite = false;
  /// 0 / 0; value is 0.
  bool degenerate = false;
};

/// Plain: (y+1) N(y+1) / N(y). Add-one: (y+1) N(y+1) / (N(y) + 1).
RobbinsValue robbins(const CountHistogram& hist, std::int64_t y, bool addone);

/// Add-one Robbins for y <= y0, y otherwise.
double robbins_truncated(const CountHistogram& hist, std::int64_t y, std::int64_t y0);

/// (y+1) (Delta f(y) / max(f(y), rho) + 1), clamped at 0, for y <= y0; y
/// otherwise. f is the mixture of the fitted prior.
double npmle_eb(const NpmleFit& fit, std::int64_t y, std::int64_t y0, double rho);
double npmle_eb(const DiscretePrior& prior, std::int64_t y, std::int64_t y0, double rho);

struct TunedParameters {
  std::int64_t npmle_y0 = 0;
  double rho = 0.0;
  std::int64_t robbins_y0 = 0;
};

/// npmle_eb: rho = c n^-10, y0 = ceil(c n^(2/(2p+1)) m_p^(2/(2p+1))).
/// robbins_trunc: y0 = ceil(c (n / log^3 n)^(1/(p+2))).
/// Throws UnsupportedRegime for p <= 1 and InvalidInput for n < 2.
TunedParameters tune_defaults(std::int64_t n, double p, double m_p, double c = 1.0);

/// Per-y estimates of one rule over 0..y_cap.
struct FittedRule {
  EstimatorConfig config;
  std::vector<double> table;
  /// Plain Robbins divisions by zero (value capped at kInfiniteCap).
  std::vector<std::int64_t> infinite_at;
  std::vector<std::int64_t> degenerate_at;
  CountHistogram histogram;
  std::optional<NpmleFit> fit;

  static constexpr double kInfiniteCap = 1e12;

  std::int64_t y_cap() const { return static_cast<std::int64_t>(table.size()) - 1; }
  /// Throws RangeError beyond y_cap.
  double operator()(std::int64_t y) const;
};

/// Builds the rule from training data. `oracle` must cover y_cap + 1 when
/// config.kind is oracle and is ignored otherwise.
FittedRule fit_rule(const EstimatorConfig& config, const CountHistogram& train,
                    std::int64_t y_cap, const MixturePmf* oracle = nullptr);

/// max over y with f_G(y) >= 1e-12 of |theta_G(y) - y| / (sqrt(max(y, 1)) log(1 / f_G(y))).
double centered_bayes_diagnostic(const MixturePmf& pmf);

}  // namespace ebpois
