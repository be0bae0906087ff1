#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ebpois/estimators.hpp"
#include "ebpois/mixture.hpp"
#include "ebpois/npmle.hpp"
#include "ebpois/priors.hpp"

namespace ebpois {

// ---------------------------------------------------------------------------
// Ground truth shared by the trials of one prior

/// Certified reference quantities derived from a resolved prior.
struct Truth {
  ResolvedPrior prior;
  /// f_G tabulated at least to y_cap + 1.
  MixturePmf pmf;
  /// Smallest y with P(Y <= y) >= 1 - 1e-9.
  std::int64_t y_cap = 0;
  /// P(Y > y_cap).
  double tail_beyond_cap = 0.0;
  double mmse = 0.0;
  /// Oracle Bayes rule over 0..y_cap.
  std::vector<double> bayes;
  /// sum_{y_cap < y < y_max} f_G(y) (y - theta_G(y))^2.
  double identity_tail = 0.0;
};

Truth make_truth(ResolvedPrior prior);

struct Draws {
  std::vector<double> theta;
  std::vector<std::int64_t> y;
};

/// n i.i.d. pairs (theta_i, Y_i) from the exact sampler of the prior.
Draws draw_pairs(const ResolvedPrior& prior, std::int64_t n, Rng& rng);

struct SolverConfig {
  double tol = 1e-6;
  int max_iter = 10000;
  int grid_density = 4;
};

// ---------------------------------------------------------------------------
// Trials

struct DensityRiskResult {
  double hellinger_sq = 0.0;
  bool converged = false;
  double kkt_gap = 0.0;
  std::int64_t atoms = 0;
};

/// Draws n counts, fits the NPMLE and returns H^2(f_fit, f_G) (unnormalized).
DensityRiskResult density_risk_trial(const Truth& truth, std::int64_t n, std::uint64_t seed,
                                     const SolverConfig& solver = {});

struct RegretResult {
  double regret = 0.0;
  /// sum_{y > y_cap} f_G(y) (y - theta_G(y))^2 as far as the truth table
  /// reaches: the uncovered contribution of an identity tail.
  double tail_uncertainty = 0.0;
  bool failed = false;
  std::int64_t capped = 0;
  std::int64_t y0 = 0;
};

/// Trains the rule on n - 1 draws and returns
///   sum_{y <= y_cap} f_G(y) (theta_hat(y) - theta_G(y))^2.
RegretResult individual_regret_trial(const Truth& truth, std::int64_t n,
                                     const EstimatorConfig& method, std::uint64_t seed);

/// Same, on an explicit training sample.
RegretResult individual_regret_on(const Truth& truth, const CountHistogram& train,
                                  const EstimatorConfig& method);

struct TotalRegretResult {
  /// n x individual regret (training on the first n - 1 draws).
  double via_individual = 0.0;
  /// sum_i (theta_hat(Y_i; Y without i) - theta_i)^2 - n mmse, when requested.
  std::optional<double> direct;
  bool failed = false;
};

TotalRegretResult total_regret_trial(const Truth& truth, std::int64_t n,
                                     const EstimatorConfig& method, std::uint64_t seed,
                                     bool direct = true);

struct InstabilityCensus {
  /// y with N(y) == 0 < N(y + 1).
  std::int64_t infinite = 0;
  /// y with a finite estimate above 100 max(y, 1).
  std::int64_t huge = 0;
  double max_finite = 0.0;
};

/// Census of the plain Robbins rule on n draws.
InstabilityCensus robbins_instability_probe(const ResolvedPrior& prior, std::int64_t n,
                                            std::uint64_t seed);
InstabilityCensus robbins_instability_census(const CountHistogram& hist);

// ---------------------------------------------------------------------------
// Rate fitting

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::int64_t n_points = 0;
  std::int64_t excluded = 0;
};

/// OLS of log(value) on log(n) with a 95% t-interval for the slope.
/// Nonpositive values are excluded; needs >= 4 remaining points spanning at
/// least 1.5 decades of n (InvalidInput otherwise).
RateFit fit_rate(std::span<const std::pair<double, double>> points);

// ---------------------------------------------------------------------------
// Plans and reports

enum class Metric { hellinger_sq, individual_regret, total_regret };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

struct MethodSpec {
  EstimatorConfig config;
  /// y0 (and rho for npmle) from tune_defaults(n, p, m_p) when unset.
  bool tune_y0 = true;
  bool tune_rho = true;
  std::string label() const;
};

/// "npmle", "robbins-trunc:y0=5", "npmle:rho=1e-8:y0=20", "robbins-addone".
MethodSpec parse_method(std::string_view text);

/// Fills the tuned parameters for sample size n.
EstimatorConfig resolve_method(const MethodSpec& method, std::int64_t n, double p,
                               double m_p, double c = 1.0);

struct ExperimentPlan {
  PriorSpec prior;
  double p = 2.0;
  std::vector<std::int64_t> n_grid;
  std::int64_t replicates = 1;
  std::vector<MethodSpec> methods;
  std::vector<Metric> metrics;
  std::uint64_t seed = 0;
  double disc_tol = 1e-6;
  double tune_c = 1.0;
  bool direct_total = false;
  SolverConfig solver;
  /// Worker threads; the output does not depend on it.
  int threads = 1;

  void validate() const;
};

/// key = value lines; '#' starts a comment. Keys: prior, p, n_grid,
/// replicates, methods, metrics, seed, disc_tol, tune_c, direct_total,
/// npmle_tol, grid_density, max_iter, threads.
ExperimentPlan parse_plan(std::string_view text);

struct ReportRow {
  std::int64_t n = 0;
  std::int64_t replicate = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  std::string flags;
};

struct SlopeRow {
  std::string method;
  std::string metric;
  RateFit fit;
};

struct ExperimentReport {
  /// Resolved configuration, written as "# key=value" header lines.
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<ReportRow> rows;
  std::vector<SlopeRow> slopes;
  double runtime_seconds = 0.0;

  /// Mean over non-failed replicates, and its standard error.
  struct Summary {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t count = 0;
  };
  Summary summarize(std::int64_t n, std::string_view method, std::string_view metric) const;
  std::vector<double> values(std::int64_t n, std::string_view method,
                             std::string_view metric) const;
};

using ProgressFn = std::function<void(std::string_view)>;

ExperimentReport run_experiment(const ExperimentPlan& plan, const ProgressFn& progress = {});

void write_rows_csv(std::ostream& os, const ExperimentReport& report);
void write_slopes_csv(std::ostream& os, const ExperimentReport& report);

}  // namespace ebpois
