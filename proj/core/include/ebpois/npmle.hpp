#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ebpois/discrete_prior.hpp"

namespace ebpois {

/// Empirical counts N(y) of a sample of nonnegative integers.
class CountHistogram {
 public:
  CountHistogram() = default;

  static CountHistogram from_observations(std::span<const std::int64_t> ys);
  /// Zero counts are dropped; negative keys or counts throw InvalidInput.
  static CountHistogram from_counts(const std::map<std::int64_t, std::int64_t>& counts);

  std::int64_t n() const { return n_; }
  std::int64_t count(std::int64_t y) const;
  bool empty() const { return n_ == 0; }

  /// Distinct observed values, ascending, and their counts.
  std::span<const std::int64_t> values() const { return values_; }
  std::span<const std::int64_t> counts() const { return counts_; }

  std::int64_t y_min() const { return values_.front(); }
  std::int64_t y_max() const { return values_.back(); }

  void add(std::int64_t y, std::int64_t times = 1);
  /// Removes one observation of y; throws InvalidInput if N(y) == 0.
  void remove_one(std::int64_t y);
  CountHistogram without_one(std::int64_t y) const;

  std::map<std::int64_t, std::int64_t> as_map() const;

  bool operator==(const CountHistogram&) const = default;

 private:
  std::vector<std::int64_t> values_;
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

/// Candidate atom locations for the solver, ascending and unique.
struct GridSpec {
  std::vector<double> points;
};

/// Grid on [max(1e-3, y_min / 2), 1.5 y_max] with `density` points per unit
/// of sqrt(theta), plus theta = 0 when N(0) > 0.
GridSpec grid_spec(const CountHistogram& data, int density);

struct NpmleFit {
  DiscretePrior prior = DiscretePrior::point_mass(0.0);
  double log_likelihood = 0.0;
  /// max over candidates of D(theta) / n - 1, floored at 0.
  double kkt_gap = 0.0;
  /// max over retained atoms of 1 - D(theta) / n, floored at 0.
  double support_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Log-likelihood after every iteration (nondecreasing).
  std::vector<double> trace;
};

/// Maximizes sum_y N(y) log f_G(y) over priors supported on the grid and on
/// local maximizers of the gradient function between grid points.
///
/// Each iteration inserts the local maxima of
///   D(theta) = sum_y N(y) Poi(y; theta) / f_G(y)
/// that exceed n, then re-solves the weights with a constrained Newton step
/// (nonnegative least squares) followed by a backtracking line search on the
/// log-likelihood. Stops once D <= n (1 + tol) on the candidates and
/// D >= n (1 - tol) on the support. A fit that runs out of iterations is
/// returned with converged == false.
NpmleFit fit_npmle(const CountHistogram& data, const GridSpec& grid,
                   double tol = 1e-6, int max_iter = 10000);

/// sum_y N(y) log f_G(y); -infinity when some observed y has f_G(y) == 0.
double log_likelihood(const DiscretePrior& prior, const CountHistogram& data);

/// D(theta) for each point.
std::vector<double> gradient_function(const DiscretePrior& prior,
                                      const CountHistogram& data,
                                      std::span<const double> thetas);

/// max(D(theta) / n - 1, 0) over the points.
double kkt_gap_on(const DiscretePrior& prior, const CountHistogram& data,
                  std::span<const double> thetas);

}  // namespace ebpois
