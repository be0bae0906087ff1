#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// into the library apart from reading atoms and weights of a prior.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "ebpois/discrete_prior.hpp"
#include "ebpois/random.hpp"

namespace oracle {

inline double kahan(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

inline long double factorial_ld(int k) {
  long double r = 1.0L;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double poisson_pmf(std::int64_t y, double theta) {
  if (y < 0) return 0.0;
  if (theta == 0.0) return y == 0 ? 1.0 : 0.0;
  const double yy = static_cast<double>(y);
  return std::exp(yy * std::log(theta) - theta - std::lgamma(yy + 1.0));
}

inline long double poisson_pmf_ld(std::int64_t y, double theta) {
  if (y < 0) return 0.0L;
  const long double t = theta;
  const long double yy = static_cast<long double>(y);
  return std::exp(yy * std::log(t) - t - std::lgamma(yy + 1.0L));
}

inline double mixture_pmf(const ebpois::DiscretePrior& g, std::int64_t y) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights()[i] * poisson_pmf(y, g.atoms()[i]);
  return s;
}

/// Delta^k f_G(y) from the plain binomial expansion of the mixture pmf.
inline double forward_diff_naive(const ebpois::DiscretePrior& g, int k, std::int64_t y) {
  long double s = 0.0L;
  for (int j = 0; j <= k; ++j) {
    long double f = 0.0L;
    for (std::size_t i = 0; i < g.size(); ++i) f += g.weights()[i] * poisson_pmf_ld(y + j, g.atoms()[i]);
    s += ((k - j) % 2 ? -1.0L : 1.0L) * binom(k, j) * f;
  }
  return static_cast<double>(s);
}

/// Bayes risk by explicit posterior variance at each y.
inline double mmse_brute(const ebpois::DiscretePrior& g, std::int64_t y_hi) {
  std::vector<double> terms;
  for (std::int64_t y = 0; y <= y_hi; ++y) {
    long double f = 0.0L, m1 = 0.0L, m2 = 0.0L;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const long double p = g.weights()[i] * poisson_pmf_ld(y, g.atoms()[i]);
      f += p;
      m1 += p * g.atoms()[i];
      m2 += p * g.atoms()[i] * g.atoms()[i];
    }
    if (f <= 0.0L) continue;
    terms.push_back(static_cast<double>(m2 - m1 * m1 / f));
  }
  return kahan(terms);
}

inline ebpois::DiscretePrior random_prior(ebpois::Rng& rng, int max_atoms, double max_atom) {
  std::uniform_int_distribution<int> na(1, max_atoms);
  std::uniform_real_distribution<double> loc(0.0, max_atom), wt(0.05, 1.0);
  const int k = na(rng);
  std::vector<double> a(static_cast<std::size_t>(k)), w(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    a[static_cast<std::size_t>(i)] = loc(rng);
    w[static_cast<std::size_t>(i)] = wt(rng);
  }
  return ebpois::DiscretePrior::normalized(a, w);
}

/// Poisson log-likelihood sum_y N(y) log f_G(y).
inline double log_likelihood(const ebpois::DiscretePrior& g, const std::map<std::int64_t, std::int64_t>& counts) {
  double s = 0.0;
  for (auto [y, c] : counts) s += static_cast<double>(c) * std::log(mixture_pmf(g, y));
  return s;
}

/// Directional derivative of the normalized log-likelihood towards delta_theta.
inline double gradient(const ebpois::DiscretePrior& g, const std::map<std::int64_t, std::int64_t>& counts,
                       double theta) {
  double n = 0.0, s = 0.0;
  for (auto [y, c] : counts) {
    n += static_cast<double>(c);
    s += static_cast<double>(c) * poisson_pmf(y, theta) / mixture_pmf(g, y);
  }
  return s / n - 1.0;
}

/// Ordinary least squares slope on log-log data.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
