#include "ebpois/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/random.hpp"

namespace ebpois {

namespace detail {

double log_factorial(std::int64_t y) {
  static constexpr std::size_t kTable = 4096;
  static const std::array<double, kTable> table = [] {
    std::array<double, kTable> t{};
    t[0] = 0.0;
    for (std::size_t i = 1; i < kTable; ++i)
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (y < 0) return std::numeric_limits<double>::infinity();
  if (static_cast<std::size_t>(y) < kTable) return table[static_cast<std::size_t>(y)];
  return boost::math::lgamma(static_cast<double>(y) + 1.0);
}

}  // namespace detail

namespace {

using detail::kNegInf;

constexpr double kWindowMargin = 60.0;

struct Term {
  std::size_t index;
  double log_poi;
};

// Atoms whose Poisson factor at y lies within `margin` nats of the largest
// weighted term. Poi(y; theta) is unimodal in theta with mode at y, so the
// search walks outward from y and stops in each direction independently.
std::vector<Term> contributing_atoms(const DiscretePrior& prior, std::int64_t y,
                                     double margin) {
  const auto atoms = prior.atoms();
  const auto weights = prior.weights();
  const double yd = static_cast<double>(y);
  const auto mid = static_cast<std::size_t>(
      std::lower_bound(atoms.begin(), atoms.end(), yd) - atoms.begin());

  std::vector<Term> terms;
  double running_max = kNegInf;
  auto consider = [&](std::size_t i) {
    const double lp = log_poisson_pmf(y, atoms[i]);
    if (lp == kNegInf) return lp;
    running_max = std::max(running_max, lp + std::log(weights[i]));
    terms.push_back({i, lp});
    return lp;
  };

  bool go_left = mid > 0;
  bool go_right = mid < atoms.size();
  std::size_t left = mid;   // next to visit is left - 1
  std::size_t right = mid;  // next to visit is right
  while (go_left || go_right) {
    if (go_right) {
      const double lp = consider(right);
      ++right;
      if (right >= atoms.size() || lp < running_max - margin) go_right = false;
    }
    if (go_left) {
      --left;
      const double lp = consider(left);
      if (left == 0 || lp < running_max - margin) go_left = false;
    }
  }
  return terms;
}

// log P(Poi(theta) >= k) upper bound.
double log_chernoff_upper(double theta, std::int64_t k) {
  if (k <= 0) return 0.0;
  if (theta <= 0.0) return kNegInf;
  const double kd = static_cast<double>(k);
  if (kd <= theta) return 0.0;
  return kd - theta - kd * std::log(kd / theta);
}

}  // namespace

double log_poisson_pmf(std::int64_t y, double theta) {
  if (y < 0) return kNegInf;
  if (theta == 0.0) return y == 0 ? 0.0 : kNegInf;
  return static_cast<double>(y) * std::log(theta) - theta -
         detail::log_factorial(y);
}

double log_mixture_pmf(const DiscretePrior& prior, std::int64_t y) {
  if (y < 0) return kNegInf;
  const auto terms = contributing_atoms(prior, y, kWindowMargin);
  const auto weights = prior.weights();
  std::vector<double> logs;
  logs.reserve(terms.size());
  for (const auto& t : terms) logs.push_back(t.log_poi + std::log(weights[t.index]));
  return detail::log_sum_exp(logs);
}

double mixture_tail_bound(const DiscretePrior& prior, std::int64_t y) {
  const auto atoms = prior.atoms();
  const auto weights = prior.weights();
  detail::KahanSum s;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double lb = log_chernoff_upper(atoms[i], y + 1);
    if (lb > kNegInf) s.add(weights[i] * std::exp(lb));
  }
  return std::min(1.0, s.value());
}

double poisson_tail_bound(double theta, double t) {
  if (!(t > 0.0)) throw InvalidInput("poisson_tail_bound: t must be > 0");
  if (theta < 0.0) throw InvalidInput("poisson_tail_bound: theta must be >= 0");
  return std::exp(-t * t / (2.0 * (theta + t)));
}

MixturePmf pmf_table(const DiscretePrior& prior, double tail_tol,
                     std::int64_t min_y_max) {
  if (!(tail_tol > 0.0 && tail_tol < 1.0))
    throw InvalidInput("pmf_table: tail_tol must lie in (0, 1)");

  // Smallest y with certified tail <= tol: exponential then binary search.
  std::int64_t hi = std::max<std::int64_t>(min_y_max, 1);
  while (mixture_tail_bound(prior, hi) > tail_tol) {
    if (hi >= kMaxTableLength)
      throw RangeError("pmf_table: tail tolerance needs a table longer than " +
                       std::to_string(kMaxTableLength));
    hi *= 2;
  }
  std::int64_t lo = min_y_max;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (mixture_tail_bound(prior, mid) <= tail_tol) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int64_t y_max = hi;

  MixturePmf pmf{.values = {}, .log_values = {}, .tail_mass = 0.0, .source = prior};
  pmf.values.resize(static_cast<std::size_t>(y_max) + 1);
  pmf.log_values.resize(pmf.values.size());
  detail::KahanSum total;
  for (std::int64_t y = 0; y <= y_max; ++y) {
    const double lf = log_mixture_pmf(prior, y);
    const auto idx = static_cast<std::size_t>(y);
    pmf.log_values[idx] = lf;
    pmf.values[idx] = std::exp(lf);
    total.add(pmf.values[idx]);
  }
  pmf.tail_mass = std::max(0.0, 1.0 - total.value());
  return pmf;
}

double bayes_rule(const MixturePmf& pmf, std::int64_t y) {
  if (y < 0 || y + 1 > pmf.y_max())
    throw RangeError("bayes_rule: y outside the tabulated range");
  const double lf = pmf.log_values[static_cast<std::size_t>(y)];
  if (lf == kNegInf)
    throw DegenerateSupport("bayes_rule: f_G(" + std::to_string(y) +
                            ") = 0, y is unreachable under G");
  const double lf1 = pmf.log_values[static_cast<std::size_t>(y + 1)];
  if (lf1 == kNegInf) return 0.0;
  return static_cast<double>(y + 1) * std::exp(lf1 - lf);
}

PosteriorMoments posterior_moments(const DiscretePrior& prior, std::int64_t y) {
  // theta * Poi(y; theta) is also unimodal; widen the margin for the moment
  // factors theta and theta^2.
  const auto terms = contributing_atoms(prior, y, kWindowMargin + 40.0);
  if (terms.empty())
    throw DegenerateSupport("posterior_moments: f_G(y) = 0");
  const auto atoms = prior.atoms();
  const auto weights = prior.weights();
  std::vector<double> logs;
  logs.reserve(terms.size());
  for (const auto& t : terms) logs.push_back(t.log_poi + std::log(weights[t.index]));
  const double lse = detail::log_sum_exp(logs);
  detail::KahanSum mean;
  for (std::size_t j = 0; j < terms.size(); ++j)
    mean.add(std::exp(logs[j] - lse) * atoms[terms[j].index]);
  const double m = mean.value();
  detail::KahanSum var;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const double d = atoms[terms[j].index] - m;
    var.add(std::exp(logs[j] - lse) * d * d);
  }
  return {m, var.value()};
}

double mmse_by_summation(const DiscretePrior& prior, double tail_tol) {
  const MixturePmf pmf = pmf_table(prior, tail_tol);
  detail::KahanSum s;
  for (std::int64_t y = 0; y <= pmf.y_max(); ++y) {
    const double f = pmf(y);
    if (f <= 0.0) continue;
    s.add(f * posterior_moments(prior, y).variance);
  }
  return s.value();
}

MmseEstimate mmse(const DiscretePrior& prior, std::int64_t mc_draws,
                  std::uint64_t seed) {
  if (mc_draws < 1) throw InvalidInput("mmse: mc_draws must be >= 1");
  if (prior.size() <= 2) return {mmse_by_summation(prior, 1e-15), 0.0};

  Rng rng = make_stream(seed, {0x6d6d7365ULL});
  std::discrete_distribution<std::size_t> pick(prior.weights().begin(),
                                               prior.weights().end());
  const auto atoms = prior.atoms();
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < mc_draws; ++i) {
    const double theta = atoms[pick(rng)];
    const std::int64_t y = sample_poisson(rng, theta);
    const double err = posterior_moments(prior, y).mean - theta;
    const double x = err * err;
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double n = static_cast<double>(mc_draws);
  const double se = mc_draws > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  return {mean, se};
}

double hellinger_sq(const MixturePmf& f, const MixturePmf& g) {
  const std::int64_t common = std::min(f.y_max(), g.y_max());
  detail::KahanSum head;
  detail::KahanSum f_beyond;
  detail::KahanSum g_beyond;
  for (std::int64_t y = 0; y <= common; ++y) {
    const double d = std::sqrt(f(y)) - std::sqrt(g(y));
    head.add(d * d);
  }
  for (std::int64_t y = common + 1; y <= f.y_max(); ++y) f_beyond.add(f(y));
  for (std::int64_t y = common + 1; y <= g.y_max(); ++y) g_beyond.add(g(y));
  const double tf = f_beyond.value() + f.tail_mass;
  const double tg = g_beyond.value() + g.tail_mass;
  if (tf + tg > 1e-10)
    throw RangeError(
        "hellinger_sq: joint tail mass beyond the common range exceeds 1e-10; "
        "rebuild the tables with a smaller tail_tol");
  const double lumped = std::sqrt(tf) - std::sqrt(tg);
  return head.value() + lumped * lumped;
}

PoissonDivergences poisson_divergences(double lambda, double lambda2) {
  if (!(lambda > 0.0 && lambda2 > 0.0))
    throw InvalidInput("poisson_divergences: rates must be > 0");
  const double d = lambda - lambda2;
  const double s = std::sqrt(lambda) - std::sqrt(lambda2);
  return {std::expm1(d * d / lambda2), -std::expm1(-s * s / 2.0)};
}

GeneratingFunctionPair generating_function_check(const DiscretePrior& prior,
                                                 double z) {
  if (!(z >= 0.0 && z <= 1.0))
    throw InvalidInput("generating_function_check: z must lie in [0, 1]");
  // Truncation remainder is at most tail_mass * z^(y_max + 1) <= 1e-13.
  const MixturePmf pmf = pmf_table(prior, 1e-13);
  detail::KahanSum lhs;
  double zp = 1.0;
  for (std::int64_t y = 0; y <= pmf.y_max(); ++y) {
    lhs.add(pmf(y) * zp);
    zp *= z;
  }
  detail::KahanSum rhs;
  const auto atoms = prior.atoms();
  const auto weights = prior.weights();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    rhs.add(weights[i] * std::exp((z - 1.0) * atoms[i]));
  return {lhs.value(), rhs.value()};
}

}  // namespace ebpois
