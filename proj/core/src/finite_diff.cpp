#include "ebpois/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/mixture.hpp"

namespace ebpois {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

double at(std::span<const double> f, std::int64_t y) {
  if (y < 0 || y >= static_cast<std::int64_t>(f.size())) return 0.0;
  return f[static_cast<std::size_t>(y)];
}

void check_order(int k) {
  if (k < 0) throw InvalidInput("finite difference order must be >= 0");
}

}  // namespace

double finite_diff(std::span<const double> f, int order, DiffDirection direction,
                   std::int64_t y) {
  check_order(order);
  detail::KahanSum s;
  for (int i = 0; i <= order; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const double c = binomial(order, i);
    if (direction == DiffDirection::backward) {
      // nabla^k f(y) = sum_i (-1)^i C(k, i) f(y - i)
      s.add(sign * c * at(f, y - i));
    } else {
      // Delta^k f(y) = sum_i (-1)^(k - i) C(k, i) f(y + i)
      const double fsign = ((order - i) % 2 == 0) ? 1.0 : -1.0;
      s.add(fsign * c * at(f, y + i));
    }
  }
  return s.value();
}

std::vector<double> charlier_all(int k, std::int64_t y, double theta) {
  check_order(k);
  if (!(theta > 0.0)) throw InvalidInput("charlier: theta must be > 0");
  std::vector<double> p(static_cast<std::size_t>(k) + 1);
  p[0] = 1.0;
  if (k == 0) return p;
  const double yd = static_cast<double>(y);
  p[1] = (theta - yd) / std::sqrt(theta);
  for (int j = 1; j < k; ++j) {
    const double jd = static_cast<double>(j);
    const auto ju = static_cast<std::size_t>(j);
    p[ju + 1] = ((jd + theta - yd) * p[ju] - std::sqrt(jd * theta) * p[ju - 1]) /
                std::sqrt(theta * (jd + 1.0));
  }
  return p;
}

double charlier(int k, std::int64_t y, double theta) {
  return charlier_all(k, y, theta).back();
}

double poisson_backward_diff(int k, std::int64_t z, double theta) {
  check_order(k);
  if (z < 0) return 0.0;
  if (theta == 0.0) {
    // nabla^k delta_0(z) = (-1)^z C(k, z)
    if (z > k) return 0.0;
    const double sign = (z % 2 == 0) ? 1.0 : -1.0;
    return sign * binomial(k, static_cast<int>(z));
  }
  const double pk = charlier(k, z, theta);
  if (pk == 0.0) return 0.0;
  const double log_mag = log_poisson_pmf(z, theta) +
                         0.5 * detail::log_factorial(k) -
                         0.5 * static_cast<double>(k) * std::log(theta) +
                         std::log(std::abs(pk));
  return std::copysign(std::exp(log_mag), pk);
}

double mixture_forward_diff(const DiscretePrior& prior, int k, std::int64_t y) {
  const auto atoms = prior.atoms();
  const auto weights = prior.weights();
  detail::KahanSum s;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    s.add(weights[i] * poisson_backward_diff(k, y + k, atoms[i]));
  return s.value();
}

std::int64_t diff_summation_limit(const DiscretePrior& prior, int k) {
  std::int64_t y = static_cast<std::int64_t>(std::ceil(prior.max_atom())) + 1;
  while (mixture_tail_bound(prior, y) > 1e-30) y = y + y / 4 + 8;
  return y + k;
}

double forward_diff_energy(const DiscretePrior& prior, int k) {
  check_order(k);
  const std::int64_t limit = diff_summation_limit(prior, k);
  detail::KahanSum s;
  for (std::int64_t y = 0; y <= limit; ++y) {
    const double d = mixture_forward_diff(prior, k, y);
    s.add(std::pow(static_cast<double>(y + 1), k) * d * d);
  }
  return s.value();
}

double backward_diff_energy(const DiscretePrior& prior, int k) {
  check_order(k);
  const std::int64_t limit = diff_summation_limit(prior, k);
  const MixturePmf pmf = pmf_table(prior, 1e-30, limit + k);
  detail::KahanSum s;
  for (std::int64_t y = k; y <= pmf.y_max(); ++y) {
    const double d = finite_diff(pmf.values, k, DiffDirection::backward, y);
    s.add(std::pow(static_cast<double>(y - k + 1), k) * d * d);
  }
  return s.value();
}

std::vector<WeightedDiffSequence> ak_sequence(const DiscretePrior& g1,
                                              const DiscretePrior& g2, double rho,
                                              int k_max) {
  if (!(rho > 0.0 && rho <= std::exp(-1.0)))
    throw InvalidInput("ak_sequence: rho must lie in (0, 1/e]");
  if (k_max < 0 || k_max > 30)
    throw InvalidInput("ak_sequence: k_max must lie in [0, 30]");

  const std::int64_t limit =
      std::max(diff_summation_limit(g1, k_max), diff_summation_limit(g2, k_max));
  std::vector<double> weight(static_cast<std::size_t>(limit) + 1);
  for (std::int64_t y = 0; y <= limit; ++y) {
    const double f1 = std::exp(log_mixture_pmf(g1, y));
    const double f2 = std::exp(log_mixture_pmf(g2, y));
    weight[static_cast<std::size_t>(y)] = 1.0 / (std::max(f1, rho) + std::max(f2, rho));
  }

  std::vector<WeightedDiffSequence> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    detail::KahanSum s;
    for (std::int64_t y = 0; y <= limit; ++y) {
      const double d = mixture_forward_diff(g1, k, y) - mixture_forward_diff(g2, k, y);
      if (d == 0.0) continue;
      s.add(std::pow(static_cast<double>(y + 1), k) * d * d *
            weight[static_cast<std::size_t>(y)]);
    }
    out.push_back({k, s.value(), rho});
  }
  return out;
}

std::vector<double> ak_recursion_ratios(std::span<const WeightedDiffSequence> seq) {
  std::vector<double> ratios;
  for (std::size_t k = 1; k + 1 < seq.size(); ++k) {
    const double ak = std::sqrt(seq[k].value);
    const double akm1 = std::sqrt(seq[k - 1].value);
    const double akp1 = std::sqrt(seq[k + 1].value);
    if (ak <= 0.0 || akm1 <= 0.0) {
      ratios.push_back(0.0);
      continue;
    }
    ratios.push_back((ak * ak - akm1 * akp1) / (ak * akm1));
  }
  return ratios;
}

}  // namespace ebpois
