#include "ebpois/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/npmle.hpp"

namespace ebpois {

namespace {

double lpois(std::int64_t y, double theta) {
  if (theta == 0.0) return y == 0 ? 0.0 : detail::kNegInf;
  const double yd = static_cast<double>(y);
  return yd * std::log(theta) - theta - std::lgamma(yd + 1.0);
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

CheckResult make(std::string name, double worst, double tol, std::int64_t cases,
                 std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.worst = worst;
  r.tolerance = tol;
  r.cases = cases;
  r.passed = std::isfinite(worst) && worst <= tol;
  r.detail = std::move(detail);
  return r;
}

template <typename... Args>
std::string describe(const char* fmt, Args... args) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

Formulas::Formulas() {
  binomial_first_moment = [](int n, double p) {
    return (1.0 - p) / p * -std::expm1(static_cast<double>(n) * std::log1p(-p));
  };
  binomial_second_moment = [](int n, double p) {
    const double m = static_cast<double>(n) + 1.0;
    const double q0 = std::exp(m * std::log1p(-p));
    const double q1 = m * p * std::exp((m - 1.0) * std::log1p(-p));
    return (1.0 - p) / (p * p) / m * std::max(0.0, 1.0 - q0 - q1);
  };
  two_point_bayes_zero = [](double u, double m1) {
    const double e = std::exp(-u * m1);
    return u * m1 * e / ((u - 1.0) + e);
  };
  two_point_mmse = [](double u, double m1) {
    const double e = std::exp(-u * m1);
    return u * (u - 1.0) * m1 * m1 * e / (u - 1.0 + e);
  };
}

DiscretePrior random_prior(Rng& rng, int max_atoms, double max_atom) {
  std::uniform_int_distribution<int> count(1, max_atoms);
  const int k = count(rng);
  std::vector<double> atoms, weights;
  for (int i = 0; i < k; ++i) {
    atoms.push_back(max_atom * uniform_open(rng));
    weights.push_back(-std::log(uniform_open(rng)));
  }
  return DiscretePrior::normalized(std::move(atoms), std::move(weights));
}

// ---------------------------------------------------------------------------

CheckResult check_divergences(const Formulas& f) {
  const double lambdas[] = {0.5, 1.0, 2.0, 3.0, 5.0};
  const double lambdas2[] = {0.7, 1.0, 2.5, 4.0};
  double worst = 0.0;
  std::int64_t cases = 0;
  for (double l : lambdas) {
    for (double l2 : lambdas2) {
      detail::KahanSum chi, hel;
      for (std::int64_t y = 0; y <= 600; ++y) {
        const double lp = lpois(y, l), lq = lpois(y, l2);
        const double q = std::exp(lq);
        const double r = std::expm1(lp - lq);
        chi.add(q * r * r);
        const double s = std::expm1(0.5 * (lp - lq));
        hel.add(0.5 * q * s * s);
      }
      const PoissonDivergences d = f.divergences(l, l2);
      worst = std::max({worst, rel_err(d.chi_sq, chi.value()), rel_err(d.hellinger_sq, hel.value())});
      ++cases;
    }
  }
  return make("divergence_closed_forms", worst, 1e-10, cases);
}

double binomial_first_moment_enumerated(int n, double p) {
  if (n < 1 || n > 60 || !(p > 0.0 && p < 1.0)) throw InvalidInput("binomial: need 1 <= n <= 60, p in (0,1)");
  long double pk = std::pow(1.0L - p, n);
  const long double odds = static_cast<long double>(p) / (1.0L - p);
  long double s = 0.0L;
  for (int k = 0; k <= n; ++k) {
    s += pk * (n - k) / (k + 1);
    pk = pk * (n - k) / (k + 1) * odds;
  }
  return static_cast<double>(s);
}

double binomial_second_moment_enumerated(int n, double p) {
  if (n < 1 || n > 60 || !(p > 0.0 && p < 1.0)) throw InvalidInput("binomial: need 1 <= n <= 60, p in (0,1)");
  long double pk = std::pow(1.0L - p, n);
  const long double odds = static_cast<long double>(p) / (1.0L - p);
  long double s = 0.0L;
  for (int k = 0; k <= n; ++k) {
    s += pk * (n - k) / ((k + 1.0L) * (k + 1.0L));
    pk = pk * (n - k) / (k + 1) * odds;
  }
  return static_cast<double>(s);
}

namespace {
constexpr double kBinomialPs[] = {0.01, 0.1, 0.3, 0.5, 0.7, 0.9};
}

BinomialIdentityReport binomial_identity_check(int n_max, const Formulas& f) {
  if (n_max < 1 || n_max > 60) throw InvalidInput("binomial_identity_check: n_max must be in [1, 60]");
  BinomialIdentityReport r;
  r.min_ratio = std::numeric_limits<double>::infinity();
  r.max_ratio = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    for (double p : kBinomialPs) {
      r.max_first_error = std::max(
          r.max_first_error, rel_err(f.binomial_first_moment(n, p), binomial_first_moment_enumerated(n, p)));
      const double ratio = binomial_second_moment_enumerated(n, p) / f.binomial_second_moment(n, p);
      r.min_ratio = std::min(r.min_ratio, ratio);
      r.max_ratio = std::max(r.max_ratio, ratio);
      ++r.cases;
    }
  }
  r.passed = r.max_first_error <= 1e-12 && r.min_ratio >= 0.125 && r.max_ratio <= 8.0;
  return r;
}

CheckResult check_binomial_identity(int n_max, const Formulas& f) {
  const auto r = binomial_identity_check(n_max, f);
  return make("binomial_first_moment", r.max_first_error, 1e-12, r.cases);
}

CheckResult check_binomial_second_moment(int n_max, const Formulas& f) {
  const auto r = binomial_identity_check(n_max, f);
  // distance of log ratio outside the band
  const double excess = std::max({0.0, std::log(r.max_ratio / 8.0), std::log(0.125 / r.min_ratio)});
  return make("binomial_second_moment_band", excess, 0.0, r.cases,
              describe("ratio range [%.4g, %.4g]", r.min_ratio, r.max_ratio));
}

CheckResult check_summation_by_parts(int instances, std::uint64_t seed, const Formulas& f) {
  Rng rng = make_stream(seed, {0x736270ULL});
  std::uniform_int_distribution<int> len(1, 30);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int L = len(rng);
    std::vector<double> a(static_cast<std::size_t>(L)), b(static_cast<std::size_t>(L));
    for (auto& x : a) x = val(rng);
    for (auto& x : b) x = val(rng);
    for (int k = 1; k <= 3; ++k) {
      double lhs = 0.0, rhs = 0.0;
      for (std::int64_t y = 0; y <= L + k; ++y) {
        const double ay = y < L ? a[static_cast<std::size_t>(y)] : 0.0;
        const double by = y < L ? b[static_cast<std::size_t>(y)] : 0.0;
        lhs += ay * f.finite_diff(b, k, DiffDirection::forward, y);
        rhs += by * f.finite_diff(a, k, DiffDirection::backward, y);
      }
      if (k % 2 == 1) rhs = -rhs;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    // nabla f(y) = Delta f(y - 1) and the second-order backward expansion
    for (std::int64_t y = 0; y <= L + 2; ++y) {
      auto at = [&](std::int64_t i) { return (i >= 0 && i < L) ? a[static_cast<std::size_t>(i)] : 0.0; };
      worst = std::max(worst, std::abs(f.finite_diff(a, 1, DiffDirection::backward, y) -
                                       f.finite_diff(a, 1, DiffDirection::forward, y - 1)));
      worst = std::max(worst, std::abs(f.finite_diff(a, 2, DiffDirection::backward, y) -
                                       (at(y) - 2.0 * at(y - 1) + at(y - 2))));
    }
  }
  return make("summation_by_parts", worst, 1e-10, instances);
}

CheckResult check_generating_function(int instances, std::uint64_t seed, const Formulas& f) {
  Rng rng = make_stream(seed, {0x676674ULL});
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const DiscretePrior g = random_prior(rng, 6, 20.0);
    const double z = (t == 0) ? 1.0 : (t == 1 ? 0.0 : uniform_open(rng));
    detail::KahanSum phi;
    for (std::size_t i = 0; i < g.size(); ++i) phi.add(g.weights()[i] * std::exp((z - 1.0) * g.atoms()[i]));
    const auto pair = f.generating_function(g, z);
    worst = std::max({worst, std::abs(pair.lhs - phi.value()), std::abs(pair.rhs - phi.value())});
  }
  return make("generating_function", worst, 1e-10, instances);
}

CheckResult check_charlier_orthonormality(const Formulas& f) {
  const double thetas[] = {0.5, 1.0, 5.0, 20.0};
  double worst = 0.0;
  std::int64_t cases = 0;
  for (double theta : thetas) {
    const auto y_hi = static_cast<std::int64_t>(theta + 30.0 * std::sqrt(theta) + 60.0);
    for (int k = 0; k <= 8; ++k) {
      for (int l = k; l <= 8; ++l) {
        detail::KahanSum s;
        for (std::int64_t y = 0; y <= y_hi; ++y)
          s.add(f.charlier(k, y, theta) * f.charlier(l, y, theta) * std::exp(lpois(y, theta)));
        worst = std::max(worst, std::abs(s.value() - (k == l ? 1.0 : 0.0)));
        ++cases;
      }
    }
  }
  // p_1(y; theta) = (theta - y) / sqrt(theta)
  for (double theta : thetas)
    for (std::int64_t y = 0; y <= 10; ++y)
      worst = std::max(worst, std::abs(f.charlier(1, y, theta) - (theta - static_cast<double>(y)) / std::sqrt(theta)));
  return make("charlier_orthonormality", worst, 1e-8, cases);
}

CheckResult check_tail_bound(const Formulas& f) {
  const double thetas[] = {0.5, 1.0, 5.0, 20.0, 100.0};
  const double ts[] = {0.5, 1.0, 2.0, 5.0, 10.0, 30.0};
  double worst = 0.0;
  std::int64_t cases = 0;
  for (double theta : thetas) {
    double prev = std::numeric_limits<double>::infinity();
    for (double t : ts) {
      double upper = 0.0, lower = 0.0;
      const auto y_hi = static_cast<std::int64_t>(theta + t + 40.0 * std::sqrt(theta + t) + 100.0);
      for (std::int64_t y = 0; y <= y_hi; ++y) {
        const double yd = static_cast<double>(y);
        const double p = std::exp(lpois(y, theta));
        if (yd >= theta + t) upper += p;
        if (yd <= theta - t) lower += p;
      }
      const double b = f.tail_bound(theta, t);
      worst = std::max({worst, upper - b * (1.0 + 1e-12), lower - b * (1.0 + 1e-12)});
      if (b > prev) worst = std::max(worst, b - prev);
      prev = b;
      ++cases;
    }
  }
  worst = std::max(worst, rel_err(f.tail_bound(1.0, 10.0), std::exp(-100.0 / 22.0)) - 1e-12);
  return make("poisson_tail_bound", std::max(0.0, worst), 0.0, cases);
}

CheckResult check_two_point_closed_forms(const Formulas& f) {
  double worst = 0.0;
  std::int64_t cases = 0;
  for (double u : {2.0, 5.0, 10.0}) {
    for (double m1 : {0.5, 1.0, 3.0}) {
      const DiscretePrior g({0.0, u * m1}, {1.0 - 1.0 / u, 1.0 / u});
      const MixturePmf pmf = pmf_table(g, 1e-14);
      worst = std::max(worst, rel_err(bayes_rule(pmf, 0), f.two_point_bayes_zero(u, m1)));
      worst = std::max(worst, rel_err(bayes_rule(pmf, 3), u * m1));
      worst = std::max(worst, rel_err(mmse_by_summation(g, 1e-14), f.two_point_mmse(u, m1)));
      ++cases;
    }
  }
  return make("two_point_closed_forms", worst, 1e-10, cases);
}

CheckResult check_mixture_invariants(int instances, std::uint64_t seed) {
  Rng rng = make_stream(seed, {0x6d6978ULL});
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const DiscretePrior g = random_prior(rng, 6, 40.0);
    const MixturePmf pmf = pmf_table(g, 1e-12);
    detail::KahanSum s;
    for (double v : pmf.values) s.add(v);
    worst = std::max(worst, std::abs(s.value() + pmf.tail_mass - 1.0) / 1e-10);
    double prev = -1.0;
    for (std::int64_t y = 0; y + 1 <= pmf.y_max(); ++y) {
      if (pmf.values[static_cast<std::size_t>(y)] <= 0.0) continue;
      const double b = bayes_rule(pmf, y);
      if (b < prev * (1.0 - 1e-12)) worst = std::max(worst, 1.0 + (prev - b));
      prev = b;
    }
    const double risk = mmse_by_summation(g);
    if (risk > g.mean() * (1.0 + 1e-12) + 1e-15) worst = std::max(worst, 1.0 + risk - g.mean());
    const double lambda = g.atoms().front() + 0.5;
    const MixturePmf point = pmf_table(DiscretePrior::point_mass(lambda), 1e-12);
    for (std::int64_t y = 0; y < 5 && y + 1 <= point.y_max(); ++y)
      worst = std::max(worst, rel_err(bayes_rule(point, y), lambda) / 1e-12);
  }
  return make("mixture_invariants", worst, 1.0, instances,
              "normalization, monotone Bayes rule, mmse <= m1, point-mass rule");
}

namespace {

// A_k^2 for k <= 3 from the pmf and the plain binomial expansion, against f.ak.
double ak_direct_mismatch(const Formulas& f, const DiscretePrior& g1, const DiscretePrior& g2,
                          double rho) {
  constexpr int kMax = 3;
  auto pmf = [](const DiscretePrior& g, std::int64_t y) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < g.size(); ++i)
      s += g.weights()[i] * std::exp(static_cast<long double>(lpois(y, g.atoms()[i])));
    return s;
  };
  const std::int64_t hi =
      static_cast<std::int64_t>(std::max(g1.max_atom(), g2.max_atom()) * 3.0) + 200;
  std::vector<long double> f1(static_cast<std::size_t>(hi + kMax + 1));
  std::vector<long double> f2(f1.size());
  for (std::size_t y = 0; y < f1.size(); ++y) {
    f1[y] = pmf(g1, static_cast<std::int64_t>(y));
    f2[y] = pmf(g2, static_cast<std::int64_t>(y));
  }
  const auto seq = f.ak(g1, g2, rho, kMax);
  double worst = 0.0;
  for (int k = 0; k <= kMax; ++k) {
    long double sum = 0.0L;
    for (std::int64_t y = 0; y <= hi; ++y) {
      long double d = 0.0L, c = 1.0L;
      for (int j = 0; j <= k; ++j) {
        const auto i = static_cast<std::size_t>(y + j);
        d += ((k - j) % 2 ? -c : c) * (f1[i] - f2[i]);
        c = c * (k - j) / (j + 1);
      }
      const auto yi = static_cast<std::size_t>(y);
      const long double w = 1.0L / (std::max<long double>(f1[yi], rho) +
                                    std::max<long double>(f2[yi], rho));
      sum += std::pow(static_cast<long double>(y + 1), k) * d * d * w;
    }
    const auto it = std::find_if(seq.begin(), seq.end(), [k](const auto& a) { return a.k == k; });
    if (it == seq.end()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, rel_err(it->value, static_cast<double>(sum)));
  }
  return worst;
}

}  // namespace

CheckResult check_ak_bound(int pairs, std::uint64_t seed, const Formulas& f) {
  Rng rng = make_stream(seed, {0x616b62ULL});
  std::int64_t violations = 0, cases = 0;
  double worst_ratio = 0.0, worst_direct = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const DiscretePrior g1 = random_prior(rng, 5, 30.0);
    const DiscretePrior g2 = random_prior(rng, 5, 30.0);
    for (double rho : {1e-4, 1e-6}) {
      const auto seq = f.ak(g1, g2, rho, 10);
      for (const auto& a : seq) {
        const double bound = 4.0 * std::pow(static_cast<double>(a.k), a.k) / rho;
        worst_ratio = std::max(worst_ratio, a.value / bound);
        if (!(a.value <= bound) || a.value < 0.0) ++violations;
        ++cases;
      }
      if (t == 0) {
        for (const auto& a : f.ak(g1, g1, rho, 10))
          if (a.value != 0.0) ++violations;
      }
      if (t < 5) {
        const double mismatch = ak_direct_mismatch(f, g1, g2, rho);
        worst_direct = std::max(worst_direct, mismatch);
        if (!(mismatch <= 1e-9)) ++violations;
      }
    }
  }
  const double mismatch = ak_direct_mismatch(f, DiscretePrior::point_mass(2.0),
                                             DiscretePrior::point_mass(3.0), 1e-4);
  worst_direct = std::max(worst_direct, mismatch);
  if (!(mismatch <= 1e-9)) ++violations;
  return make("ak_pointwise_bound", static_cast<double>(violations), 0.0, cases,
              describe("max A_k^2 / bound = %.3g, direct-sum mismatch %.3g", worst_ratio,
                       worst_direct));
}

CheckResult check_diff_energy_bounds(int instances, std::uint64_t seed, const Formulas& f) {
  Rng rng = make_stream(seed, {0x656e67ULL});
  std::int64_t violations = 0, cases = 0;
  double worst_route = 0.0;
  for (int t = 0; t < instances; ++t) {
    const DiscretePrior g = random_prior(rng, 5, 30.0);
    double fact = 1.0;
    for (int k = 0; k <= 10; ++k) {
      if (k > 0) fact *= k;
      const double fwd = f.forward_energy(g, k);
      const double bwd = backward_diff_energy(g, k);
      if (k % 2 == 0 && !(fwd <= std::pow(2.0, 3 * k) * fact)) ++violations;
      if (!(bwd <= 2.0 * fact)) ++violations;
      worst_route = std::max(worst_route, std::abs(fwd - bwd) / std::max(bwd, 1e-300));
      ++cases;
    }
  }
  if (worst_route > 1e-6) ++violations;
  return make("diff_energy_bounds", static_cast<double>(violations), 0.0, cases,
              describe("max relative forward/backward mismatch %.3g", worst_route));
}

CheckResult check_ak_recursion(int pairs, std::uint64_t seed, const Formulas& f) {
  Rng rng = make_stream(seed, {0x616b72ULL});
  double worst = 0.0;
  std::int64_t cases = 0;
  for (int t = 0; t < pairs; ++t) {
    const DiscretePrior g1 = random_prior(rng, 5, 30.0);
    const DiscretePrior g2 = random_prior(rng, 5, 30.0);
    for (double rho : {1e-4, 1e-6}) {
      const auto seq = f.ak(g1, g2, rho, 11);
      const auto ratios = ak_recursion_ratios(seq);
      for (std::size_t i = 0; i < ratios.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        worst = std::max(worst, ratios[i] / (100.0 * std::log(1.0 / rho) + k));
        ++cases;
      }
    }
  }
  return make("ak_recursion_diagnostic", worst, 1.0, cases);
}

CheckResult check_npmle_certificates() {
  std::vector<CountHistogram> data;
  data.push_back(CountHistogram::from_counts({{3, 50}}));
  {
    Rng rng = make_stream(7, {0x6e706dULL});
    std::vector<std::int64_t> ys;
    for (int i = 0; i < 500; ++i) ys.push_back(sample_poisson(rng, i % 3 == 0 ? 10.0 : 2.0));
    data.push_back(CountHistogram::from_observations(ys));
  }
  {
    Rng rng = make_stream(8, {0x6e706dULL});
    std::vector<std::int64_t> ys;
    for (int i = 0; i < 2000; ++i) ys.push_back(sample_poisson(rng, 5.0));
    data.push_back(CountHistogram::from_observations(ys));
  }
  data.push_back(CountHistogram::from_counts({{0, 40}, {1, 22}, {2, 9}, {3, 5}, {5, 2}, {9, 1}, {17, 1}}));
  double worst = 0.0;
  std::string detail;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const NpmleFit fit = fit_npmle(data[i], grid_spec(data[i], 4));
    const auto fine = grid_spec(data[i], 40);
    const double gap = std::max(fit.kkt_gap, kkt_gap_on(fit.prior, data[i], fine.points));
    worst = std::max(worst, fit.converged ? gap : std::numeric_limits<double>::infinity());
    if (i == 0) {
      const double loc = fit.prior.size() == 1 ? std::abs(fit.prior.atoms()[0] - 3.0) : 1.0;
      if (loc > 1e-6) worst = std::numeric_limits<double>::infinity();
    }
  }
  return make("npmle_kkt_certificates", worst, 1e-4, static_cast<std::int64_t>(data.size()));
}

bool VerifyReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport run_verify(const VerifyOptions& o, const Formulas& f) {
  VerifyReport r;
  r.checks.push_back(check_divergences(f));
  r.checks.push_back(check_binomial_identity(o.binomial_n_max, f));
  r.checks.push_back(check_binomial_second_moment(o.binomial_n_max, f));
  r.checks.push_back(check_summation_by_parts(o.random_instances, o.seed, f));
  r.checks.push_back(check_generating_function(o.random_instances, o.seed, f));
  r.checks.push_back(check_charlier_orthonormality(f));
  r.checks.push_back(check_tail_bound(f));
  r.checks.push_back(check_two_point_closed_forms(f));
  r.checks.push_back(check_mixture_invariants(o.random_instances / 4, o.seed));
  r.checks.push_back(check_ak_bound(o.ak_pairs, o.seed, f));
  r.checks.push_back(check_diff_energy_bounds(o.ak_pairs / 5, o.seed, f));
  r.checks.push_back(check_ak_recursion(o.ak_pairs / 5, o.seed, f));
  if (o.include_npmle) r.checks.push_back(check_npmle_certificates());
  return r;
}

}  // namespace ebpois
