#include "ebpois/priors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/mixture.hpp"

namespace ebpois {

namespace {

constexpr double kTailCut = 1e-12;
constexpr std::int64_t kCertifyCap = 200000;

double expint_n(int n, double x) { return boost::math::expint(n, x); }

struct NameEntry {
  PriorFamily family;
  std::string_view name;
};

constexpr NameEntry kFamilies[] = {
    {PriorFamily::point_mass, "point_mass"},
    {PriorFamily::two_point, "two_point"},
    {PriorFamily::discrete, "discrete"},
    {PriorFamily::heavy_tail, "heavy_tail"},
    {PriorFamily::sqrt_cauchy, "sqrt_cauchy"},
    {PriorFamily::assouad, "assouad"},
    {PriorFamily::moment_class_extremal, "moment_class_extremal"},
};

PriorFamily parse_family(std::string_view name) {
  for (const auto& e : kFamilies)
    if (e.name == name) return e.family;
  throw InvalidInput("unknown prior family '" + std::string(name) + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidInput("prior spec: bad number for " + key + ": '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidInput("prior spec: bad integer for " + key + ": '" + v + "'");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Composite 8-point Gauss-Legendre in u = log(theta) on [u_lo, u_hi]; the
// panel width is min(h_max, kappa * exp(-u / 2)), i.e. about kappa Poisson
// standard deviations in theta.
void log_theta_quadrature(const std::function<double(double)>& density_u, double u_lo,
                          double u_hi, double kappa, double h_max,
                          std::vector<double>& atoms, std::vector<double>& weights) {
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  double u = u_lo;
  while (u < u_hi) {
    const double h = std::min(h_max, kappa * std::exp(-0.5 * u));
    const double end = std::min(u_hi, u + h);
    const double mid = 0.5 * (u + end);
    const double half = 0.5 * (end - u);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double s : {-1.0, 1.0}) {
        if (x[i] == 0.0 && s > 0.0) continue;
        const double node = mid + s * half * x[i];
        atoms.push_back(std::exp(node));
        weights.push_back(w[i] * half * density_u(node));
      }
    }
    u = end;
  }
}

struct ContinuousLayout {
  std::function<double(double)> density_u;
  double u_lo = 0.0;
  double u_hi = 0.0;
  double h_max = 0.25;
  /// Point masses carried alongside the continuous part.
  std::vector<std::pair<double, double>> lumps;
};

DiscretePrior discretize(const ContinuousLayout& layout, double kappa) {
  std::vector<double> atoms;
  std::vector<double> weights;
  for (const auto& [t, m] : layout.lumps) {
    atoms.push_back(t);
    weights.push_back(m);
  }
  log_theta_quadrature(layout.density_u, layout.u_lo, layout.u_hi, kappa, layout.h_max,
                       atoms, weights);
  return DiscretePrior::normalized(std::move(atoms), std::move(weights));
}

// Refines until the discretized mixture is within disc_tol of a 4x finer one.
void certify(const ContinuousLayout& layout, double disc_tol, ResolvedPrior& out) {
  double kappa = 2.0;
  for (int round = 0; round < 6; ++round, kappa *= 0.5) {
    DiscretePrior coarse = discretize(layout, kappa);
    const DiscretePrior fine = discretize(layout, kappa / 4.0);
    const std::int64_t y_cap =
        std::min(kCertifyCap, pmf_table(coarse, 1e-9).y_max());
    double err = 0.0;
    for (std::int64_t y = 0; y <= y_cap; ++y) {
      const double a = std::exp(log_mixture_pmf(coarse, y));
      const double b = std::exp(log_mixture_pmf(fine, y));
      err = std::max(err, std::abs(a - b));
    }
    out.discretization = std::move(coarse);
    out.disc_error = err;
    out.certified_y_cap = y_cap;
    if (err <= disc_tol) return;
  }
  throw Error("resolve: discretization did not reach disc_tol");
}

double heavy_tail_cutoff_u(double p) {
  // Continuous mass beyond e^U is c0 (1 - eps) E_2(p U) / U.
  const double scale = heavy_tail_normalizer(p) * (1.0 - heavy_tail_zero_mass(p));
  double u = 2.0;
  while (scale * expint_n(2, p * u) / u > kTailCut) u += 0.25;
  return u;
}

ContinuousLayout heavy_tail_layout(double p) {
  const double c0 = heavy_tail_normalizer(p);
  const double eps = heavy_tail_zero_mass(p);
  const double cont = (1.0 - eps) * c0;
  ContinuousLayout layout;
  layout.u_lo = 1.0;
  layout.u_hi = heavy_tail_cutoff_u(p);
  layout.density_u = [cont, p](double u) { return cont * std::exp(-p * u) / (u * u); };
  const double tail = cont * expint_n(2, p * layout.u_hi) / layout.u_hi;
  layout.lumps = {{0.0, eps}, {std::exp(layout.u_hi), tail}};
  return layout;
}

ContinuousLayout sqrt_cauchy_layout() {
  constexpr double pi = std::numbers::pi;
  const double theta_lo = 1e-6;
  ContinuousLayout layout;
  layout.u_lo = std::log(theta_lo);
  // (2 / pi) atan(1 / A^2) <= kTailCut
  const double a_hi = std::sqrt(1.0 / std::tan(0.5 * pi * kTailCut));
  layout.u_hi = std::log(a_hi);
  layout.density_u = [](double u) {
    const double e2 = std::exp(2.0 * u);
    return (4.0 / pi) * e2 / (1.0 + e2 * e2);
  };
  layout.lumps = {{0.0, (2.0 / pi) * std::atan(theta_lo * theta_lo)},
                  {a_hi, (2.0 / pi) * std::atan(1.0 / (a_hi * a_hi))}};
  return layout;
}

double sample_heavy_tail(double p, Rng& rng) {
  if (uniform_open(rng) < heavy_tail_zero_mass(p)) return 0.0;
  // Density in u = log a is proportional to e^(-p u) u^-2 on [1, inf):
  // propose 1 + Exp(p), accept with probability u^-2.
  std::exponential_distribution<double> expo(p);
  for (;;) {
    const double u = 1.0 + expo(rng);
    if (uniform_open(rng) < 1.0 / (u * u)) return std::exp(u);
  }
}

double sample_from(const DiscretePrior& prior, Rng& rng) {
  const auto w = prior.weights();
  double u = uniform_open(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return prior.atoms()[i];
    u -= w[i];
  }
  return prior.atoms().back();
}

}  // namespace

std::string_view family_name(PriorFamily family) {
  for (const auto& e : kFamilies)
    if (e.family == family) return e.name;
  return "unknown";
}

void PriorSpec::validate() const {
  switch (family) {
    case PriorFamily::point_mass:
      if (!(lambda >= 0.0 && std::isfinite(lambda)))
        throw InvalidInput("point_mass: lambda must be >= 0");
      break;
    case PriorFamily::two_point:
      if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("two_point: eps must lie in [0, 1]");
      if (!(a >= 0.0 && std::isfinite(a))) throw InvalidInput("two_point: a must be >= 0");
      break;
    case PriorFamily::discrete:
      if (!atoms) throw InvalidInput("discrete: atoms and weights are required");
      break;
    case PriorFamily::heavy_tail:
      if (!(p > 0.0 && p <= 20.0)) throw InvalidInput("heavy_tail: p must lie in (0, 20]");
      break;
    case PriorFamily::sqrt_cauchy:
      break;
    case PriorFamily::assouad:
      if (assouad.n < 3) throw InvalidInput("assouad: n must be >= 3");
      if (!(assouad.p > 0.0 && assouad.m_p > 0.0 && assouad.c_p > 0.0))
        throw InvalidInput("assouad: p, m_p and c_p must be > 0");
      break;
    case PriorFamily::moment_class_extremal:
      if (!(u >= 1.0)) throw InvalidInput("moment_class_extremal: u must be >= 1");
      if (!(p > 0.0 && m_p > 0.0))
        throw InvalidInput("moment_class_extremal: p and m_p must be > 0");
      break;
  }
}

PriorSpec parse_prior_spec(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss{std::string(text)};
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InvalidInput("prior spec: expected key=value, got '" + token + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  if (!kv.count("family")) throw InvalidInput("prior spec: missing family=");

  PriorSpec spec;
  spec.family = parse_family(kv.at("family"));
  std::vector<double> atoms;
  std::vector<double> weights;
  for (const auto& [k, v] : kv) {
    if (k == "family") continue;
    if (k == "lambda") spec.lambda = to_double(k, v);
    else if (k == "eps") spec.eps = to_double(k, v);
    else if (k == "a") spec.a = to_double(k, v);
    else if (k == "p") spec.p = spec.assouad.p = to_double(k, v);
    else if (k == "u") spec.u = to_double(k, v);
    else if (k == "m_p") spec.m_p = spec.assouad.m_p = to_double(k, v);
    else if (k == "atoms") atoms = to_list(k, v);
    else if (k == "weights") weights = to_list(k, v);
    else if (k == "n") spec.assouad.n = to_int(k, v);
    else if (k == "c_p") spec.assouad.c_p = to_double(k, v);
    else if (k == "i0") spec.assouad.i0 = to_int(k, v);
    else if (k == "N") spec.assouad.N = to_int(k, v);
    else if (k == "seed") spec.assouad.seed = static_cast<std::uint64_t>(to_int(k, v));
    else if (k == "tau") {
      for (char c : v) {
        if (c != '0' && c != '1') throw InvalidInput("prior spec: tau must be a 0/1 string");
        spec.assouad.tau.push_back(c - '0');
      }
    } else {
      throw InvalidInput("prior spec: unknown key '" + k + "'");
    }
  }
  if (spec.family == PriorFamily::discrete) {
    if (atoms.empty() || atoms.size() != weights.size())
      throw InvalidInput("prior spec: discrete needs atoms= and weights= of equal length");
    spec.atoms = DiscretePrior::normalized(atoms, weights);
  }
  spec.validate();
  return spec;
}

std::string to_string(const PriorSpec& spec) {
  std::string s = "family=" + std::string(family_name(spec.family));
  switch (spec.family) {
    case PriorFamily::point_mass:
      s += " lambda=" + fmt(spec.lambda);
      break;
    case PriorFamily::two_point:
      s += " eps=" + fmt(spec.eps) + " a=" + fmt(spec.a);
      break;
    case PriorFamily::discrete: {
      std::string a, w;
      for (std::size_t i = 0; i < spec.atoms->size(); ++i) {
        a += (i ? "," : "") + fmt(spec.atoms->atoms()[i]);
        w += (i ? "," : "") + fmt(spec.atoms->weights()[i]);
      }
      s += " atoms=" + a + " weights=" + w;
      break;
    }
    case PriorFamily::heavy_tail:
      s += " p=" + fmt(spec.p);
      break;
    case PriorFamily::sqrt_cauchy:
      break;
    case PriorFamily::assouad: {
      const auto& a = spec.assouad;
      s += " n=" + std::to_string(a.n) + " p=" + fmt(a.p) + " m_p=" + fmt(a.m_p) +
           " c_p=" + fmt(a.c_p) + " i0=" + std::to_string(a.i0) + " N=" + std::to_string(a.N) +
           " seed=" + std::to_string(a.seed);
      if (!a.tau.empty()) {
        s += " tau=";
        for (int t : a.tau) s += static_cast<char>('0' + t);
      }
      break;
    }
    case PriorFamily::moment_class_extremal:
      s += " p=" + fmt(spec.p) + " u=" + fmt(spec.u) + " m_p=" + fmt(spec.m_p);
      break;
  }
  return s;
}

double heavy_tail_normalizer(double p) {
  if (!(p > 0.0)) throw InvalidInput("heavy_tail: p must be > 0");
  return 1.0 / expint_n(2, p);
}

double heavy_tail_density(double p, double a) {
  if (a < std::numbers::e) return 0.0;
  const double la = std::log(a);
  return heavy_tail_normalizer(p) * std::pow(a, -(p + 1.0)) / (la * la);
}

double heavy_tail_zero_mass(double p) { return 1.0 - 1.0 / heavy_tail_normalizer(p); }

double ResolvedPrior::sample(Rng& rng) const {
  switch (spec.family) {
    case PriorFamily::heavy_tail:
      return sample_heavy_tail(spec.p, rng);
    case PriorFamily::sqrt_cauchy: {
      // |C| = tan(pi U / 2)
      const double c = std::tan(0.5 * std::numbers::pi * uniform_open(rng));
      return std::sqrt(c);
    }
    default:
      return sample_from(discretization, rng);
  }
}

ResolvedPrior resolve(const PriorSpec& spec, double p, double disc_tol,
                      std::uint64_t /*seed*/) {
  spec.validate();
  if (!(disc_tol > 0.0 && disc_tol <= 1e-2))
    throw InvalidInput("resolve: disc_tol must lie in (0, 1e-2]");
  if (!(p >= 0.0)) throw InvalidInput("resolve: p must be >= 0");

  ResolvedPrior out;
  out.spec = spec;
  out.p = p;
  switch (spec.family) {
    case PriorFamily::point_mass:
      out.discretization = DiscretePrior::point_mass(spec.lambda);
      break;
    case PriorFamily::two_point:
      out.discretization = DiscretePrior::normalized({0.0, spec.a}, {1.0 - spec.eps, spec.eps});
      break;
    case PriorFamily::discrete:
      out.discretization = *spec.atoms;
      break;
    case PriorFamily::assouad:
      out.discretization = assouad_prior(spec.assouad);
      break;
    case PriorFamily::moment_class_extremal:
      out.discretization = DiscretePrior::normalized(
          {0.0, std::pow(spec.u * spec.m_p, 1.0 / spec.p)}, {1.0 - 1.0 / spec.u, 1.0 / spec.u});
      break;
    case PriorFamily::heavy_tail: {
      out.max_moment = spec.p;
      out.max_moment_inclusive = true;
      if (p > spec.p)
        throw MomentInfinite("heavy_tail(p=" + fmt(spec.p) + "): m_" + fmt(p) + " is infinite");
      certify(heavy_tail_layout(spec.p), disc_tol, out);
      // m_q = c0 (1 - eps) E_2(p - q) for 0 < q <= p.
      out.p_moment = (p == 0.0) ? 1.0 : expint_n(2, spec.p - p);
      return out;
    }
    case PriorFamily::sqrt_cauchy: {
      out.max_moment = 2.0;
      out.max_moment_inclusive = false;
      if (p >= 2.0)
        throw MomentInfinite("sqrt_cauchy: m_p is finite only for p < 2");
      certify(sqrt_cauchy_layout(), disc_tol, out);
      // E |C|^s = 1 / cos(pi s / 2) with s = p / 2.
      out.p_moment = 1.0 / std::cos(0.25 * std::numbers::pi * p);
      return out;
    }
  }
  out.p_moment = out.discretization.moment(p);
  return out;
}

AssouadRange assouad_range(const AssouadParams& params) {
  const double nd = static_cast<double>(params.n);
  const double ln = std::log(nd);
  const double e = 1.0 / (2.0 * params.p + 1.0);
  const double top = params.c_p * std::pow(nd, e) * std::pow(params.m_p, e) / ln;
  AssouadRange r;
  r.N = params.N >= 0 ? params.N : static_cast<std::int64_t>(std::floor(top)) - 1;
  r.i0 = params.i0 >= 0 ? params.i0
                        : std::max<std::int64_t>(
                              1, static_cast<std::int64_t>(std::floor(top / 3.0)));
  if (r.i0 < 1 || r.N < r.i0)
    throw UnsupportedRegime("assouad: empty index range (i0=" + std::to_string(r.i0) +
                            ", N=" + std::to_string(r.N) + "); pass i0= and N= explicitly");
  return r;
}

DiscretePrior assouad_prior(const AssouadParams& params) {
  if (params.n < 3) throw InvalidInput("assouad: n must be >= 3");
  const AssouadRange r = assouad_range(params);
  const auto count = static_cast<std::size_t>(r.N - r.i0 + 1);
  std::vector<int> tau = params.tau;
  if (tau.empty()) {
    Rng rng = make_stream(params.seed, {0x746175ULL});
    for (std::size_t i = 0; i < count; ++i) tau.push_back(static_cast<int>(rng() & 1U));
  }
  if (tau.size() != count)
    throw InvalidInput("assouad: tau must have N - i0 + 1 entries");

  const double nd = static_cast<double>(params.n);
  const double l2 = std::log(nd) * std::log(nd);
  const double l10 = std::pow(std::log(nd), 10.0);
  std::vector<double> atoms{0.0};
  std::vector<double> weights{0.0};
  double wbar = 0.0;
  for (std::int64_t i = r.i0; i <= r.N; ++i) {
    const double id = static_cast<double>(i);
    const double a = l2 * (id * id + (id + 1) * (id + 1)) / 2.0;
    const double w = params.m_p * std::pow((id + 1) * (id + 1) * l2, -(params.p + 0.5));
    const double delta = std::sqrt(a / (nd * w * l10));
    atoms.push_back(tau[static_cast<std::size_t>(i - r.i0)] ? a + delta : a);
    weights.push_back(w);
    wbar += w;
  }
  if (wbar > 1.0)
    throw UnsupportedRegime("assouad: weights exceed 1, w_0 would be negative");
  weights[0] = 1.0 - wbar;
  if (weights[0] == 0.0) {
    atoms.erase(atoms.begin());
    weights.erase(weights.begin());
  }
  return DiscretePrior::normalized(std::move(atoms), std::move(weights), 0.0);
}

double inverse_square_mixture_pmf(std::int64_t y) {
  if (y < 0) return 0.0;
  if (y == 0) return expint_n(2, 1.0);
  if (y == 1) return expint_n(1, 1.0);
  // int_1^inf a^(y-2) e^-a da / y! = Gamma(y - 1, 1) / y!
  const double yd = static_cast<double>(y);
  return boost::math::gamma_q(yd - 1.0, 1.0) / (yd * (yd - 1.0));
}

DivergentSeries divergent_mmse_diagnostic(double p, std::int64_t y_cap) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("divergent_mmse_diagnostic: p must lie in (0, 1)");
  if (y_cap < 1) throw InvalidInput("divergent_mmse_diagnostic: y_cap must be >= 1");
  std::vector<double> f(static_cast<std::size_t>(y_cap) + 3);
  for (std::size_t y = 0; y < f.size(); ++y)
    f[y] = inverse_square_mixture_pmf(static_cast<std::int64_t>(y));

  DivergentSeries out;
  out.min_summand = std::numeric_limits<double>::infinity();
  detail::KahanSum s;
  std::int64_t next = 1;
  for (std::int64_t y = 0; y <= y_cap; ++y) {
    const auto i = static_cast<std::size_t>(y);
    const double yd = static_cast<double>(y);
    const double term =
        (yd + 1.0) / f[i] * ((yd + 2.0) * f[i + 2] * f[i] - (yd + 1.0) * f[i + 1] * f[i + 1]);
    out.min_summand = std::min(out.min_summand, term);
    s.add(term);
    if (y == next) {
      out.y.push_back(y);
      out.partial_sum.push_back(s.value());
      next *= 2;
    }
  }
  return out;
}

}  // namespace ebpois
