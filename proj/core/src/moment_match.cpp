#include "ebpois/moment_match.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/mixture.hpp"

namespace ebpois {

namespace {

struct Jacobi {
  std::vector<double> alpha;
  std::vector<double> beta;  // off-diagonal, size alpha.size() - 1
};

QuadratureRule gauss_from_jacobi(const Jacobi& j, double mass, double lo, double hi) {
  const auto k = static_cast<Eigen::Index>(j.alpha.size());
  Eigen::VectorXd diag(k);
  Eigen::VectorXd off(std::max<Eigen::Index>(k - 1, 0));
  for (Eigen::Index i = 0; i < k; ++i) diag(i) = j.alpha[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i + 1 < k; ++i) off(i) = j.beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  QuadratureRule rule;
  const double c = 0.5 * (lo + hi);
  const double s = 0.5 * (hi - lo);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double v = es.eigenvectors()(0, i);
    const double x = std::clamp(es.eigenvalues()(i), -1.0, 1.0);
    rule.atoms.push_back(c + s * x);
    rule.weights.push_back(mass * v * v);
  }
  return rule;
}

// Lanczos with full reorthogonalization on a discrete measure (x in [-1, 1],
// w summing to 1). Stops early when the measure has fewer support points.
Jacobi discrete_stieltjes(const std::vector<double>& x, const std::vector<double>& w,
                          int nodes) {
  const std::size_t m = x.size();
  std::vector<std::vector<double>> q;
  q.emplace_back(m, 1.0);
  Jacobi jac;
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    detail::KahanSum s;
    for (std::size_t i = 0; i < m; ++i) s.add(w[i] * a[i] * b[i]);
    return s.value();
  };
  for (int j = 0; j < nodes; ++j) {
    const auto& qj = q.back();
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = x[i] * qj[i];
    const double a = dot(qj, r);
    jac.alpha.push_back(a);
    if (j + 1 == nodes) break;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qi : q) {
        const double c = dot(qi, r);
        for (std::size_t i = 0; i < m; ++i) r[i] -= c * qi[i];
      }
    }
    const double b = std::sqrt(dot(r, r));
    if (!(b > 1e-12)) break;
    for (double& v : r) v /= b;
    jac.beta.push_back(b);
    q.push_back(std::move(r));
  }
  return jac;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

std::int64_t QuadraticPartition::locate(double theta) const {
  if (theta >= 2.0 * M) return -1;
  const auto it = std::upper_bound(lo.begin(), lo.end(), theta);
  return static_cast<std::int64_t>(it - lo.begin()) - 1;
}

QuadraticPartition quadratic_partition(double M, double eta, double C) {
  if (!(M > 0.0)) throw InvalidInput("quadratic_partition: M must be > 0");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("quadratic_partition: eta must lie in (0, 1)");
  if (!(C > 0.0)) throw InvalidInput("quadratic_partition: C must be > 0");
  QuadraticPartition part;
  part.C = C;
  part.M = M;
  part.eta_bar = std::log(1.0 / eta);
  const double unit = C * part.eta_bar;
  part.N = std::max<std::int64_t>(
      0, static_cast<std::int64_t>(std::ceil(std::sqrt(2.0 * M / unit) - 1.0)));
  for (std::int64_t i = 0; i <= part.N; ++i) {
    const double id = static_cast<double>(i);
    const double a = id * id * unit;
    if (a >= 2.0 * M) break;
    part.lo.push_back(a);
    part.hi.push_back(std::min((id + 1) * (id + 1) * unit, 2.0 * M));
  }
  part.N = static_cast<std::int64_t>(part.lo.size()) - 1;
  return part;
}

double sup_pmf_difference(const DiscretePrior& a, const DiscretePrior& b,
                          std::int64_t y_max) {
  auto naive = [](const DiscretePrior& g, std::int64_t y) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      s += g.weights()[i] * std::exp(log_poisson_pmf(y, g.atoms()[i]));
    return s;
  };
  double worst = 0.0;
  for (std::int64_t y = 0; y <= y_max; ++y)
    worst = std::max(worst, std::abs(naive(a, y) - naive(b, y)));
  return worst;
}

MatchReport local_moment_match(const DiscretePrior& source, double M, double eta,
                               double C, const MomentMatchConfig& config) {
  if (!(eta > 0.0 && eta <= 1e-2))
    throw InvalidInput("local_moment_match: eta must lie in (0, 1e-2]");
  if (config.degree_cap < 1) throw InvalidInput("local_moment_match: degree_cap must be >= 1");

  MatchReport report;
  report.M = M;
  report.eta = eta;
  report.partition = quadratic_partition(M, eta, C);
  const auto& part = report.partition;
  const double eb = part.eta_bar;
  report.budget = config.K * std::sqrt(M) * std::pow(eb, 1.5);
  if (M < std::pow(eb, 7.0))
    report.warnings.push_back("M below log(1/eta)^7: the atom budget is not guaranteed");

  const std::size_t n_int = part.lo.size();
  std::vector<std::vector<double>> xs(n_int);
  std::vector<std::vector<double>> ws(n_int);
  double above = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const std::int64_t k = part.locate(source.atoms()[i]);
    if (k < 0) {
      above += source.weights()[i];
    } else {
      xs[static_cast<std::size_t>(k)].push_back(source.atoms()[i]);
      ws[static_cast<std::size_t>(k)].push_back(source.weights()[i]);
    }
  }

  std::vector<double> atoms;
  std::vector<double> weights;
  const double case_split = std::pow(M, 1.0 / 6.0);
  for (std::size_t k = 0; k < n_int; ++k) {
    IntervalMatch im;
    im.lo = part.lo[k];
    im.hi = part.hi[k];
    im.source_atoms = static_cast<std::int64_t>(xs[k].size());
    detail::KahanSum mass;
    for (double w : ws[k]) mass.add(w);
    im.mass = mass.value();
    const double id = static_cast<double>(k);
    const double want = (id <= case_split) ? config.C1 * (id + 1) * (id + 1) * eb * eb
                                           : config.Cprime * 9.0 * C * eb;
    im.degree = static_cast<int>(std::min<double>(config.degree_cap, std::ceil(want)));
    im.degree = std::max(im.degree, 1);
    const int nodes = (im.degree + 2) / 2;

    if (xs[k].empty()) {
      report.intervals.push_back(im);
      continue;
    }
    if (static_cast<int>(xs[k].size()) <= nodes) {
      im.copied = true;
      im.atoms = im.source_atoms;
      atoms.insert(atoms.end(), xs[k].begin(), xs[k].end());
      weights.insert(weights.end(), ws[k].begin(), ws[k].end());
      report.intervals.push_back(im);
      continue;
    }

    const double c = 0.5 * (im.lo + im.hi);
    const double s = 0.5 * (im.hi - im.lo);
    std::vector<double> xm(xs[k].size());
    std::vector<double> wm(xs[k].size());
    for (std::size_t j = 0; j < xm.size(); ++j) {
      xm[j] = (xs[k][j] - c) / s;
      wm[j] = ws[k][j] / im.mass;
    }
    const Jacobi jac = discrete_stieltjes(xm, wm, nodes);
    if (static_cast<int>(jac.alpha.size()) < nodes) {
      im.reduced = true;
      report.warnings.push_back("interval " + std::to_string(k) +
                                ": moment sequence degenerate, matched fewer moments");
    }
    const QuadratureRule rule = gauss_from_jacobi(jac, im.mass, im.lo, im.hi);
    const int matched = std::min(im.degree, 2 * static_cast<int>(jac.alpha.size()) - 1);
    for (int d = 0; d <= matched; ++d) {
      detail::KahanSum a, b;
      for (std::size_t j = 0; j < xm.size(); ++j) a.add(wm[j] * std::pow(xm[j], d));
      for (std::size_t j = 0; j < rule.atoms.size(); ++j)
        b.add(rule.weights[j] / im.mass * std::pow((rule.atoms[j] - c) / s, d));
      im.moment_error = std::max(im.moment_error, std::abs(a.value() - b.value()));
    }
    im.atoms = static_cast<std::int64_t>(rule.atoms.size());
    atoms.insert(atoms.end(), rule.atoms.begin(), rule.atoms.end());
    weights.insert(weights.end(), rule.weights.begin(), rule.weights.end());
    report.intervals.push_back(im);
  }
  if (above > 0.0) {
    atoms.push_back(2.0 * M);
    weights.push_back(above);
  }
  report.approximant = DiscretePrior::normalized(std::move(atoms), std::move(weights), 0.0);
  report.atom_count = static_cast<std::int64_t>(report.approximant.size());

  const auto y_max = static_cast<std::int64_t>(std::floor(M));
  double worst = 0.0;
  for (std::int64_t y = 0; y <= y_max; ++y) {
    const double a = std::exp(log_mixture_pmf(source, y));
    const double b = std::exp(log_mixture_pmf(report.approximant, y));
    worst = std::max(worst, std::abs(a - b));
  }
  report.achieved_sup_error = worst;
  return report;
}

QuadratureRule quadrature_from_moments(std::span<const double> moments, double mass,
                                       double lo, double hi) {
  if (moments.empty()) throw InvalidInput("quadrature_from_moments: need L >= 1 moments");
  if (!(mass > 0.0)) throw InvalidInput("quadrature_from_moments: mass must be > 0");
  if (!(lo <= hi)) throw InvalidInput("quadrature_from_moments: lo must be <= hi");
  const int L = static_cast<int>(moments.size());
  if (lo == hi) return {{lo}, {mass}};

  // Normalized moments of the pushforward under x -> (x - c) / s.
  const double c = 0.5 * (lo + hi);
  const double s = 0.5 * (hi - lo);
  std::vector<double> raw(static_cast<std::size_t>(L) + 1);
  raw[0] = 1.0;
  for (int k = 1; k <= L; ++k) raw[static_cast<std::size_t>(k)] = moments[static_cast<std::size_t>(k - 1)] / mass;
  std::vector<double> m(raw.size());
  for (int k = 0; k <= L; ++k) {
    detail::KahanSum acc;
    for (int j = 0; j <= k; ++j)
      acc.add(binomial(k, j) * raw[static_cast<std::size_t>(j)] * std::pow(-c, k - j));
    m[static_cast<std::size_t>(k)] = acc.value() / std::pow(s, k);
  }

  const int n_nodes = (L + 2) / 2;
  const bool radau = (L % 2 == 0);
  // Gauss needs the Hankel matrix H_{ij} = m_{i+j} for i, j <= n_nodes - 1
  // plus the column n_nodes up to row n_nodes - 1; Radau (k = L/2 free
  // nodes) additionally needs r_{k,k}.
  const int k = radau ? L / 2 : n_nodes;
  const int size = radau ? k + 1 : k;
  Eigen::MatrixXd H(size, size + 1);
  H.setZero();
  for (int i = 0; i < size; ++i)
    for (int j = 0; j <= size; ++j) {
      const int idx = i + j;
      if (idx <= L) H(i, j) = m[static_cast<std::size_t>(idx)];
    }
  // Upper Cholesky factor R (size x (size + 1)), H = R^T R on the leading block.
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(size, size + 1);
  for (int i = 0; i < size; ++i) {
    double d = H(i, i);
    for (int p = 0; p < i; ++p) d -= R(p, i) * R(p, i);
    if (!(d > 1e-13 * std::max(1.0, std::abs(H(i, i)))))
      throw MomentDegeneracy("quadrature_from_moments: Hankel matrix is not positive definite "
                             "at order " + std::to_string(i));
    R(i, i) = std::sqrt(d);
    for (int j = i + 1; j <= size; ++j) {
      if (i + j > L) continue;
      double v = H(i, j);
      for (int p = 0; p < i; ++p) v -= R(p, i) * R(p, j);
      R(i, j) = v / R(i, i);
    }
  }

  Jacobi jac;
  const int free_nodes = radau ? k : n_nodes;
  for (int j = 0; j < free_nodes; ++j) {
    double a = R(j, j + 1) / R(j, j);
    if (j > 0) a -= R(j - 1, j) / R(j - 1, j - 1);
    jac.alpha.push_back(a);
    if (j + 1 < free_nodes) jac.beta.push_back(R(j + 1, j + 1) / R(j, j));
  }
  if (radau) {
    // Extend by one node fixed at x = -1: solve (J_k + I) delta = b_k^2 e_k.
    const double bk = R(k, k) / R(k - 1, k - 1);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      J(i, i) = jac.alpha[static_cast<std::size_t>(i)] + 1.0;
      if (i + 1 < k) {
        J(i, i + 1) = J(i + 1, i) = jac.beta[static_cast<std::size_t>(i)];
      }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    rhs(k - 1) = bk * bk;
    const Eigen::VectorXd delta = J.partialPivLu().solve(rhs);
    jac.beta.push_back(bk);
    jac.alpha.push_back(-1.0 + delta(k - 1));
  }
  return gauss_from_jacobi(jac, mass, lo, hi);
}

}  // namespace ebpois
