#include "ebpois/npmle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "detail.hpp"
#include "ebpois/error.hpp"
#include "ebpois/mixture.hpp"

namespace ebpois {

// ---------------------------------------------------------------------------
// CountHistogram

CountHistogram CountHistogram::from_observations(std::span<const std::int64_t> ys) {
  std::map<std::int64_t, std::int64_t> m;
  for (std::int64_t y : ys) {
    if (y < 0) throw InvalidInput("CountHistogram: observations must be >= 0");
    ++m[y];
  }
  return from_counts(m);
}

CountHistogram CountHistogram::from_counts(
    const std::map<std::int64_t, std::int64_t>& counts) {
  CountHistogram h;
  for (const auto& [y, c] : counts) {
    if (y < 0 || c < 0)
      throw InvalidInput("CountHistogram: keys and counts must be >= 0");
    if (c == 0) continue;
    h.values_.push_back(y);
    h.counts_.push_back(c);
    h.n_ += c;
  }
  return h;
}

std::int64_t CountHistogram::count(std::int64_t y) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), y);
  if (it == values_.end() || *it != y) return 0;
  return counts_[static_cast<std::size_t>(it - values_.begin())];
}

void CountHistogram::add(std::int64_t y, std::int64_t times) {
  if (y < 0 || times < 0) throw InvalidInput("CountHistogram::add: negative input");
  if (times == 0) return;
  const auto it = std::lower_bound(values_.begin(), values_.end(), y);
  const auto idx = static_cast<std::size_t>(it - values_.begin());
  if (it != values_.end() && *it == y) {
    counts_[idx] += times;
  } else {
    values_.insert(it, y);
    counts_.insert(counts_.begin() + static_cast<std::ptrdiff_t>(idx), times);
  }
  n_ += times;
}

void CountHistogram::remove_one(std::int64_t y) {
  const auto it = std::lower_bound(values_.begin(), values_.end(), y);
  if (it == values_.end() || *it != y)
    throw InvalidInput("CountHistogram::remove_one: value not present");
  const auto idx = static_cast<std::size_t>(it - values_.begin());
  if (--counts_[idx] == 0) {
    values_.erase(it);
    counts_.erase(counts_.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  --n_;
}

CountHistogram CountHistogram::without_one(std::int64_t y) const {
  CountHistogram h = *this;
  h.remove_one(y);
  return h;
}

std::map<std::int64_t, std::int64_t> CountHistogram::as_map() const {
  std::map<std::int64_t, std::int64_t> m;
  for (std::size_t i = 0; i < values_.size(); ++i) m[values_[i]] = counts_[i];
  return m;
}

// ---------------------------------------------------------------------------
// Grid

GridSpec grid_spec(const CountHistogram& data, int density) {
  if (density < 1) throw InvalidInput("grid_spec: density must be >= 1");
  if (data.empty()) throw InvalidInput("grid_spec: empty data");
  const double lo = std::max(1e-3, 0.5 * static_cast<double>(data.y_min()));
  const double hi = std::max(lo, 1.5 * static_cast<double>(data.y_max()));
  GridSpec grid;
  if (data.count(0) > 0) grid.points.push_back(0.0);
  const double s_lo = std::sqrt(lo);
  const double s_hi = std::sqrt(hi);
  const auto steps = static_cast<std::int64_t>(
      std::ceil((s_hi - s_lo) * static_cast<double>(density)));
  for (std::int64_t i = 0; i <= steps; ++i) {
    const double s = (steps == 0)
                         ? s_lo
                         : s_lo + (s_hi - s_lo) * static_cast<double>(i) /
                                      static_cast<double>(steps);
    grid.points.push_back(s * s);
  }
  std::sort(grid.points.begin(), grid.points.end());
  grid.points.erase(std::unique(grid.points.begin(), grid.points.end()),
                    grid.points.end());
  return grid;
}

// ---------------------------------------------------------------------------
// Likelihood and gradient function

double log_likelihood(const DiscretePrior& prior, const CountHistogram& data) {
  detail::KahanSum s;
  const auto ys = data.values();
  const auto ns = data.counts();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double lf = log_mixture_pmf(prior, ys[i]);
    if (lf == detail::kNegInf) return detail::kNegInf;
    s.add(static_cast<double>(ns[i]) * lf);
  }
  return s.value();
}

std::vector<double> gradient_function(const DiscretePrior& prior,
                                      const CountHistogram& data,
                                      std::span<const double> thetas) {
  const auto ys = data.values();
  const auto ns = data.counts();
  std::vector<double> logf(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) logf[i] = log_mixture_pmf(prior, ys[i]);
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    detail::KahanSum s;
    for (std::size_t i = 0; i < ys.size(); ++i)
      s.add(static_cast<double>(ns[i]) *
            std::exp(log_poisson_pmf(ys[i], theta) - logf[i]));
    out.push_back(s.value());
  }
  return out;
}

double kkt_gap_on(const DiscretePrior& prior, const CountHistogram& data,
                  std::span<const double> thetas) {
  const auto d = gradient_function(prior, data, thetas);
  const double n = static_cast<double>(data.n());
  double gap = 0.0;
  for (double v : d) gap = std::max(gap, v / n - 1.0);
  return gap;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

/// Lawson-Hanson nonnegative least squares: min ||A x - b|| s.t. x >= 0.
/// Columns enter while their gradient exceeds tol.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  const Eigen::Index m = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  std::vector<bool> passive(static_cast<std::size_t>(m), false);

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
      Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    for (std::size_t c = 0; c < idx.size(); ++c)
      z(idx[c]) = zp(static_cast<Eigen::Index>(c));
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(m) + 10; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < 3 * static_cast<int>(m) + 10; ++inner) {
      const Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

class Solver {
 public:
  Solver(const CountHistogram& data, const GridSpec& grid)
      : grid_(grid.points), n_total_(static_cast<double>(data.n())) {
    for (std::size_t i = 0; i < data.values().size(); ++i) {
      ys_.push_back(data.values()[i]);
      ns_.push_back(static_cast<double>(data.counts()[i]));
    }
    grid_logp_.reserve(grid_.size());
    for (double t : grid_) grid_logp_.push_back(log_column(t));
  }

  NpmleFit run(double tol, int max_iter) {
    initialize();
    NpmleFit fit;
    update_logf();
    fit.trace.push_back(ll_);

    for (int it = 1; it <= max_iter; ++it) {
      const Candidates cand = find_candidates();
      const double support_gap = compute_support_gap();
      fit.iterations = it - 1;
      if (cand.gap <= tol && support_gap <= tol) {
        fit.converged = true;
        fit.kkt_gap = cand.gap;
        fit.support_gap = support_gap;
        break;
      }
      for (double t : cand.points) insert_atom(t);
      update_logf();
      weight_step();
      prune();
      update_logf();
      fit.trace.push_back(ll_);
      fit.iterations = it;
      fit.kkt_gap = cand.gap;
      fit.support_gap = support_gap;
    }
    if (!fit.converged) {
      const Candidates cand = find_candidates();
      fit.kkt_gap = cand.gap;
      fit.support_gap = compute_support_gap();
      fit.converged = fit.kkt_gap <= tol && fit.support_gap <= tol;
    }
    fit.prior = DiscretePrior(theta_, weight_, 1e-12);
    fit.log_likelihood = ll_;
    return fit;
  }

 private:
  struct Candidates {
    std::vector<double> points;
    double gap = 0.0;
  };

  std::vector<double> log_column(double theta) const {
    std::vector<double> c(ys_.size());
    for (std::size_t i = 0; i < ys_.size(); ++i) c[i] = log_poisson_pmf(ys_[i], theta);
    return c;
  }

  void initialize() {
    // One atom at the grid point nearest each distinct value (at most 40,
    // spread by rank), weighted by the counts.
    const std::size_t k = ys_.size();
    const std::size_t take = std::min<std::size_t>(k, 40);
    std::vector<std::pair<double, double>> init;
    for (std::size_t r = 0; r < take; ++r) {
      const std::size_t i = (take == 1) ? 0 : r * (k - 1) / (take - 1);
      const double y = static_cast<double>(ys_[i]);
      const auto it = std::lower_bound(grid_.begin(), grid_.end(), y);
      double best = (it == grid_.end()) ? grid_.back() : *it;
      if (it != grid_.begin()) {
        const double prev = *(it - 1);
        if (it == grid_.end() || std::abs(prev - y) <= std::abs(best - y)) best = prev;
      }
      init.emplace_back(best, ns_[i]);
    }
    std::sort(init.begin(), init.end());
    for (const auto& [t, w] : init) {
      if (!theta_.empty() && theta_.back() == t) {
        weight_.back() += w;
      } else {
        theta_.push_back(t);
        weight_.push_back(w);
        logp_.push_back(log_column(t));
      }
    }
    const double total = std::accumulate(weight_.begin(), weight_.end(), 0.0);
    for (double& w : weight_) w /= total;
  }

  double ll_for(const std::vector<double>& w, std::vector<double>* logf_out) const {
    detail::KahanSum s;
    std::vector<double> terms(theta_.size());
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      for (std::size_t j = 0; j < theta_.size(); ++j)
        terms[j] = (w[j] > 0.0) ? std::log(w[j]) + logp_[j][i] : detail::kNegInf;
      const double lf = detail::log_sum_exp(terms);
      if (logf_out) (*logf_out)[i] = lf;
      s.add(ns_[i] * lf);
    }
    return s.value();
  }

  void update_logf() {
    logf_.assign(ys_.size(), 0.0);
    ll_ = ll_for(weight_, &logf_);
  }

  double gradient_at(const std::vector<double>& logp) const {
    detail::KahanSum s;
    for (std::size_t i = 0; i < ys_.size(); ++i) s.add(ns_[i] * std::exp(logp[i] - logf_[i]));
    return s.value();
  }

  double gradient_slope(double theta) const {
    // dD/dtheta = sum_y N(y) Poi(y; theta) (y / theta - 1) / f(y)
    detail::KahanSum s;
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      const double y = static_cast<double>(ys_[i]);
      s.add(ns_[i] * std::exp(log_poisson_pmf(ys_[i], theta) - logf_[i]) *
            (y / theta - 1.0));
    }
    return s.value();
  }

  double gradient_value(double theta) const { return gradient_at(log_column(theta)); }

  // Root of D' in [lo, hi] when D' changes sign from + to -.
  double refine(double lo, double hi, double fallback) const {
    if (lo <= 0.0) lo = std::min(fallback, hi) * 1e-6;
    if (!(lo < hi)) return fallback;
    const double slo = gradient_slope(lo);
    const double shi = gradient_slope(hi);
    if (!(slo > 0.0 && shi < 0.0)) return fallback;
    boost::uintmax_t max_it = 200;
    const auto root = boost::math::tools::toms748_solve(
        [this](double t) { return gradient_slope(t); }, lo, hi, slo, shi,
        boost::math::tools::eps_tolerance<double>(52), max_it);
    const double t = 0.5 * (root.first + root.second);
    return gradient_value(t) >= gradient_value(fallback) ? t : fallback;
  }

  Candidates find_candidates() const {
    // Local maxima of D located from the grid points and current atoms.
    std::vector<std::pair<double, double>> pts;
    pts.reserve(grid_.size() + theta_.size());
    for (std::size_t g = 0; g < grid_.size(); ++g) pts.emplace_back(grid_[g], gradient_at(grid_logp_[g]));
    for (std::size_t j = 0; j < theta_.size(); ++j) pts.emplace_back(theta_[j], gradient_at(logp_[j]));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              pts.end());
    // Midpoints next to each atom, where D is flat and maxima hide.
    {
      std::vector<double> mids;
      for (std::size_t g = 0; g + 1 < pts.size(); ++g) {
        const double a = pts[g].first, b = pts[g + 1].first;
        if (std::binary_search(theta_.begin(), theta_.end(), a) ||
            std::binary_search(theta_.begin(), theta_.end(), b))
          mids.push_back(0.5 * (a + b));
      }
      for (double t : mids) pts.emplace_back(t, gradient_value(t));
      std::sort(pts.begin(), pts.end());
    }
    Candidates out;
    double dmax = 0.0;
    const std::size_t m = pts.size();
    std::vector<double> slope(m, 0.0);
    for (std::size_t g = 0; g < m; ++g)
      if (pts[g].first > 0.0) slope[g] = gradient_slope(pts[g].first);
    // Interior maxima: D' changes sign from + to - between neighbours.
    std::vector<char> bracketed(m, 0);
    for (std::size_t g = 0; g + 1 < m; ++g) {
      if (!(pts[g].first > 0.0 && slope[g] > 0.0 && slope[g + 1] < 0.0)) continue;
      bracketed[g] = bracketed[g + 1] = 1;
      const double fallback = pts[g].second >= pts[g + 1].second ? pts[g].first : pts[g + 1].first;
      const double t = refine(pts[g].first, pts[g + 1].first, fallback);
      const double v = gradient_value(t);
      dmax = std::max(dmax, v);
      if (v > n_total_) out.points.push_back(t);
    }
    // Remaining discrete maxima (theta = 0 and the grid ends).
    for (std::size_t g = 0; g < m; ++g) {
      const double dg = pts[g].second;
      dmax = std::max(dmax, dg);
      if (bracketed[g]) continue;
      const bool left_ok = (g == 0) || dg >= pts[g - 1].second;
      const bool right_ok = (g + 1 == m) || dg >= pts[g + 1].second;
      if (left_ok && right_ok && dg > n_total_) out.points.push_back(pts[g].first);
    }
    out.gap = std::max(0.0, dmax / n_total_ - 1.0);
    return out;
  }

  double compute_support_gap() const {
    double gap = 0.0;
    for (std::size_t j = 0; j < theta_.size(); ++j)
      gap = std::max(gap, 1.0 - gradient_at(logp_[j]) / n_total_);
    return gap;
  }

  void insert_atom(double t) {
    const auto it = std::lower_bound(theta_.begin(), theta_.end(), t);
    const double scale = std::max(1.0, t) * 1e-12;
    if (it != theta_.end() && std::abs(*it - t) <= scale) return;
    if (it != theta_.begin() && std::abs(*(it - 1) - t) <= scale) return;
    const auto idx = it - theta_.begin();
    theta_.insert(it, t);
    weight_.insert(weight_.begin() + idx, 0.0);
    logp_.insert(logp_.begin() + idx, log_column(t));
  }

  void weight_step() {
    const auto rows = static_cast<Eigen::Index>(ys_.size());
    const auto cols = static_cast<Eigen::Index>(theta_.size());
    // Last row: heavily weighted sum(w) = 1.
    Eigen::MatrixXd S(rows + 1, cols);
    Eigen::VectorXd b(rows + 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double sn = std::sqrt(ns_[static_cast<std::size_t>(i)]);
      b(i) = 2.0 * sn;
      for (Eigen::Index j = 0; j < cols; ++j)
        S(i, j) = sn * std::exp(logp_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] -
                                logf_[static_cast<std::size_t>(i)]);
    }
    const double col = std::max(1.0, S.topRows(rows).colwise().norm().maxCoeff());
    const double big = 1e3 * col;
    S.row(rows).setConstant(big);
    b(rows) = big;
    const Eigen::VectorXd x = nnls(S, b, 1e-13 * col * b.head(rows).norm());
    const double sx = x.sum();

    std::vector<double> grad(theta_.size());
    for (std::size_t j = 0; j < theta_.size(); ++j) grad[j] = gradient_at(logp_[j]);

    if (sx > 0.0 && std::isfinite(sx)) {
      std::vector<double> dir(theta_.size());
      double slope = 0.0;
      for (std::size_t j = 0; j < theta_.size(); ++j) {
        dir[j] = x(static_cast<Eigen::Index>(j)) / sx - weight_[j];
        slope += grad[j] * dir[j];
      }
      if (slope > 0.0) {
        double alpha = 1.0;
        std::vector<double> trial(theta_.size());
        for (int k = 0; k < 50; ++k, alpha *= 0.5) {
          for (std::size_t j = 0; j < theta_.size(); ++j)
            trial[j] = std::max(0.0, weight_[j] + alpha * dir[j]);
          const double ll = ll_for(trial, nullptr);
          if (ll >= ll_ + alpha * slope / 3.0) {
            weight_ = trial;
            return;
          }
        }
      }
    }
    // Fixed-point (EM) update: always an ascent step.
    for (std::size_t j = 0; j < theta_.size(); ++j) weight_[j] *= grad[j] / n_total_;
    const double total = std::accumulate(weight_.begin(), weight_.end(), 0.0);
    for (double& w : weight_) w /= total;
  }

  void prune() {
    std::vector<double> t;
    std::vector<double> w;
    std::vector<std::vector<double>> lp;
    for (std::size_t j = 0; j < theta_.size(); ++j) {
      if (weight_[j] > 1e-12) {
        t.push_back(theta_[j]);
        w.push_back(weight_[j]);
        lp.push_back(std::move(logp_[j]));
      }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    theta_ = std::move(t);
    weight_ = std::move(w);
    logp_ = std::move(lp);
  }

  std::vector<double> grid_;
  std::vector<std::vector<double>> grid_logp_;
  std::vector<std::int64_t> ys_;
  std::vector<double> ns_;
  double n_total_;

  std::vector<double> theta_;
  std::vector<double> weight_;
  std::vector<std::vector<double>> logp_;
  std::vector<double> logf_;
  double ll_ = 0.0;
};

}  // namespace

NpmleFit fit_npmle(const CountHistogram& data, const GridSpec& grid, double tol,
                   int max_iter) {
  if (data.empty()) throw InvalidInput("fit_npmle: empty data");
  if (!(tol > 0.0)) throw InvalidInput("fit_npmle: tol must be > 0");
  if (max_iter < 1) throw InvalidInput("fit_npmle: max_iter must be >= 1");
  if (grid.points.empty()) throw InvalidInput("fit_npmle: empty grid");
  Solver solver(data, grid);
  return solver.run(tol, max_iter);
}

}  // namespace ebpois
