#include "ebpois/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "detail.hpp"
#include "ebpois/error.hpp"

#ifndef EBPOIS_VERSION_STRING
#define EBPOIS_VERSION_STRING "unknown"
#endif

namespace ebpois {

namespace {

constexpr double kQuantileTail = 1e-9;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    const std::string item = trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidInput(key + ": expected a number, got '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e15)
    throw InvalidInput(key + ": expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput(key + ": expected true/false, got '" + v + "'");
}

struct Evaluated {
  RegretResult regret;
  FittedRule rule;
};

Evaluated evaluate_rule(const Truth& truth, const CountHistogram& train,
                        const EstimatorConfig& method) {
  FittedRule rule = fit_rule(method, train, truth.y_cap, &truth.pmf);
  RegretResult r;
  detail::KahanSum s;
  for (std::int64_t y = 0; y <= truth.y_cap; ++y) {
    const double d = rule.table[static_cast<std::size_t>(y)] - truth.bayes[static_cast<std::size_t>(y)];
    s.add(truth.pmf(y) * d * d);
  }
  r.regret = s.value();
  r.tail_uncertainty = truth.identity_tail;
  r.capped = static_cast<std::int64_t>(rule.infinite_at.size());
  r.failed = rule.fit && !rule.fit->converged;
  r.y0 = method.y0;
  return {r, std::move(rule)};
}

// theta_hat(y) trained on hist (which already excludes the evaluated point).
double estimate_one(const Truth& truth, const CountHistogram& hist,
                    const EstimatorConfig& method, std::int64_t y, bool& failed) {
  const double yd = static_cast<double>(y);
  switch (method.kind) {
    case EstimatorKind::oracle:
      if (y + 1 > truth.pmf.y_max()) return yd;
      return bayes_rule(truth.pmf, y);
    case EstimatorKind::mle:
      return yd;
    case EstimatorKind::robbins_plain:
    case EstimatorKind::robbins_addone:
    case EstimatorKind::robbins_trunc: {
      if (y > method.y0) return yd;
      const RobbinsValue r = robbins(hist, y, method.kind != EstimatorKind::robbins_plain);
      return std::min(r.value, FittedRule::kInfiniteCap);
    }
    case EstimatorKind::npmle_eb: {
      if (y > method.y0) return yd;
      const NpmleFit fit =
          fit_npmle(hist, grid_spec(hist, method.grid_density), method.npmle_tol);
      if (!fit.converged) failed = true;
      return npmle_eb(fit.prior, y, method.y0, method.rho);
    }
  }
  return yd;
}

struct NRepResult {
  std::vector<ReportRow> rows;
};

}  // namespace

// ---------------------------------------------------------------------------
// Truth and sampling

Truth make_truth(ResolvedPrior prior) {
  Truth t;
  t.pmf = pmf_table(prior.discretization, 1e-11);
  detail::KahanSum cum;
  std::int64_t cap = -1;
  for (std::int64_t y = 0; y <= t.pmf.y_max(); ++y) {
    cum.add(t.pmf(y));
    if (cum.value() >= 1.0 - kQuantileTail) {
      cap = y;
      break;
    }
  }
  if (cap < 0 || cap + 1 > t.pmf.y_max()) {
    t.pmf = pmf_table(prior.discretization, 1e-11, std::max<std::int64_t>(cap, t.pmf.y_max()) + 2);
    if (cap < 0) cap = t.pmf.y_max() - 1;
  }
  t.y_cap = cap;
  detail::KahanSum head;
  for (std::int64_t y = 0; y <= cap; ++y) head.add(t.pmf(y));
  t.tail_beyond_cap = std::max(0.0, 1.0 - head.value());
  t.bayes.resize(static_cast<std::size_t>(cap) + 1);
  for (std::int64_t y = 0; y <= cap; ++y) {
    t.bayes[static_cast<std::size_t>(y)] =
        (t.pmf.log_values[static_cast<std::size_t>(y)] == detail::kNegInf) ? 0.0
                                                                            : bayes_rule(t.pmf, y);
  }
  detail::KahanSum tail;
  for (std::int64_t y = cap + 1; y + 1 <= t.pmf.y_max(); ++y) {
    if (t.pmf(y) <= 0.0) continue;
    const double d = static_cast<double>(y) - bayes_rule(t.pmf, y);
    tail.add(t.pmf(y) * d * d);
  }
  t.identity_tail = tail.value();
  detail::KahanSum risk;
  for (std::int64_t y = 0; y <= t.pmf.y_max(); ++y) {
    if (t.pmf(y) <= 0.0) continue;
    risk.add(t.pmf(y) * posterior_moments(prior.discretization, y).variance);
  }
  t.mmse = risk.value();
  t.prior = std::move(prior);
  return t;
}

Draws draw_pairs(const ResolvedPrior& prior, std::int64_t n, Rng& rng) {
  if (n < 0) throw InvalidInput("draw_pairs: n must be >= 0");
  Draws d;
  d.theta.reserve(static_cast<std::size_t>(n));
  d.y.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double theta = prior.sample(rng);
    d.theta.push_back(theta);
    d.y.push_back(sample_poisson(rng, theta));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Trials

DensityRiskResult density_risk_trial(const Truth& truth, std::int64_t n, std::uint64_t seed,
                                     const SolverConfig& solver) {
  if (n < 10) throw InvalidInput("density_risk_trial: n must be >= 10");
  Rng rng = make_stream(seed, {0x64656e73ULL});
  const Draws d = draw_pairs(truth.prior, n, rng);
  const CountHistogram hist = CountHistogram::from_observations(d.y);
  const NpmleFit fit =
      fit_npmle(hist, grid_spec(hist, solver.grid_density), solver.tol, solver.max_iter);
  DensityRiskResult r;
  r.converged = fit.converged;
  r.kkt_gap = fit.kkt_gap;
  r.atoms = static_cast<std::int64_t>(fit.prior.size());
  const MixturePmf fitted = pmf_table(fit.prior, 1e-11, truth.pmf.y_max());
  if (fitted.y_max() > truth.pmf.y_max()) {
    const MixturePmf longer = pmf_table(truth.prior.discretization, 1e-11, fitted.y_max());
    r.hellinger_sq = hellinger_sq(fitted, longer);
  } else {
    r.hellinger_sq = hellinger_sq(fitted, truth.pmf);
  }
  return r;
}

RegretResult individual_regret_on(const Truth& truth, const CountHistogram& train,
                                  const EstimatorConfig& method) {
  return evaluate_rule(truth, train, method).regret;
}

RegretResult individual_regret_trial(const Truth& truth, std::int64_t n,
                                     const EstimatorConfig& method, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("individual_regret_trial: n must be >= 2");
  Rng rng = make_stream(seed, {0x72656772ULL});
  const Draws d = draw_pairs(truth.prior, n - 1, rng);
  return individual_regret_on(truth, CountHistogram::from_observations(d.y), method);
}

namespace {

TotalRegretResult total_regret_on(const Truth& truth, const Draws& d,
                                  const EstimatorConfig& method, bool direct,
                                  const RegretResult* individual) {
  const auto n = static_cast<std::int64_t>(d.y.size());
  TotalRegretResult out;
  if (individual) {
    out.via_individual = static_cast<double>(n) * individual->regret;
    out.failed = individual->failed;
  } else {
    const CountHistogram train = CountHistogram::from_observations(
        std::span<const std::int64_t>(d.y.data(), static_cast<std::size_t>(n - 1)));
    const RegretResult r = individual_regret_on(truth, train, method);
    out.via_individual = static_cast<double>(n) * r.regret;
    out.failed = r.failed;
  }
  if (!direct) return out;

  const CountHistogram all = CountHistogram::from_observations(d.y);
  std::map<std::int64_t, double> loo;
  bool failed = false;
  for (std::int64_t v : all.values())
    loo[v] = estimate_one(truth, all.without_one(v), method, v, failed);
  detail::KahanSum s;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const double e = loo[d.y[i]] - d.theta[i];
    s.add(e * e);
  }
  out.direct = s.value() - static_cast<double>(n) * truth.mmse;
  out.failed = out.failed || failed;
  return out;
}

}  // namespace

TotalRegretResult total_regret_trial(const Truth& truth, std::int64_t n,
                                     const EstimatorConfig& method, std::uint64_t seed,
                                     bool direct) {
  if (n < 2) throw InvalidInput("total_regret_trial: n must be >= 2");
  Rng rng = make_stream(seed, {0x72656772ULL});
  const Draws d = draw_pairs(truth.prior, n, rng);
  return total_regret_on(truth, d, method, direct, nullptr);
}

InstabilityCensus robbins_instability_census(const CountHistogram& hist) {
  InstabilityCensus c;
  if (hist.empty()) return c;
  for (std::int64_t y = 0; y <= hist.y_max(); ++y) {
    const RobbinsValue r = robbins(hist, y, false);
    if (r.infinite) {
      ++c.infinite;
    } else if (!r.degenerate) {
      c.max_finite = std::max(c.max_finite, r.value);
      if (r.value > 100.0 * std::max<double>(static_cast<double>(y), 1.0)) ++c.huge;
    }
  }
  return c;
}

InstabilityCensus robbins_instability_probe(const ResolvedPrior& prior, std::int64_t n,
                                            std::uint64_t seed) {
  if (n < 1) throw InvalidInput("robbins_instability_probe: n must be >= 1");
  Rng rng = make_stream(seed, {0x70726f62ULL});
  const Draws d = draw_pairs(prior, n, rng);
  return robbins_instability_census(CountHistogram::from_observations(d.y));
}

// ---------------------------------------------------------------------------
// Plans

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::hellinger_sq:
      return "hellinger_sq";
    case Metric::individual_regret:
      return "individual_regret";
    case Metric::total_regret:
      return "total_regret";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : {Metric::hellinger_sq, Metric::individual_regret, Metric::total_regret})
    if (metric_name(m) == name) return m;
  throw InvalidInput("unknown metric '" + std::string(name) + "'");
}

std::string MethodSpec::label() const {
  std::string s(estimator_name(config.kind));
  if (!tune_y0 && config.y0 != kNoTruncation) s += ":y0=" + std::to_string(config.y0);
  if (config.kind == EstimatorKind::npmle_eb && !tune_rho) s += ":rho=" + fmt(config.rho);
  return s;
}

MethodSpec parse_method(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw InvalidInput("empty method");
  MethodSpec m;
  m.config.kind = parse_estimator_kind(parts[0]);
  const bool tunable = m.config.kind == EstimatorKind::npmle_eb ||
                       m.config.kind == EstimatorKind::robbins_trunc;
  m.tune_y0 = tunable;
  m.tune_rho = m.config.kind == EstimatorKind::npmle_eb;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw InvalidInput("method option must be key=value: " + parts[i]);
    const std::string k = parts[i].substr(0, eq);
    const std::string v = parts[i].substr(eq + 1);
    if (k == "y0") {
      m.config.y0 = (v == "inf") ? kNoTruncation : parse_int(k, v);
      m.tune_y0 = false;
    } else if (k == "rho") {
      if (m.config.kind != EstimatorKind::npmle_eb)
        throw InvalidInput("method option rho applies to npmle only");
      m.config.rho = parse_double(k, v);
      m.tune_rho = false;
    } else if (k == "npmle_tol") {
      if (m.config.kind != EstimatorKind::npmle_eb)
        throw InvalidInput("method option npmle_tol applies to npmle only");
      m.config.npmle_tol = parse_double(k, v);
    } else {
      throw InvalidInput("unknown method option '" + k + "'");
    }
  }
  return m;
}

EstimatorConfig resolve_method(const MethodSpec& method, std::int64_t n, double p, double m_p,
                               double c) {
  EstimatorConfig cfg = method.config;
  if (method.tune_y0 || method.tune_rho) {
    const TunedParameters t = tune_defaults(std::max<std::int64_t>(n, 2), p, m_p, c);
    if (method.tune_y0)
      cfg.y0 = cfg.kind == EstimatorKind::npmle_eb ? t.npmle_y0 : t.robbins_y0;
    if (method.tune_rho && cfg.kind == EstimatorKind::npmle_eb) cfg.rho = t.rho;
  }
  cfg.validate();
  return cfg;
}

void ExperimentPlan::validate() const {
  prior.validate();
  if (n_grid.empty()) throw InvalidInput("plan: n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw InvalidInput("plan: every n must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw InvalidInput("plan: n_grid must be ascending");
  }
  if (replicates < 1) throw InvalidInput("plan: replicates must be >= 1");
  if (metrics.empty()) throw InvalidInput("plan: no metrics");
  const bool needs_methods =
      std::any_of(metrics.begin(), metrics.end(), [](Metric m) { return m != Metric::hellinger_sq; });
  if (needs_methods && methods.empty()) throw InvalidInput("plan: no methods");
  if (threads < 1) throw InvalidInput("plan: threads must be >= 1");
  if (!(solver.tol > 0.0)) throw InvalidInput("plan: npmle_tol must be > 0");
}

ExperimentPlan parse_plan(std::string_view text) {
  ExperimentPlan plan;
  bool have_prior = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("plan line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "prior") {
      plan.prior = parse_prior_spec(value);
      have_prior = true;
    } else if (key == "p") {
      plan.p = parse_double(key, value);
    } else if (key == "n_grid") {
      plan.n_grid.clear();
      for (const auto& v : split(value, ',')) plan.n_grid.push_back(parse_int(key, v));
    } else if (key == "replicates") {
      plan.replicates = parse_int(key, value);
    } else if (key == "methods") {
      plan.methods.clear();
      for (const auto& v : split(value, ',')) plan.methods.push_back(parse_method(v));
    } else if (key == "metrics") {
      plan.metrics.clear();
      for (const auto& v : split(value, ',')) plan.metrics.push_back(parse_metric(v));
    } else if (key == "seed") {
      plan.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "disc_tol") {
      plan.disc_tol = parse_double(key, value);
    } else if (key == "tune_c") {
      plan.tune_c = parse_double(key, value);
    } else if (key == "direct_total") {
      plan.direct_total = parse_bool(key, value);
    } else if (key == "npmle_tol") {
      plan.solver.tol = parse_double(key, value);
    } else if (key == "grid_density") {
      plan.solver.grid_density = static_cast<int>(parse_int(key, value));
    } else if (key == "max_iter") {
      plan.solver.max_iter = static_cast<int>(parse_int(key, value));
    } else if (key == "threads") {
      plan.threads = static_cast<int>(parse_int(key, value));
    } else {
      throw InvalidInput("plan line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!have_prior) throw InvalidInput("plan: missing prior");
  plan.validate();
  return plan;
}

// ---------------------------------------------------------------------------
// Runner

ExperimentReport::Summary ExperimentReport::summarize(std::int64_t n, std::string_view method,
                                                      std::string_view metric) const {
  const auto v = values(n, method, metric);
  Summary s;
  s.count = static_cast<std::int64_t>(v.size());
  if (v.empty()) return s;
  detail::KahanSum sum;
  for (double x : v) sum.add(x);
  s.mean = sum.value() / static_cast<double>(v.size());
  if (v.size() > 1) {
    detail::KahanSum ss;
    for (double x : v) ss.add((x - s.mean) * (x - s.mean));
    s.std_error = std::sqrt(ss.value() / static_cast<double>(v.size() - 1) /
                            static_cast<double>(v.size()));
  }
  return s;
}

std::vector<double> ExperimentReport::values(std::int64_t n, std::string_view method,
                                             std::string_view metric) const {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.n == n && r.method == method && r.metric == metric && r.flags.find("failed") == std::string::npos)
      v.push_back(r.value);
  return v;
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const ProgressFn& progress) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  std::mutex progress_mu;
  auto say = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(progress_mu);
    progress(msg);
  };

  say("resolving prior " + to_string(plan.prior));
  const bool needs_p_moment = std::any_of(plan.methods.begin(), plan.methods.end(),
                                          [](const MethodSpec& m) { return m.tune_y0 || m.tune_rho; });
  const Truth truth = make_truth(resolve(plan.prior, needs_p_moment ? plan.p : 0.0, plan.disc_tol));
  const double m_p = needs_p_moment ? truth.prior.p_moment : 1.0;

  const bool want_h = std::count(plan.metrics.begin(), plan.metrics.end(), Metric::hellinger_sq) > 0;
  const bool want_ind =
      std::count(plan.metrics.begin(), plan.metrics.end(), Metric::individual_regret) > 0;
  const bool want_tot = std::count(plan.metrics.begin(), plan.metrics.end(), Metric::total_regret) > 0;

  std::vector<std::vector<EstimatorConfig>> configs(plan.n_grid.size());
  for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni)
    for (const auto& m : plan.methods)
      configs[ni].push_back(resolve_method(m, plan.n_grid[ni], plan.p, m_p, plan.tune_c));

  const auto reps = static_cast<std::size_t>(plan.replicates);
  const std::size_t n_tasks = plan.n_grid.size() * reps;
  std::vector<NRepResult> results(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) return;
      const std::size_t ni = task / reps;
      const auto rep = static_cast<std::int64_t>(task % reps);
      const std::int64_t n = plan.n_grid[ni];
      try {
        const std::uint64_t s = stream_seed(plan.seed, {static_cast<std::uint64_t>(n),
                                                        static_cast<std::uint64_t>(rep)});
        auto& rows = results[task].rows;
        if (want_h) {
          const DensityRiskResult h = density_risk_trial(truth, std::max<std::int64_t>(n, 10), s, plan.solver);
          rows.push_back({n, rep, "npmle-fit", "hellinger_sq", h.hellinger_sq, 0.0,
                          h.converged ? "" : "failed;nonconverged"});
        }
        if (want_ind || want_tot) {
          Rng rng = make_stream(s, {0x72656772ULL});
          const Draws d = draw_pairs(truth.prior, n, rng);
          const CountHistogram train = CountHistogram::from_observations(
              std::span<const std::int64_t>(d.y.data(), static_cast<std::size_t>(n - 1)));
          for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) {
            const EstimatorConfig& cfg = configs[ni][mi];
            const std::string label = plan.methods[mi].label();
            const RegretResult r = individual_regret_on(truth, train, cfg);
            std::string flags;
            if (cfg.y0 != kNoTruncation) flags += "y0=" + std::to_string(cfg.y0);
            if (r.capped > 0) flags += (flags.empty() ? "" : ";") + std::string("capped=") + std::to_string(r.capped);
            if (r.failed) flags += (flags.empty() ? "" : ";") + std::string("failed;nonconverged");
            if (want_ind)
              rows.push_back({n, rep, label, "individual_regret", r.regret, r.tail_uncertainty, flags});
            if (want_tot) {
              const TotalRegretResult t = total_regret_on(truth, d, cfg, plan.direct_total, &r);
              const std::string tflags =
                  t.failed && flags.find("failed") == std::string::npos ? flags + ";failed" : flags;
              rows.push_back({n, rep, label, "total_regret", t.via_individual,
                              static_cast<double>(n) * r.tail_uncertainty, tflags});
              if (t.direct)
                rows.push_back({n, rep, label, "total_regret_direct", *t.direct, 0.0, tflags});
            }
          }
        }
        say("n=" + std::to_string(n) + " replicate=" + std::to_string(rep) + " done");
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };

  const int nthreads = std::max(1, std::min<int>(plan.threads, static_cast<int>(n_tasks)));
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport report;
  report.header = {
      {"ebpois_version", EBPOIS_VERSION_STRING},
      {"prior", to_string(plan.prior)},
      {"p", fmt(plan.p)},
      {"p_moment", fmt(m_p)},
      {"replicates", std::to_string(plan.replicates)},
      {"seed", std::to_string(plan.seed)},
      {"disc_tol", fmt(plan.disc_tol)},
      {"disc_error", fmt(truth.prior.disc_error)},
      {"tune_c", fmt(plan.tune_c)},
      {"direct_total", plan.direct_total ? "true" : "false"},
      {"npmle_tol", fmt(plan.solver.tol)},
      {"grid_density", std::to_string(plan.solver.grid_density)},
      {"max_iter", std::to_string(plan.solver.max_iter)},
      {"y_cap", std::to_string(truth.y_cap)},
      {"tail_beyond_y_cap", fmt(truth.tail_beyond_cap)},
      {"mmse", fmt(truth.mmse)},
  };
  std::string ngrid, methods, metrics;
  for (auto n : plan.n_grid) ngrid += (ngrid.empty() ? "" : ",") + std::to_string(n);
  for (const auto& m : plan.methods) methods += (methods.empty() ? "" : ",") + m.label();
  for (auto m : plan.metrics) metrics += (metrics.empty() ? "" : ",") + std::string(metric_name(m));
  report.header.insert(report.header.begin() + 3, {"n_grid", ngrid});
  report.header.insert(report.header.begin() + 4, {"methods", methods});
  report.header.insert(report.header.begin() + 5, {"metrics", metrics});

  for (auto& r : results)
    for (auto& row : r.rows) report.rows.push_back(std::move(row));

  // Slopes per (method, metric) from per-n means.
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& row : report.rows) {
    const std::pair<std::string, std::string> k{row.method, row.metric};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& [method, metric] : keys) {
    std::vector<std::pair<double, double>> pts;
    for (auto n : plan.n_grid) {
      const auto s = report.summarize(n, method, metric);
      if (s.count > 0) pts.emplace_back(static_cast<double>(n), s.mean);
    }
    try {
      report.slopes.push_back({method, metric, fit_rate(pts)});
    } catch (const InvalidInput&) {
      // fewer than 4 usable n-values: no slope
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_rows_csv(std::ostream& os, const ExperimentReport& report) {
  for (const auto& [k, v] : report.header) os << "# " << k << '=' << v << '\n';
  os << "n,replicate,method,metric,value,std_error,flags\n";
  for (const auto& r : report.rows)
    os << r.n << ',' << r.replicate << ',' << r.method << ',' << r.metric << ',' << fmt(r.value)
       << ',' << fmt(r.std_error) << ',' << r.flags << '\n';
}

void write_slopes_csv(std::ostream& os, const ExperimentReport& report) {
  for (const auto& [k, v] : report.header) os << "# " << k << '=' << v << '\n';
  os << "method,metric,slope,ci_lo,ci_hi,n_points\n";
  for (const auto& s : report.slopes)
    os << s.method << ',' << s.metric << ',' << fmt(s.fit.slope) << ',' << fmt(s.fit.ci_lo) << ','
       << fmt(s.fit.ci_hi) << ',' << s.fit.n_points << '\n';
}

}  // namespace ebpois
