#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ebpois/error.hpp"
#include "ebpois/estimators.hpp"
#include "ebpois/experiments.hpp"
#include "ebpois/io.hpp"
#include "ebpois/moment_match.hpp"
#include "ebpois/npmle.hpp"
#include "ebpois/priors.hpp"
#include "ebpois/verify.hpp"

#ifndef EBPOIS_VERSION_STRING
#define EBPOIS_VERSION_STRING "unknown"
#endif

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kBadConfig = 2, kNumerical = 3 };

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<bool> strict;
  std::string out;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    ebpois::write_file(c.out, text);
  }
}

// npmle-fit ------------------------------------------------------------------

struct FitArgs {
  std::string input;
  int density = 4;
  double tol = 1e-6;
  int max_iter = 10000;
};

int run_fit(const Common& c, const FitArgs& a) {
  using namespace ebpois;
  const CountHistogram data = parse_histogram(read_file(a.input));
  const NpmleFit fit = fit_npmle(data, grid_spec(data, a.density), a.tol, a.max_iter);
  const bool strict = c.strict.value_or(true);
  if (strict && !fit.converged)
    throw NotConverged("npmle-fit: solver stopped with kkt_gap " + fmt(fit.kkt_gap));
  Json j;
  j["ebpois_version"] = EBPOIS_VERSION_STRING;
  j["config"] = {{"input", a.input}, {"grid_density", a.density}, {"tol", a.tol},
                 {"max_iter", a.max_iter}, {"strict", strict}, {"n", data.n()}};
  const Json body = to_json(fit);
  for (const auto& [k, v] : body.items()) j[k] = v;
  emit(c, j.dump(2) + "\n");
  return kOk;
}

// eb-estimate ----------------------------------------------------------------

struct EstimateArgs {
  std::string input;
  std::string method = "npmle";
  std::string prior;
  std::int64_t y_cap = -1;
  double p = 2.0;
  double m_p = 1.0;
  double tune_c = 1.0;
};

int run_estimate(const Common& c, const EstimateArgs& a) {
  using namespace ebpois;
  const CountHistogram data = parse_histogram(read_file(a.input));
  const MethodSpec spec = parse_method(a.method);
  const EstimatorConfig cfg = resolve_method(spec, data.n(), a.p, a.m_p, a.tune_c);
  const std::int64_t y_cap = a.y_cap >= 0 ? a.y_cap : data.y_max();
  std::optional<MixturePmf> oracle;
  if (cfg.kind == EstimatorKind::oracle) {
    if (a.prior.empty()) throw InvalidInput("eb-estimate: method oracle needs --prior");
    oracle = pmf_table(prior_from_json(Json::parse(read_file(a.prior))), 1e-12, y_cap + 1);
  }
  const FittedRule rule = fit_rule(cfg, data, y_cap, oracle ? &*oracle : nullptr);
  if (c.strict.value_or(true) && rule.fit && !rule.fit->converged)
    throw NotConverged("eb-estimate: NPMLE did not converge");
  std::ostringstream os;
  write_rule_csv(os, rule,
                 {{"ebpois_version", EBPOIS_VERSION_STRING},
                  {"input", a.input},
                  {"method", spec.label()},
                  {"kind", std::string(estimator_name(cfg.kind))},
                  {"y0", cfg.y0 == kNoTruncation ? std::string("inf") : std::to_string(cfg.y0)},
                  {"rho", fmt(cfg.rho)},
                  {"npmle_tol", fmt(cfg.npmle_tol)},
                  {"p", fmt(a.p)},
                  {"m_p", fmt(a.m_p)},
                  {"y_cap", std::to_string(y_cap)},
                  {"n", std::to_string(data.n())}});
  emit(c, os.str());
  return kOk;
}

// regret-sweep / density-risk -------------------------------------------------

struct SweepArgs {
  std::string plan;
  std::string slopes;
  bool quiet = false;
};

int run_sweep(const Common& c, const SweepArgs& a, bool density) {
  using namespace ebpois;
  ExperimentPlan plan = parse_plan(read_file(a.plan));
  if (density) {
    plan.metrics = {Metric::hellinger_sq};
  } else {
    std::erase(plan.metrics, Metric::hellinger_sq);
    if (plan.metrics.empty()) plan.metrics = {Metric::individual_regret};
  }
  if (c.seed) plan.seed = *c.seed;
  if (c.threads) plan.threads = *c.threads;
  plan.validate();
  ProgressFn progress;
  if (!a.quiet) progress = [](std::string_view msg) { std::cerr << msg << '\n'; };
  const ExperimentReport report = run_experiment(plan, progress);
  std::ostringstream rows;
  write_rows_csv(rows, report);
  emit(c, rows.str());
  if (!a.slopes.empty()) {
    std::ostringstream sl;
    write_slopes_csv(sl, report);
    write_file(a.slopes, sl.str());
  }
  if (!a.quiet) std::cerr << "runtime_seconds=" << report.runtime_seconds << '\n';
  if (c.strict.value_or(false)) {
    for (const auto& r : report.rows)
      if (r.flags.find("failed") != std::string::npos)
        throw NotConverged("row n=" + std::to_string(r.n) + " " + r.method + " failed");
  }
  return kOk;
}

// moment-match ---------------------------------------------------------------

struct MatchArgs {
  std::string source;
  double M = 64.0;
  double eta = 1e-2;
  double C = 1.0;
  double K = 5.0;
};

int run_match(const Common& c, const MatchArgs& a) {
  using namespace ebpois;
  const DiscretePrior source = prior_from_json(Json::parse(read_file(a.source)));
  MomentMatchConfig cfg;
  cfg.K = a.K;
  const MatchReport report = local_moment_match(source, a.M, a.eta, a.C, cfg);
  Json j;
  j["ebpois_version"] = EBPOIS_VERSION_STRING;
  j["config"] = {{"source", a.source}, {"M", a.M}, {"eta", a.eta}, {"C", a.C}, {"K", a.K}};
  const Json body = to_json(report);
  for (const auto& [k, v] : body.items()) j[k] = v;
  emit(c, j.dump(2) + "\n");
  if (c.strict.value_or(false) && report.achieved_sup_error > a.eta)
    throw MomentDegeneracy("moment-match: achieved error above eta");
  return kOk;
}

// verify ---------------------------------------------------------------------

int run_verify_cmd(const Common& c, int n_max, bool skip_npmle) {
  using namespace ebpois;
  VerifyOptions o;
  if (c.seed) o.seed = *c.seed;
  o.binomial_n_max = n_max;
  o.include_npmle = !skip_npmle;
  const VerifyReport r = run_verify(o);
  std::ostringstream os;
  os << "# ebpois_version=" << EBPOIS_VERSION_STRING << "\n# seed=" << o.seed << '\n';
  for (const auto& ch : r.checks) {
    os << (ch.passed ? "PASS " : "FAIL ") << ch.name << " worst=" << fmt(ch.worst)
       << " tol=" << fmt(ch.tolerance) << " cases=" << ch.cases;
    if (!ch.detail.empty()) os << " (" << ch.detail << ')';
    os << '\n';
  }
  emit(c, os.str());
  return r.passed() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson empirical Bayes: NPMLE fits, EB rules, regret sweeps"};
  app.set_version_flag("--version", EBPOIS_VERSION_STRING);
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed = 0;
  int threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) { common.seed = seed; });
    sub->add_option("--threads", threads, "worker threads")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { common.threads = threads; });
    sub->add_flag_function(
        "--strict,!--no-strict",
        [&](std::int64_t v) { common.strict = v > 0; },
        "fail on solver non-convergence");
    sub->add_option("--out,-o", common.out, "output path (default stdout)");
  };

  FitArgs fit;
  auto* s_fit = app.add_subcommand("npmle-fit", "fit the NPMLE to count data");
  s_fit->add_option("--input,-i", fit.input, "newline integers or {\"counts\":{...}}")->required();
  s_fit->add_option("--grid-density", fit.density)->check(CLI::PositiveNumber);
  s_fit->add_option("--tol", fit.tol);
  s_fit->add_option("--max-iter", fit.max_iter)->check(CLI::PositiveNumber);
  add_common(s_fit);

  EstimateArgs est;
  auto* s_est = app.add_subcommand("eb-estimate", "per-y table of an EB rule");
  s_est->add_option("--input,-i", est.input)->required();
  s_est->add_option("--method", est.method, "oracle|mle|robbins|robbins-addone|robbins-trunc|npmle[:y0=..][:rho=..]");
  s_est->add_option("--prior", est.prior, "prior JSON for the oracle rule");
  s_est->add_option("--y-cap", est.y_cap);
  s_est->add_option("--p", est.p, "moment order used for tuning");
  s_est->add_option("--m-p", est.m_p, "moment bound used for tuning");
  s_est->add_option("--tune-c", est.tune_c);
  add_common(s_est);

  SweepArgs sweep;
  auto* s_reg = app.add_subcommand("regret-sweep", "EB regret over an n grid");
  auto* s_den = app.add_subcommand("density-risk", "NPMLE Hellinger risk over an n grid");
  for (auto* s : {s_reg, s_den}) {
    s->add_option("--plan", sweep.plan, "plan file (key = value lines)")->required();
    s->add_option("--slopes", sweep.slopes, "slope summary CSV path");
    s->add_flag("--quiet,-q", sweep.quiet);
    add_common(s);
  }

  MatchArgs match;
  auto* s_mm = app.add_subcommand("moment-match", "local moment matching of a prior");
  s_mm->add_option("--source", match.source, "prior JSON")->required();
  s_mm->add_option("--M", match.M)->check(CLI::PositiveNumber);
  s_mm->add_option("--eta", match.eta);
  s_mm->add_option("--C", match.C)->check(CLI::PositiveNumber);
  s_mm->add_option("--K", match.K)->check(CLI::PositiveNumber);
  add_common(s_mm);

  int n_max = 60;
  bool skip_npmle = false;
  auto* s_ver = app.add_subcommand("verify", "run the property suite");
  s_ver->add_option("--binomial-n-max", n_max)->check(CLI::Range(1, 60));
  s_ver->add_flag("--skip-npmle", skip_npmle);
  add_common(s_ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadConfig;
  }

  try {
    if (s_fit->parsed()) return run_fit(common, fit);
    if (s_est->parsed()) return run_estimate(common, est);
    if (s_reg->parsed()) return run_sweep(common, sweep, false);
    if (s_den->parsed()) return run_sweep(common, sweep, true);
    if (s_mm->parsed()) return run_match(common, match);
    if (s_ver->parsed()) return run_verify_cmd(common, n_max, skip_npmle);
  } catch (const ebpois::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ebpois::UnsupportedRegime& e) {
    std::cerr << "unsupported regime: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ebpois::MomentInfinite& e) {
    std::cerr << "infinite moment: " << e.what() << '\n';
    return kBadConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ebpois::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kBadConfig;
}
