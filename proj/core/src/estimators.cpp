#include "ebpois/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"
#include "ebpois/error.hpp"

namespace ebpois {

namespace {

struct NameEntry {
  EstimatorKind kind;
  std::string_view name;
};

constexpr NameEntry kNames[] = {
    {EstimatorKind::oracle, "oracle"},
    {EstimatorKind::mle, "mle"},
    {EstimatorKind::robbins_plain, "robbins"},
    {EstimatorKind::robbins_addone, "robbins-addone"},
    {EstimatorKind::robbins_trunc, "robbins-trunc"},
    {EstimatorKind::npmle_eb, "npmle"},
};

}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
  for (const auto& e : kNames)
    if (e.kind == kind) return e.name;
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.kind;
  throw InvalidInput("unknown estimator '" + std::string(name) + "'");
}

void EstimatorConfig::validate() const {
  if (y0 < 0) throw InvalidInput("estimator: y0 must be >= 0");
  if (kind == EstimatorKind::npmle_eb) {
    if (!(rho > 0.0 && rho <= std::exp(-1.0)))
      throw InvalidInput("estimator: rho must lie in (0, 1/e]");
    if (!(npmle_tol > 0.0)) throw InvalidInput("estimator: npmle_tol must be > 0");
    if (grid_density < 1) throw InvalidInput("estimator: grid_density must be >= 1");
  }
}

RobbinsValue robbins(const CountHistogram& hist, std::int64_t y, bool addone) {
  if (y < 0) throw InvalidInput("robbins: y must be >= 0");
  const auto num = static_cast<double>(y + 1) * static_cast<double>(hist.count(y + 1));
  const auto den = static_cast<double>(hist.count(y)) + (addone ? 1.0 : 0.0);
  RobbinsValue r;
  if (den == 0.0) {
    if (num > 0.0) {
      r.infinite = true;
      r.value = std::numeric_limits<double>::infinity();
    } else {
      r.degenerate = true;
    }
    return r;
  }
  r.value = num / den;
  return r;
}

double robbins_truncated(const CountHistogram& hist, std::int64_t y, std::int64_t y0) {
  if (y0 < 0) throw InvalidInput("robbins_truncated: y0 must be >= 0");
  if (y > y0) return static_cast<double>(y);
  return robbins(hist, y, true).value;
}

double npmle_eb(const DiscretePrior& prior, std::int64_t y, std::int64_t y0, double rho) {
  if (!(rho > 0.0 && rho <= std::exp(-1.0)))
    throw InvalidInput("npmle_eb: rho must lie in (0, 1/e]");
  if (y < 0) throw InvalidInput("npmle_eb: y must be >= 0");
  if (y > y0) return static_cast<double>(y);
  const double yp1 = static_cast<double>(y + 1);
  const double lf = log_mixture_pmf(prior, y);
  const double lf1 = log_mixture_pmf(prior, y + 1);
  if (lf >= std::log(rho)) return yp1 * std::exp(lf1 - lf);
  const double f = std::exp(lf);
  const double f1 = std::exp(lf1);
  return std::max(0.0, yp1 * ((f1 - f) / rho + 1.0));
}

double npmle_eb(const NpmleFit& fit, std::int64_t y, std::int64_t y0, double rho) {
  return npmle_eb(fit.prior, y, y0, rho);
}

TunedParameters tune_defaults(std::int64_t n, double p, double m_p, double c) {
  if (n < 2) throw InvalidInput("tune_defaults: n must be >= 2");
  if (!(p > 1.0))
    throw UnsupportedRegime("tune_defaults: p <= 1 is outside the consistent regime");
  if (!(m_p > 0.0)) throw InvalidInput("tune_defaults: m_p must be > 0");
  if (!(c > 0.0)) throw InvalidInput("tune_defaults: c must be > 0");
  const double nd = static_cast<double>(n);
  const double e = 2.0 / (2.0 * p + 1.0);
  TunedParameters t;
  t.rho = std::min(std::exp(-1.0), c * std::pow(nd, -10.0));
  t.npmle_y0 = static_cast<std::int64_t>(std::ceil(c * std::pow(nd, e) * std::pow(m_p, e)));
  const double ln = std::log(nd);
  t.robbins_y0 = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil(c * std::pow(nd / (ln * ln * ln), 1.0 / (p + 2.0)))));
  t.npmle_y0 = std::max<std::int64_t>(1, t.npmle_y0);
  return t;
}

double FittedRule::operator()(std::int64_t y) const {
  if (y < 0 || y > y_cap()) throw RangeError("FittedRule: y outside 0..y_cap");
  return table[static_cast<std::size_t>(y)];
}

FittedRule fit_rule(const EstimatorConfig& config, const CountHistogram& train,
                    std::int64_t y_cap, const MixturePmf* oracle) {
  config.validate();
  if (y_cap < 0) throw InvalidInput("fit_rule: y_cap must be >= 0");
  FittedRule rule;
  rule.config = config;
  rule.histogram = train;
  rule.table.resize(static_cast<std::size_t>(y_cap) + 1);

  const std::int64_t y0 = config.y0;
  auto identity_branch = [&](std::int64_t y) { return y > y0; };

  switch (config.kind) {
    case EstimatorKind::oracle: {
      if (oracle == nullptr) throw InvalidInput("fit_rule: oracle needs the true mixture");
      if (oracle->y_max() < y_cap + 1)
        throw RangeError("fit_rule: oracle table shorter than y_cap + 1");
      for (std::int64_t y = 0; y <= y_cap; ++y) {
        double v = 0.0;
        if (oracle->log_values[static_cast<std::size_t>(y)] == detail::kNegInf) {
          rule.degenerate_at.push_back(y);
        } else {
          v = bayes_rule(*oracle, y);
        }
        rule.table[static_cast<std::size_t>(y)] = v;
      }
      break;
    }
    case EstimatorKind::mle:
      for (std::int64_t y = 0; y <= y_cap; ++y)
        rule.table[static_cast<std::size_t>(y)] = static_cast<double>(y);
      break;
    case EstimatorKind::robbins_plain:
    case EstimatorKind::robbins_addone:
    case EstimatorKind::robbins_trunc: {
      const bool addone = config.kind != EstimatorKind::robbins_plain;
      for (std::int64_t y = 0; y <= y_cap; ++y) {
        double v;
        if (identity_branch(y)) {
          v = static_cast<double>(y);
        } else {
          const RobbinsValue r = robbins(train, y, addone);
          if (r.infinite) rule.infinite_at.push_back(y);
          if (r.degenerate) rule.degenerate_at.push_back(y);
          v = std::min(r.value, FittedRule::kInfiniteCap);
        }
        rule.table[static_cast<std::size_t>(y)] = v;
      }
      break;
    }
    case EstimatorKind::npmle_eb: {
      if (train.empty()) throw InvalidInput("fit_rule: npmle needs training data");
      NpmleFit fit = fit_npmle(train, grid_spec(train, config.grid_density), config.npmle_tol);
      for (std::int64_t y = 0; y <= y_cap; ++y)
        rule.table[static_cast<std::size_t>(y)] =
            identity_branch(y) ? static_cast<double>(y)
                               : npmle_eb(fit.prior, y, y0, config.rho);
      rule.fit = std::move(fit);
      break;
    }
  }
  return rule;
}

double centered_bayes_diagnostic(const MixturePmf& pmf) {
  double worst = 0.0;
  for (std::int64_t y = 0; y + 1 <= pmf.y_max(); ++y) {
    const double f = pmf(y);
    if (f < 1e-12) continue;
    const double lg = -pmf.log_values[static_cast<std::size_t>(y)];
    if (!(lg > 0.0)) continue;
    const double yd = static_cast<double>(y);
    const double ratio =
        std::abs(bayes_rule(pmf, y) - yd) / (std::sqrt(std::max(yd, 1.0)) * lg);
    worst = std::max(worst, ratio);
  }
  return worst;
}

}  // namespace ebpois
