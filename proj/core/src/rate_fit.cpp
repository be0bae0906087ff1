#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ebpois/error.hpp"
#include "ebpois/experiments.hpp"

namespace ebpois {

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  RateFit fit;
  std::vector<double> x, y;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("fit_rate: n must be positive");
    if (!(v > 0.0) || !std::isfinite(v)) {
      ++fit.excluded;
      continue;
    }
    x.push_back(std::log(n));
    y.push_back(std::log(v));
  }
  const auto m = static_cast<std::int64_t>(x.size());
  fit.n_points = m;
  if (m < 4) throw InvalidInput("fit_rate: need at least 4 positive points");
  double xmin = x[0], xmax = x[0];
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  if ((xmax - xmin) / std::log(10.0) < 1.5 - 1e-12)
    throw InvalidInput("fit_rate: n must span at least 1.5 decades");

  double mx = 0.0, my = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  const double dof = static_cast<double>(m - 2);
  const double se = std::sqrt(rss / dof / sxx);
  boost::math::students_t dist(dof);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_lo = fit.slope - t * se;
  fit.ci_hi = fit.slope + t * se;
  return fit;
}

}  // namespace ebpois
