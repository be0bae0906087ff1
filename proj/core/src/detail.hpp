#pragma once

// Internal numerical helpers shared by the translation units in core/src.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace ebpois::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(y!) for y >= 0; tabulated for small y, lgamma beyond.
double log_factorial(std::int64_t y);

/// Compensated (Neumaier) summation.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace ebpois::detail
