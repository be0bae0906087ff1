#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ebpois {

/// Finitely supported mixing distribution on [0, inf).
///
/// Atoms are kept strictly increasing; duplicate atoms are merged, weights
/// below the pruning floor are dropped and the remainder renormalized so
/// that the weights sum to one.
class DiscretePrior {
 public:
  static constexpr double kDefaultWeightFloor = 1e-15;

  /// Throws InvalidInput on empty input, size mismatch, negative or
  /// non-finite atoms/weights, or weights whose sum is not 1 within 1e-9.
  DiscretePrior(std::vector<double> atoms, std::vector<double> weights,
                double weight_floor = kDefaultWeightFloor);

  /// Accepts arbitrary nonnegative weights (at least one positive) and
  /// normalizes them.
  static DiscretePrior normalized(std::vector<double> atoms,
                                  std::vector<double> weights,
                                  double weight_floor = kDefaultWeightFloor);

  static DiscretePrior point_mass(double theta);

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  double min_atom() const { return atoms_.front(); }
  double max_atom() const { return atoms_.back(); }

  /// m_p(G) = sum_i w_i * theta_i^p, with 0^0 == 1.
  double moment(double p) const;
  double mean() const { return moment(1.0); }

  bool operator==(const DiscretePrior&) const = default;

 private:
  DiscretePrior() = default;
  void canonicalize(double weight_floor);

  std::vector<double> atoms_;
  std::vector<double> weights_;
};

}  // namespace ebpois
