#include "ebpois/discrete_prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebpois/error.hpp"

namespace ebpois {

namespace {

void check_raw(const std::vector<double>& atoms,
               const std::vector<double>& weights) {
  if (atoms.empty()) throw InvalidInput("DiscretePrior: no atoms");
  if (atoms.size() != weights.size())
    throw InvalidInput("DiscretePrior: atoms/weights length mismatch");
  for (double a : atoms) {
    if (!std::isfinite(a) || a < 0.0)
      throw InvalidInput("DiscretePrior: atoms must be finite and >= 0");
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw InvalidInput("DiscretePrior: weights must be finite and >= 0");
  }
}

}  // namespace

DiscretePrior::DiscretePrior(std::vector<double> atoms,
                             std::vector<double> weights,
                             double weight_floor) {
  check_raw(atoms, weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidInput("DiscretePrior: weights must sum to 1");
  atoms_ = std::move(atoms);
  weights_ = std::move(weights);
  canonicalize(weight_floor);
}

DiscretePrior DiscretePrior::normalized(std::vector<double> atoms,
                                        std::vector<double> weights,
                                        double weight_floor) {
  check_raw(atoms, weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InvalidInput("DiscretePrior: zero total weight");
  for (double& w : weights) w /= total;
  DiscretePrior prior;
  prior.atoms_ = std::move(atoms);
  prior.weights_ = std::move(weights);
  prior.canonicalize(weight_floor);
  return prior;
}

DiscretePrior DiscretePrior::point_mass(double theta) {
  return DiscretePrior({theta}, {1.0});
}

void DiscretePrior::canonicalize(double weight_floor) {
  std::vector<std::size_t> order(atoms_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return atoms_[a] < atoms_[b];
  });

  std::vector<double> atoms;
  std::vector<double> weights;
  atoms.reserve(order.size());
  weights.reserve(order.size());
  for (std::size_t idx : order) {
    if (!atoms.empty() && atoms.back() == atoms_[idx]) {
      weights.back() += weights_[idx];
    } else {
      atoms.push_back(atoms_[idx]);
      weights.push_back(weights_[idx]);
    }
  }

  // Prune after merging so that split mass on one atom is not lost.
  std::vector<double> kept_atoms;
  std::vector<double> kept_weights;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] >= weight_floor && weights[i] > 0.0) {
      kept_atoms.push_back(atoms[i]);
      kept_weights.push_back(weights[i]);
    }
  }
  if (kept_atoms.empty()) {
    // Everything fell below the floor: keep the heaviest atom.
    const auto it = std::max_element(weights.begin(), weights.end());
    kept_atoms.push_back(atoms[static_cast<std::size_t>(it - weights.begin())]);
    kept_weights.push_back(1.0);
  }
  const double total =
      std::accumulate(kept_weights.begin(), kept_weights.end(), 0.0);
  for (double& w : kept_weights) w /= total;

  atoms_ = std::move(kept_atoms);
  weights_ = std::move(kept_weights);
}

double DiscretePrior::moment(double p) const {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const double a = atoms_[i];
    const double term = (a == 0.0) ? (p == 0.0 ? 1.0 : 0.0) : std::pow(a, p);
    m += weights_[i] * term;
  }
  return m;
}

}  // namespace ebpois
