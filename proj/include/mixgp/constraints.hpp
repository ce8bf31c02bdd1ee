#pragma once

#include "mixgp/likelihoods.hpp"

#include <utility>

namespace mixgp {

/// Soft constraints f(x_i) ~ y_i with fixed noise sd sigma_i.
struct ConstraintSet {
  Points X;
  Vector y;
  Vector noise_sd;

  Eigen::Index size() const { return y.size(); }
  bool empty() const { return y.size() == 0; }
  // Throws std::invalid_argument on shape errors, non-positive noise or
  // locations outside the domain.
  void validate(const Box& domain) const;

  ObservationBlock as_block() const;
};

/// sigma = 0.2 y + 0.1
double constraint_noise(double y);

/// Builds a set whose noise follows constraint_noise.
ConstraintSet make_constraint_set(Points X, Vector y);

/// 95% interval of the response probability Phi(f) with f ~ N(y, sigma^2).
std::pair<double, double> response_probability_interval(double y, double sigma, double z = 1.959963984540054);

/// Bernoulli pseudo data: 5 ones and 5 zeros at each y = 0 location, one 1 at
/// every y > 0 location.
ObservationBlock make_pseudo_data(const ConstraintSet& constraints);

}  // namespace mixgp
