#pragma once

#include "mixgp/constraints.hpp"
#include "mixgp/numerics/random.hpp"
#include "mixgp/numerics/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mixgp {

enum class ObjectiveKind { discrimination, normball, ellipsoid, identity_preference };
enum class Link { normal_cdf, sigmoid };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::normball;
  std::string name;
  int dim = 2;
  Box domain;
  Link link = Link::normal_cdf;

  double latent(const Vector& x) const;
  double probability(const Vector& x) const;
  // Latent threshold of the 75% response sublevel set under the objective's own link.
  double truth_threshold() const;
  bool in_truth_sublevel(const Vector& x) const { return latent(x) <= truth_threshold(); }
};

/// "discrimination", "normball-2d", "normball-4d" (any "normball-<d>d"),
/// "ellipsoid", "identity-preference".
Objective make_objective(std::string_view name);

/// Symmetric positive definite ellipsoid weights.
Matrix ellipsoid_weights();

/// Phi^{-1}(0.75): the latent threshold seen by probit models.
double default_latent_threshold();

struct BernoulliResponder {
  Objective objective;
  CounterRng rng;

  // Response for trial `trial`; a pure function of (seed, trial, x).
  int respond(const Vector& x, std::uint64_t trial) const;
};

struct PreferenceResponse {
  int choice;  // 1 when x1 is preferred
  int rating;  // 0..2
};

/// Synthetic f(x) = x: choice ~ Bernoulli(Phi(x1 - x2)), rating from the
/// interval of |x1 - x2| among [0, 0.5), [0.5, 1), [1, inf).
struct PreferenceResponder {
  CounterRng rng;
  PreferenceResponse respond(double x1, double x2, std::uint64_t trial) const;
};

int synthetic_likert_rating(double strength);

/// Constraint locations and targets for a synthetic objective, noise from
/// constraint_noise.
ConstraintSet make_constraints(const Objective& objective);
Points constraint_locations(const Objective& objective);
double constraint_target(const Objective& objective, const Vector& x);

}  // namespace mixgp
