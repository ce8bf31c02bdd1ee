#pragma once

#include "mixgp/levelset.hpp"
#include "mixgp/preference.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mixgp {

/// One-dimensional demo: latent x^2/2 on [-3, 3], Bernoulli draws, and two
/// tight constraints f(0) = 0 and f(2) = 2.
struct Figure2Config {
  std::uint64_t seed = 0;
  int draws = 30;
  double constraint_variance = 1e-3;
  int grid_points = 121;
  int num_inducing = 100;
  FitOptions fit;
  HyperPriors priors;
  Figure2Config() { fit.iterations = 1500; }
};

struct Figure2Curve {
  Vector mean;
  Vector sd;
};

struct Figure2Result {
  Vector grid;
  Vector truth;
  Points data_x;
  Vector data_y;
  ConstraintSet constraints;
  Figure2Curve mixed;
  Figure2Curve unconstrained;
  // at the constraint locations, in constraint order
  Vector mixed_sd_at;
  Vector mixed_error_at;
  Vector unconstrained_sd_at;
};

Figure2Result run_figure2(const Figure2Config& config);

/// Synthetic pair data with f(x) = x: pairs from scrambled Sobol over the
/// square domain, responses from PreferenceResponder.
std::vector<PreferenceRecord> synthetic_preference_data(int n, std::uint64_t seed, double lower = -2.0,
                                                        double upper = 2.0);

struct Figure4Config {
  std::uint64_t seed = 0;
  int train_pairs = 40;
  int grid_points = 41;
  PreferenceFitConfig fit;
  Figure4Config() { fit.fit.iterations = 800; }
};

struct Figure4Result {
  Vector grid;
  Matrix truth;   // Phi(x1 - x2), rows x1, columns x2
  Matrix mixed;
  Matrix choice_only;
  double mse_mixed = 0.0;
  double mse_choice_only = 0.0;
};

Figure4Result run_figure4(const Figure4Config& config);

}  // namespace mixgp
