#pragma once

#include "mixgp/numerics/types.hpp"

namespace mixgp {

struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  long step = 0;

  void reset(Eigen::Index n) {
    first_moment = Vector::Zero(n);
    second_moment = Vector::Zero(n);
    step = 0;
  }
};

/// One Adam descent step on `params` (minimization). `lr_scale` multiplies the
/// configured learning rate for scheduling. Throws std::domain_error on a
/// non-finite gradient; params and state are left untouched in that case.
void adam_step(Vector& params, const Vector& gradient, AdamState& state, const AdamConfig& config,
               double lr_scale = 1.0);

}  // namespace mixgp
