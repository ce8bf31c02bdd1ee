#include "mixgp/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mixgp {

void adam_step(Vector& params, const Vector& gradient, AdamState& state, const AdamConfig& config,
               double lr_scale) {
  if (gradient.size() != params.size()) throw DimensionError("adam: gradient size mismatch");
  if (!gradient.allFinite()) throw std::domain_error("adam: non-finite gradient");
  if (state.first_moment.size() != params.size()) state.reset(params.size());

  ++state.step;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * gradient;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate * lr_scale;
  params.array() -= lr * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

}  // namespace mixgp
