#pragma once

#include "mixgp/numerics/types.hpp"

namespace mixgp {

/// Gauss-Hermite rule for expectations under a standard normal:
///   sum_i w_i g(mu + sigma n_i) ~= E_{N(mu, sigma^2)}[g].
/// Weights sum to one; exact for polynomials of degree < 2 * order.
class GaussHermite {
public:
  static constexpr int default_order = 20;

  explicit GaussHermite(int order = default_order);

  int order() const { return static_cast<int>(nodes_.size()); }
  const Vector& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }

  template <typename F>
  double expect(double mu, double sigma, F&& g) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes_.size(); ++i) acc += weights_[i] * g(mu + sigma * nodes_[i]);
    return acc;
  }

private:
  Vector nodes_;
  Vector weights_;
};

}  // namespace mixgp
