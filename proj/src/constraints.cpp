#include "mixgp/constraints.hpp"

#include "mixgp/numerics/normal.hpp"

#include <string>

namespace mixgp {

void ConstraintSet::validate(const Box& domain) const {
  if (X.rows() != y.size() || noise_sd.size() != y.size())
    throw std::invalid_argument("constraint set: X, y and noise_sd must have matching rows");
  if (y.size() > 0 && X.cols() != domain.dim())
    throw std::invalid_argument("constraint set: location dimension does not match the domain");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(noise_sd[i] > 0.0)) throw std::invalid_argument("constraint " + std::to_string(i) + ": noise sd must be positive");
    if (!std::isfinite(y[i])) throw std::invalid_argument("constraint " + std::to_string(i) + ": target must be finite");
    if (!domain.contains(X.row(i).transpose(), 1e-9))
      throw std::invalid_argument("constraint " + std::to_string(i) + ": location outside the domain");
  }
}

ObservationBlock ConstraintSet::as_block() const { return ObservationBlock::gaussian(X, y, noise_sd); }

double constraint_noise(double y) { return 0.2 * y + 0.1; }

ConstraintSet make_constraint_set(Points X, Vector y) {
  Vector sd(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) sd[i] = constraint_noise(y[i]);
  return ConstraintSet{std::move(X), std::move(y), std::move(sd)};
}

std::pair<double, double> response_probability_interval(double y, double sigma, double z) {
  return {normal_cdf(y - z * sigma), normal_cdf(y + z * sigma)};
}

ObservationBlock make_pseudo_data(const ConstraintSet& constraints) {
  const Eigen::Index d = constraints.X.cols();
  std::vector<std::pair<Eigen::Index, double>> rows;
  for (Eigen::Index i = 0; i < constraints.size(); ++i) {
    if (constraints.y[i] == 0.0) {
      for (int k = 0; k < 10; ++k) rows.emplace_back(i, k < 5 ? 1.0 : 0.0);
    } else {
      rows.emplace_back(i, 1.0);
    }
  }
  Points X(static_cast<Eigen::Index>(rows.size()), d);
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    X.row(static_cast<Eigen::Index>(r)) = constraints.X.row(rows[r].first);
    y[static_cast<Eigen::Index>(r)] = rows[r].second;
  }
  return ObservationBlock::bernoulli(std::move(X), std::move(y));
}

}  // namespace mixgp
