#pragma once

#include "mixgp/numerics/types.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace mixgp::testing {

inline Points random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Points X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
  return X;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Matrix M(n, n);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = g(rng);
  return M * M.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const Vector&)>& f, Vector x,
                                 Eigen::Index i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace mixgp::testing
