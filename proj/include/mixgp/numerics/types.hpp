#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>

namespace mixgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Point sets: one point per row, rows contiguous.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const Points& X, Eigen::Index i) {
  return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
}
inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class FactorizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  static Box unit(int dim);
  static Box uniform(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  bool contains(const Vector& x, double tol = 1e-12) const;
  Vector clamp(const Vector& x) const;
  Vector center() const { return 0.5 * (lower + upper); }
  Vector width() const { return upper - lower; }
  // Maps a point of [0,1]^d into the box.
  Vector from_unit(const Vector& u) const;
  Vector to_unit(const Vector& x) const;
};

}  // namespace mixgp
