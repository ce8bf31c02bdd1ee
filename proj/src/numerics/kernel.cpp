#include "mixgp/numerics/kernel.hpp"

#include <cmath>
#include <string>

namespace mixgp {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw DimensionError("box bounds differ in dimension");
  for (Eigen::Index d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d])) throw std::invalid_argument("box requires lower < upper on every axis");
  }
}

Box Box::unit(int dim) { return uniform(dim, 0.0, 1.0); }

Box Box::uniform(int dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

double Box::volume() const { return (upper - lower).prod(); }

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (x[d] < lower[d] - tol || x[d] > upper[d] + tol) return false;
  }
  return true;
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Vector Box::from_unit(const Vector& u) const {
  return lower.array() + u.array() * (upper - lower).array();
}

Vector Box::to_unit(const Vector& x) const {
  return (x - lower).array() / (upper - lower).array();
}

KernelParams::KernelParams(const Vector& lengthscales, double outputscale)
    : log_lengthscales(lengthscales.array().log()), log_outputscale(std::log(outputscale)) {
  if ((lengthscales.array() <= 0.0).any() || !(outputscale > 0.0))
    throw std::invalid_argument("kernel parameters must be strictly positive");
}

KernelParams KernelParams::isotropic(int dim, double lengthscale, double outputscale) {
  return KernelParams(Vector::Constant(dim, lengthscale), outputscale);
}

namespace {

void check_same(std::size_t a, std::size_t b, std::size_t want) {
  if (a != want || b != want)
    throw DimensionError("kernel input dimension " + std::to_string(a) + "/" + std::to_string(b) +
                         " does not match lengthscales (" + std::to_string(want) + ")");
}

}  // namespace

double rbf_ard(std::span<const double> x, std::span<const double> y, const KernelParams& params) {
  check_same(x.size(), y.size(), static_cast<std::size_t>(params.dim()));
  double r2 = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double u = (x[d] - y[d]) * std::exp(-params.log_lengthscales[d]);
    r2 += u * u;
  }
  return params.outputscale() * std::exp(-0.5 * r2);
}

double rbf_ard_accumulate(std::span<const double> x, std::span<const double> y,
                          const KernelParams& params, double weight, Vector& grad) {
  const int dim = params.dim();
  check_same(x.size(), y.size(), static_cast<std::size_t>(dim));
  double r2 = 0.0;
  double u2[64];
  double* scratch = dim <= 64 ? u2 : nullptr;
  Vector heap;
  if (!scratch) {
    heap.resize(dim);
    scratch = heap.data();
  }
  for (int d = 0; d < dim; ++d) {
    const double u = (x[d] - y[d]) * std::exp(-params.log_lengthscales[d]);
    scratch[d] = u * u;
    r2 += scratch[d];
  }
  const double k = params.outputscale() * std::exp(-0.5 * r2);
  const double wk = weight * k;
  // dk/dlog l_d = k u_d^2, dk/dlog s^2 = k
  for (int d = 0; d < dim; ++d) grad[d] += wk * scratch[d];
  grad[dim] += wk;
  return k;
}

Covariance::Covariance(KernelSpec spec, KernelParams params)
    : spec_(spec), params_(std::move(params)) {
  if (params_.dim() != spec_.base_dim)
    throw DimensionError("kernel params dimension does not match kernel base dimension");
}

void Covariance::check_dims(std::size_t a, std::size_t b) const {
  const auto want = static_cast<std::size_t>(spec_.point_dim());
  if (a != want || b != want)
    throw DimensionError("covariance input dimension " + std::to_string(a) + "/" +
                         std::to_string(b) + " expected " + std::to_string(want));
}

double Covariance::operator()(std::span<const double> x, std::span<const double> y) const {
  check_dims(x.size(), y.size());
  if (spec_.kind == KernelKind::rbf) return rbf_ard(x, y, params_);
  const std::size_t d = static_cast<std::size_t>(spec_.base_dim);
  auto x1 = x.subspan(0, d), x2 = x.subspan(d, d);
  auto y1 = y.subspan(0, d), y2 = y.subspan(d, d);
  // grouped so identical stimuli on either side cancel exactly
  return (rbf_ard(x1, y1, params_) - rbf_ard(x2, y1, params_)) -
         (rbf_ard(x1, y2, params_) - rbf_ard(x2, y2, params_));
}

double Covariance::accumulate(std::span<const double> x, std::span<const double> y, double weight,
                              Vector& grad) const {
  check_dims(x.size(), y.size());
  if (spec_.kind == KernelKind::rbf) return rbf_ard_accumulate(x, y, params_, weight, grad);
  const std::size_t d = static_cast<std::size_t>(spec_.base_dim);
  auto x1 = x.subspan(0, d), x2 = x.subspan(d, d);
  auto y1 = y.subspan(0, d), y2 = y.subspan(d, d);
  return rbf_ard_accumulate(x1, y1, params_, weight, grad) -
         rbf_ard_accumulate(x1, y2, params_, -weight, grad) -
         rbf_ard_accumulate(x2, y1, params_, -weight, grad) +
         rbf_ard_accumulate(x2, y2, params_, weight, grad);
}

namespace {

// Coordinates divided by their lengthscales; pair points scale both halves.
Points scaled(const Points& X, const KernelParams& params) {
  const Eigen::Index d = params.dim();
  const Eigen::RowVectorXd inv = (-params.log_lengthscales.array()).exp().transpose();
  Points U(X.rows(), X.cols());
  for (Eigen::Index off = 0; off < X.cols(); off += d)
    U.middleCols(off, d) = X.middleCols(off, d).array().rowwise() * inv.array();
  return U;
}

inline double sqdist(const double* u, const double* v, Eigen::Index d) {
  double r2 = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double t = u[k] - v[k];
    r2 += t * t;
  }
  return r2;
}

}  // namespace

Matrix Covariance::cross(const Points& X, const Points& Y) const {
  check_dims(X.cols(), Y.cols());
  const Points U = scaled(X, params_), V = scaled(Y, params_);
  const Eigen::Index d = spec_.base_dim;
  const double s2 = params_.outputscale();
  Matrix K(X.rows(), Y.rows());
  if (spec_.kind == KernelKind::rbf) {
    for (Eigen::Index j = 0; j < V.rows(); ++j) {
      const double* v = V.data() + j * V.cols();
      for (Eigen::Index i = 0; i < U.rows(); ++i)
        K(i, j) = s2 * std::exp(-0.5 * sqdist(U.data() + i * U.cols(), v, d));
    }
    return K;
  }
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    const double* v1 = V.data() + j * V.cols();
    const double* v2 = v1 + d;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double* u1 = U.data() + i * U.cols();
      const double* u2 = u1 + d;
      K(i, j) = s2 * (std::exp(-0.5 * sqdist(u1, v1, d)) - std::exp(-0.5 * sqdist(u1, v2, d)) -
                      std::exp(-0.5 * sqdist(u2, v1, d)) + std::exp(-0.5 * sqdist(u2, v2, d)));
    }
  }
  return K;
}

Matrix Covariance::gram(const Points& X) const { return cross(X, X); }

Vector Covariance::diag(const Points& X) const {
  check_dims(X.cols(), X.cols());
  Vector k(X.rows());
  if (spec_.kind == KernelKind::rbf) {
    k.setConstant(params_.outputscale());
    return k;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) k[i] = (*this)(row_span(X, i), row_span(X, i));
  return k;
}

void Covariance::accumulate_cross(const Points& X, const Points& Y, const Matrix& weights,
                                  Vector& grad) const {
  check_dims(X.cols(), Y.cols());
  const Points U = scaled(X, params_), V = scaled(Y, params_);
  const Eigen::Index d = spec_.base_dim;
  const double s2 = params_.outputscale();
  // One RBF term: w k(u, v) contributes w k (u_d - v_d)^2 to dlog l_d and w k to dlog s^2.
  auto term = [&](const double* u, const double* v, double w) {
    const double k = s2 * std::exp(-0.5 * sqdist(u, v, d));
    const double wk = w * k;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double t = u[c] - v[c];
      grad[c] += wk * t * t;
    }
    grad[d] += wk;
  };
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    const double* v1 = V.data() + j * V.cols();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      const double* u1 = U.data() + i * U.cols();
      if (spec_.kind == KernelKind::rbf) {
        term(u1, v1, w);
      } else {
        term(u1, v1, w);
        term(u1, v1 + d, -w);
        term(u1 + d, v1, -w);
        term(u1 + d, v1 + d, w);
      }
    }
  }
}

void Covariance::accumulate_diag(const Points& X, const Vector& weights, Vector& grad) const {
  check_dims(X.cols(), X.cols());
  if (spec_.kind == KernelKind::rbf) {
    grad[params_.dim()] += weights.sum() * params_.outputscale();
    return;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (weights[i] != 0.0) accumulate(row_span(X, i), row_span(X, i), weights[i], grad);
}

}  // namespace mixgp
