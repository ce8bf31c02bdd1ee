#pragma once

#include "mixgp/numerics/types.hpp"

#include <span>

namespace mixgp {

/// RBF-ARD hyperparameters, held in log space.
struct KernelParams {
  Vector log_lengthscales;
  double log_outputscale = 0.0;

  KernelParams() = default;
  KernelParams(const Vector& lengthscales, double outputscale);

  static KernelParams isotropic(int dim, double lengthscale, double outputscale);

  int dim() const { return static_cast<int>(log_lengthscales.size()); }
  double lengthscale(int d) const { return std::exp(log_lengthscales[d]); }
  Vector lengthscales() const { return log_lengthscales.array().exp(); }
  double outputscale() const { return std::exp(log_outputscale); }
  // Number of log-space parameters: one per lengthscale plus the outputscale.
  int size() const { return dim() + 1; }
};

/// s^2 exp(-1/2 sum_d (x_d - x'_d)^2 / l_d^2)
double rbf_ard(std::span<const double> x, std::span<const double> y, const KernelParams& params);

/// rbf_ard plus its gradient w.r.t. (log l_1..log l_d, log s^2), scaled by
/// `weight` and accumulated into `grad`.
double rbf_ard_accumulate(std::span<const double> x, std::span<const double> y,
                          const KernelParams& params, double weight, Vector& grad);

enum class KernelKind {
  rbf,
  // Points are concatenated pairs [x1, x2]; the covariance is that of the
  // latent difference f(x1) - f(x2) under an RBF-ARD base process.
  preference,
};

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  int base_dim = 1;

  int point_dim() const { return kind == KernelKind::preference ? 2 * base_dim : base_dim; }
};

class Covariance {
public:
  Covariance() = default;
  Covariance(KernelSpec spec, KernelParams params);

  const KernelSpec& spec() const { return spec_; }
  const KernelParams& params() const { return params_; }
  KernelParams& params() { return params_; }

  double operator()(std::span<const double> x, std::span<const double> y) const;
  double accumulate(std::span<const double> x, std::span<const double> y, double weight,
                    Vector& grad) const;

  // Rows of X against rows of Y.
  Matrix cross(const Points& X, const Points& Y) const;
  Matrix gram(const Points& X) const;
  Vector diag(const Points& X) const;

  // Adds sum_ij weights(i,j) dK(X_i, Y_j)/dtheta into grad.
  void accumulate_cross(const Points& X, const Points& Y, const Matrix& weights, Vector& grad) const;
  void accumulate_diag(const Points& X, const Vector& weights, Vector& grad) const;

private:
  void check_dims(std::size_t a, std::size_t b) const;

  KernelSpec spec_;
  KernelParams params_;
};

}  // namespace mixgp
