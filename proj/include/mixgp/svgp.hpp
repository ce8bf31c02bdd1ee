#pragma once

#include "mixgp/likelihoods.hpp"
#include "mixgp/numerics/adam.hpp"
#include "mixgp/numerics/kernel.hpp"
#include "mixgp/numerics/linalg.hpp"
#include "mixgp/numerics/quadrature.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mixgp {

enum class MeanMode {
  zero,
  // constant value held fixed during training
  fixed_constant,
  learned_constant,
};

/// Smoothed box on the outputscale and Gamma(shape, rate) on each lengthscale.
struct HyperPriors {
  bool enabled = true;
  double outputscale_lower = 1.0;
  double outputscale_upper = 4.0;
  double box_sharpness = 10.0;
  double lengthscale_shape = 3.0;
  double lengthscale_rate = 6.0;

  static HyperPriors none() { return HyperPriors{.enabled = false}; }

  /// Log density; accumulates the gradient w.r.t. the log parameters when asked.
  double log_prob(const KernelParams& params, Vector* grad = nullptr) const;
};

/// Affine input map x -> (x - offset) / scale applied before the kernel.
/// Empty vectors mean identity. For pair kernels offset/scale have the base
/// dimension and apply to each half.
struct InputTransform {
  Vector offset;
  Vector scale;

  static InputTransform to_unit_cube(const Box& box);
  bool identity() const { return offset.size() == 0; }
  Points apply(const Points& X) const;
};

/// Sparse variational GP in whitened coordinates: u = L_uu v, q(v) = N(m', L' L'^T).
struct VariationalGP {
  KernelSpec kernel_spec;
  KernelParams kernel;
  Points inducing;
  Vector m_white;
  Matrix L_white;
  MeanMode mean_mode = MeanMode::zero;
  double mean_value = 0.0;
  std::optional<LikertLikelihood> likert;
  JitterPolicy jitter;
  InputTransform transform;

  VariationalGP() = default;
  VariationalGP(KernelSpec spec, KernelParams params, Points Z, MeanMode mode = MeanMode::zero,
                double mean = 0.0);

  Eigen::Index num_inducing() const { return inducing.rows(); }
  Covariance covariance() const { return Covariance(kernel_spec, kernel); }
  double mean_constant() const { return mean_mode == MeanMode::zero ? 0.0 : mean_value; }
  // q(u) = p(u): m' = 0, L' = I
  void reset_variational();
  void validate() const;
};

struct Marginals {
  Vector mean;
  Vector var;
  std::optional<Matrix> cov;
};

/// Prediction cache for a fixed model snapshot.
class Posterior {
public:
  explicit Posterior(VariationalGP model);

  const VariationalGP& model() const { return model_; }
  Eigen::Index num_inducing() const { return model_.num_inducing(); }

  Marginals marginals(const Points& X, bool full_cov = false) const;
  Vector mean(const Points& X) const;

  /// Whitened projections of X (already transformed): A = L_uu^{-1} K_uX and B = L'^T A.
  struct Projection {
    Points Xt;
    Matrix A;
    Matrix B;
    Vector prior_var;
  };
  Projection project(const Points& X) const;
  Marginals marginals(const Projection& p) const;
  /// Cov_q(f(X1), f(X2)) from two projections.
  Matrix cross_cov(const Projection& p1, const Projection& p2) const;

private:
  VariationalGP model_;
  Covariance cov_;
  Points Zt_;
  Cholesky chol_;
  Vector alpha_;  // L_uu^{-T} m'
};

Marginals latent_marginals(const VariationalGP& model, const Points& X, bool full_cov = false);

/// KL(N(m, L L^T) || N(0, I)).
double kl_whitened(const Vector& m, const Matrix& L);

struct ElboGradient {
  Vector d_log_kernel;  // (log l_1..log l_d, log s^2)
  double d_mean = 0.0;
  Vector d_m_white;
  Matrix d_L_white;  // w.r.t. entries of L' (lower triangle)
  Vector d_likert_raw;
};

struct ElboTerms {
  std::vector<double> expected_log_lik;  // per block
  double kl = 0.0;
  double log_prior = 0.0;

  double likelihood_total() const;
  double value() const { return likelihood_total() - kl + log_prior; }
};

ElboTerms elbo_terms(const VariationalGP& model, std::span<const ObservationBlock> blocks,
                     const HyperPriors& priors, const GaussHermite& quad,
                     ElboGradient* grad = nullptr);

double elbo(const VariationalGP& model, std::span<const ObservationBlock> blocks,
            const HyperPriors& priors, const GaussHermite& quad = GaussHermite());

/// Which parameter groups are optimized.
struct TrainableSet {
  bool kernel = true;
  bool variational = true;
  bool likert = true;
  // The constant mean is trained only when the model's mean mode is learned_constant.
};

/// Flattens the trainable parameters of a model into one vector. The diagonal
/// of L' is stored as its logarithm.
class ParameterLayout {
public:
  ParameterLayout(const VariationalGP& model, TrainableSet trainable);

  Eigen::Index size() const { return size_; }
  Vector pack(const VariationalGP& model) const;
  void unpack(const Vector& theta, VariationalGP& model) const;
  Vector pack_gradient(const VariationalGP& model, const ElboGradient& grad) const;

private:
  TrainableSet trainable_;
  bool mean_ = false;
  Eigen::Index m_ = 0;
  Eigen::Index kernel_off_ = -1, mean_off_ = -1, mvec_off_ = -1, lmat_off_ = -1, likert_off_ = -1;
  Eigen::Index kernel_n_ = 0, likert_n_ = 0;
  Eigen::Index size_ = 0;
};

struct FitOptions {
  int iterations = 1000;
  AdamConfig adam;
  TrainableSet trainable;
  int quadrature_order = GaussHermite::default_order;
  // Learning rate is constant until this fraction of the run, then decays
  // linearly to final_lr_fraction * lr.
  double decay_start = 0.5;
  double final_lr_fraction = 0.02;
  // Undo any step that lowers the ELBO and halve the step size; the trace is
  // then nondecreasing.
  bool monotone = false;
};

class TrainingDivergence : public std::runtime_error {
public:
  TrainingDivergence(int iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

private:
  int iteration_;
};

struct FitResult {
  std::vector<double> elbo_trace;
  double final_elbo = 0.0;
};

/// Maximizes the ELBO jointly over the selected parameter groups. The model is
/// updated in place and also warm-starts from its current state.
FitResult fit(VariationalGP& model, std::span<const ObservationBlock> blocks,
              const HyperPriors& priors, const FitOptions& options = {});

struct ExactPosterior {
  Vector mean;
  Matrix cov;
  double log_marginal_likelihood = 0.0;
};

/// Closed-form GP regression with per-point noise sd (Kriging equations).
ExactPosterior exact_gp_posterior(const Points& X, const Vector& y, const Vector& noise_sd,
                                  const Covariance& cov, const Points& X_star,
                                  double prior_mean = 0.0);

}  // namespace mixgp
