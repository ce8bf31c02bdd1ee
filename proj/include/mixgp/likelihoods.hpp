#pragma once

#include "mixgp/numerics/quadrature.hpp"
#include "mixgp/numerics/types.hpp"

#include <string>
#include <string_view>

namespace mixgp {

double gaussian_log_lik(double y, double f, double sigma);
double bernoulli_probit_log_lik(int y, double f);

/// Distance-to-interval softmax over preference strength with lapse damping.
///
/// Cut points satisfy 0 = c_1 < c_2 < ... < c_l. The increments are stored as
/// unconstrained reals theta_i with c_{i+1} - c_i = 2 sigmoid(theta_i), so every
/// gap lies in (0, 2) for any theta. Option i owns [c_i, c_{i+1}) with
/// c_{l+1} = inf.
class LikertLikelihood {
public:
  static constexpr double max_gap = 2.0;
  static constexpr double default_lapse = 0.1;

  LikertLikelihood() : LikertLikelihood(3) {}
  // Equally spaced cut points c_i = 2(i-1)/l.
  explicit LikertLikelihood(int options, double lapse = default_lapse);

  static LikertLikelihood from_cut_points(const Vector& cuts, double lapse = default_lapse);
  static LikertLikelihood from_raw(const Vector& raw, double lapse = default_lapse);

  int options() const { return options_; }
  double lapse() const { return lapse_; }
  void set_lapse(double lapse);

  const Vector& raw() const { return raw_; }
  void set_raw(const Vector& raw);

  Vector increments() const;
  Vector cut_points() const;

  /// Probabilities of options 0..l-1 at strength g >= 0.
  Vector probs(double strength) const;

  /// log Pr(y | strength); y is a 0-based option index. Optionally returns the
  /// derivative w.r.t. strength and accumulates d/d raw into `d_raw`.
  double log_prob(int y, double strength, double* d_strength = nullptr,
                  Vector* d_raw = nullptr, double weight = 1.0) const;

private:
  int options_;
  double lapse_;
  Vector raw_;
};

/// Confidence on the 1..9 scale collapsed to 0..2: {1,2,3}->0, {4,5,6}->1, {7,8,9}->2.
int map_raw_likert(int raw);

enum class LikelihoodKind { gaussian, bernoulli, likert };

std::string_view to_string(LikelihoodKind kind);
LikelihoodKind likelihood_kind_from_string(std::string_view name);

/// One data type's inputs and targets. Likert rows hold 0-based option indices
/// and are evaluated on the pair latent f(x1) - f(x2).
struct ObservationBlock {
  LikelihoodKind kind = LikelihoodKind::bernoulli;
  Points X;
  Vector y;
  Vector noise_sd;  // gaussian blocks only

  static ObservationBlock gaussian(Points X, Vector y, Vector noise_sd);
  static ObservationBlock bernoulli(Points X, Vector y);
  static ObservationBlock likert(Points X, Vector y);

  Eigen::Index size() const { return y.size(); }
  bool empty() const { return y.size() == 0; }
  // Throws std::invalid_argument on shape or target inconsistencies.
  void validate(int likert_options = 0) const;
};

struct LikelihoodContext {
  const GaussHermite* quadrature = nullptr;
  const LikertLikelihood* likert = nullptr;
};

/// Gradient of a block's expected log-likelihood w.r.t. its marginals and the
/// Likert raw parameters.
struct BlockGradient {
  Vector d_mean;
  Vector d_var;
  Vector d_likert_raw;
};

/// sum_i E_{N(mean_i, var_i)} log p(y_i | f). Gaussian blocks use the closed
/// form; the others use Gauss-Hermite quadrature.
double expected_log_lik(const ObservationBlock& block, const Vector& mean, const Vector& var,
                        const LikelihoodContext& ctx, BlockGradient* grad = nullptr);

/// Quadrature path for a Gaussian block; used to cross-check the closed form.
double gaussian_expected_log_lik_quadrature(const ObservationBlock& block, const Vector& mean,
                                            const Vector& var, const GaussHermite& quad);

}  // namespace mixgp
