#include "mixgp/svgp.hpp"

#include "mixgp/numerics/normal.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mixgp {

// ---------------------------------------------------------------- priors

double HyperPriors::log_prob(const KernelParams& params, Vector* grad) const {
  if (!enabled) return 0.0;
  const int d = params.dim();
  double lp = 0.0;

  // smoothed box: -softplus(k(s - hi))^2 - softplus(k(lo - s))^2
  const double s = params.outputscale();
  const double a = box_sharpness * (s - outputscale_upper);
  const double b = box_sharpness * (outputscale_lower - s);
  const double spa = softplus(a), spb = softplus(b);
  lp += -spa * spa - spb * spb;
  if (grad) {
    const double ds = -2.0 * spa * sigmoid(a) * box_sharpness + 2.0 * spb * sigmoid(b) * box_sharpness;
    (*grad)[d] += ds * s;
  }

  const double norm = lengthscale_shape * std::log(lengthscale_rate) - std::lgamma(lengthscale_shape);
  for (int i = 0; i < d; ++i) {
    const double l = params.lengthscale(i);
    lp += norm + (lengthscale_shape - 1.0) * params.log_lengthscales[i] - lengthscale_rate * l;
    if (grad) (*grad)[i] += (lengthscale_shape - 1.0) - lengthscale_rate * l;
  }
  return lp;
}

// ---------------------------------------------------------------- transform

InputTransform InputTransform::to_unit_cube(const Box& box) {
  return InputTransform{box.lower, box.upper - box.lower};
}

Points InputTransform::apply(const Points& X) const {
  if (identity()) return X;
  const Eigen::Index d = offset.size();
  if (X.cols() % d != 0) throw DimensionError("input transform dimension mismatch");
  Points out(X.rows(), X.cols());
  for (Eigen::Index off = 0; off < X.cols(); off += d)
    out.middleCols(off, d) =
        (X.middleCols(off, d).rowwise() - offset.transpose()).array().rowwise() /
        scale.transpose().array();
  return out;
}

// ---------------------------------------------------------------- model

VariationalGP::VariationalGP(KernelSpec spec, KernelParams params, Points Z, MeanMode mode,
                             double mean)
    : kernel_spec(spec), kernel(std::move(params)), inducing(std::move(Z)), mean_mode(mode),
      mean_value(mean) {
  reset_variational();
  validate();
}

void VariationalGP::reset_variational() {
  m_white = Vector::Zero(inducing.rows());
  L_white = Matrix::Identity(inducing.rows(), inducing.rows());
}

void VariationalGP::validate() const {
  if (kernel.dim() != kernel_spec.base_dim) throw DimensionError("kernel dimension mismatch");
  if (inducing.rows() < 1) throw std::invalid_argument("model needs at least one inducing point");
  if (inducing.cols() != kernel_spec.point_dim()) throw DimensionError("inducing point dimension mismatch");
  const Eigen::Index m = inducing.rows();
  if (m_white.size() != m || L_white.rows() != m || L_white.cols() != m)
    throw DimensionError("variational parameter shape mismatch");
  if (!(L_white.diagonal().array() > 0.0).all())
    throw std::invalid_argument("variational scale must have a positive diagonal");
  if (!transform.identity() &&
      (transform.offset.size() != kernel_spec.base_dim || transform.scale.size() != kernel_spec.base_dim))
    throw DimensionError("input transform dimension mismatch");
}

// ---------------------------------------------------------------- posterior

Posterior::Posterior(VariationalGP model)
    : model_(std::move(model)), cov_(model_.covariance()), Zt_(model_.transform.apply(model_.inducing)),
      chol_(cov_.gram(Zt_), model_.jitter) {
  alpha_ = chol_.solve_upper(model_.m_white);
}

Posterior::Projection Posterior::project(const Points& X) const {
  Projection p;
  p.Xt = model_.transform.apply(X);
  p.A = chol_.solve_lower(cov_.cross(Zt_, p.Xt));
  p.B = model_.L_white.transpose().triangularView<Eigen::Upper>() * p.A;
  p.prior_var = cov_.diag(p.Xt);
  return p;
}

Marginals Posterior::marginals(const Projection& p) const {
  Marginals out;
  out.mean = (p.A.transpose() * model_.m_white).array() + model_.mean_constant();
  out.var = p.prior_var - p.A.colwise().squaredNorm().transpose() + p.B.colwise().squaredNorm().transpose();
  out.var = out.var.cwiseMax(0.0);
  return out;
}

Marginals Posterior::marginals(const Points& X, bool full_cov) const {
  const Projection p = project(X);
  Marginals out = marginals(p);
  if (full_cov) out.cov = cross_cov(p, p);
  return out;
}

Vector Posterior::mean(const Points& X) const {
  const Points Xt = model_.transform.apply(X);
  return (cov_.cross(Xt, Zt_) * alpha_).array() + model_.mean_constant();
}

Matrix Posterior::cross_cov(const Projection& p1, const Projection& p2) const {
  return cov_.cross(p1.Xt, p2.Xt) - p1.A.transpose() * p2.A + p1.B.transpose() * p2.B;
}

Marginals latent_marginals(const VariationalGP& model, const Points& X, bool full_cov) {
  return Posterior(model).marginals(X, full_cov);
}

double kl_whitened(const Vector& m, const Matrix& L) {
  if (L.rows() != m.size() || L.cols() != m.size()) throw DimensionError("kl_whitened: shape mismatch");
  const Matrix Lt = L.triangularView<Eigen::Lower>();
  return 0.5 * (m.squaredNorm() + Lt.squaredNorm() - static_cast<double>(m.size()) -
                2.0 * L.diagonal().array().log().sum());
}

// ---------------------------------------------------------------- elbo

double ElboTerms::likelihood_total() const {
  return std::accumulate(expected_log_lik.begin(), expected_log_lik.end(), 0.0);
}

ElboTerms elbo_terms(const VariationalGP& model, std::span<const ObservationBlock> blocks,
                     const HyperPriors& priors, const GaussHermite& quad, ElboGradient* grad) {
  model.validate();
  const Covariance cov = model.covariance();
  const Eigen::Index m = model.num_inducing();
  const Eigen::Index pd = model.kernel_spec.point_dim();

  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    b.validate(model.likert ? model.likert->options() : 0);
    if (b.size() > 0 && b.X.cols() != pd) throw DimensionError("observation dimension mismatch");
    if (b.kind == LikelihoodKind::likert && b.size() > 0 && !model.likert)
      throw std::invalid_argument("likert block requires a model with a likert likelihood");
    n += b.size();
  }
  Points X(n, pd);
  {
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      if (b.size() == 0) continue;
      X.middleRows(off, b.size()) = b.X;
      off += b.size();
    }
  }
  const Points Xt = model.transform.apply(X);
  const Points Zt = model.transform.apply(model.inducing);

  const Matrix Kuu = cov.gram(Zt);
  const Cholesky chol(Kuu, model.jitter);
  const Matrix& Luu = chol.lower();
  const auto Lw = model.L_white.triangularView<Eigen::Lower>();

  const Matrix A = chol.solve_lower(cov.cross(Zt, Xt));  // m x n
  const Matrix B = model.L_white.transpose().triangularView<Eigen::Upper>() * A;
  const Vector kxx = cov.diag(Xt);
  const Vector mean = (A.transpose() * model.m_white).array() + model.mean_constant();
  Vector var = kxx - A.colwise().squaredNorm().transpose() + B.colwise().squaredNorm().transpose();
  std::vector<bool> clamped(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (var[i] < 0.0) {
      var[i] = 0.0;
      clamped[static_cast<std::size_t>(i)] = true;
    }
  }

  ElboTerms terms;
  const LikelihoodContext ctx{&quad, model.likert ? &*model.likert : nullptr};
  Vector g = Vector::Zero(n), h = Vector::Zero(n);
  Vector d_likert = model.likert ? Vector::Zero(model.likert->options() - 1) : Vector();
  {
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      const Eigen::Index nb = b.size();
      BlockGradient bg;
      terms.expected_log_lik.push_back(expected_log_lik(b, mean.segment(off, nb), var.segment(off, nb),
                                                        ctx, grad ? &bg : nullptr));
      if (grad && nb > 0) {
        g.segment(off, nb) = bg.d_mean;
        h.segment(off, nb) = bg.d_var;
        if (b.kind == LikelihoodKind::likert) d_likert += bg.d_likert_raw;
      }
      off += nb;
    }
  }
  terms.kl = kl_whitened(model.m_white, model.L_white);
  if (grad) grad->d_log_kernel = Vector::Zero(model.kernel.size());
  terms.log_prior = priors.log_prob(model.kernel, grad ? &grad->d_log_kernel : nullptr);
  if (!grad) return terms;

  for (Eigen::Index i = 0; i < n; ++i)
    if (clamped[static_cast<std::size_t>(i)]) h[i] = 0.0;

  // variational parameters
  grad->d_mean = model.mean_mode == MeanMode::zero ? 0.0 : g.sum();
  grad->d_m_white = A * g - model.m_white;
  const Matrix Ah = A * h.asDiagonal();
  Matrix dL = 2.0 * Ah * B.transpose();
  dL -= Matrix(Lw);
  dL.diagonal() += model.L_white.diagonal().cwiseInverse();
  grad->d_L_white = dL.triangularView<Eigen::Lower>();
  grad->d_likert_raw = d_likert;

  // kernel hyperparameters: A = L_uu^{-1} K_uX, var uses diag K_XX
  const Matrix A_bar = model.m_white * g.transpose() + 2.0 * (Lw * B - A) * h.asDiagonal();
  const Matrix C = chol.solve_upper(A_bar);  // dE/dK_uX
  Matrix L_bar = -C * A.transpose();
  Matrix K_bar = cholesky_backward(Luu, L_bar);
  // jitter = c * trace(K_uu) / m rides along with K_uu
  K_bar.diagonal().array() += chol.jitter_factor() / static_cast<double>(m) * K_bar.trace();

  cov.accumulate_cross(Zt, Zt, K_bar, grad->d_log_kernel);
  cov.accumulate_cross(Zt, Xt, C, grad->d_log_kernel);
  cov.accumulate_diag(Xt, h, grad->d_log_kernel);
  return terms;
}

double elbo(const VariationalGP& model, std::span<const ObservationBlock> blocks,
            const HyperPriors& priors, const GaussHermite& quad) {
  return elbo_terms(model, blocks, priors, quad).value();
}

// ---------------------------------------------------------------- parameters

ParameterLayout::ParameterLayout(const VariationalGP& model, TrainableSet trainable)
    : trainable_(trainable), mean_(model.mean_mode == MeanMode::learned_constant),
      m_(model.num_inducing()) {
  Eigen::Index off = 0;
  if (trainable_.kernel) {
    kernel_off_ = off;
    kernel_n_ = model.kernel.size();
    off += kernel_n_;
  }
  if (mean_) mean_off_ = off++;
  if (trainable_.variational) {
    mvec_off_ = off;
    off += m_;
    lmat_off_ = off;
    off += m_ * (m_ + 1) / 2;
  }
  if (trainable_.likert && model.likert) {
    likert_off_ = off;
    likert_n_ = model.likert->options() - 1;
    off += likert_n_;
  }
  size_ = off;
}

Vector ParameterLayout::pack(const VariationalGP& model) const {
  Vector theta(size_);
  if (kernel_off_ >= 0) {
    theta.segment(kernel_off_, kernel_n_ - 1) = model.kernel.log_lengthscales;
    theta[kernel_off_ + kernel_n_ - 1] = model.kernel.log_outputscale;
  }
  if (mean_off_ >= 0) theta[mean_off_] = model.mean_value;
  if (mvec_off_ >= 0) {
    theta.segment(mvec_off_, m_) = model.m_white;
    Eigen::Index k = lmat_off_;
    for (Eigen::Index j = 0; j < m_; ++j) {
      theta[k++] = std::log(model.L_white(j, j));
      for (Eigen::Index i = j + 1; i < m_; ++i) theta[k++] = model.L_white(i, j);
    }
  }
  if (likert_off_ >= 0) theta.segment(likert_off_, likert_n_) = model.likert->raw();
  return theta;
}

void ParameterLayout::unpack(const Vector& theta, VariationalGP& model) const {
  if (theta.size() != size_) throw DimensionError("parameter vector size mismatch");
  if (kernel_off_ >= 0) {
    model.kernel.log_lengthscales = theta.segment(kernel_off_, kernel_n_ - 1);
    model.kernel.log_outputscale = theta[kernel_off_ + kernel_n_ - 1];
  }
  if (mean_off_ >= 0) model.mean_value = theta[mean_off_];
  if (mvec_off_ >= 0) {
    model.m_white = theta.segment(mvec_off_, m_);
    Eigen::Index k = lmat_off_;
    for (Eigen::Index j = 0; j < m_; ++j) {
      model.L_white(j, j) = std::exp(theta[k++]);
      for (Eigen::Index i = j + 1; i < m_; ++i) model.L_white(i, j) = theta[k++];
    }
  }
  if (likert_off_ >= 0) model.likert->set_raw(theta.segment(likert_off_, likert_n_));
}

Vector ParameterLayout::pack_gradient(const VariationalGP& model, const ElboGradient& grad) const {
  Vector out(size_);
  if (kernel_off_ >= 0) out.segment(kernel_off_, kernel_n_) = grad.d_log_kernel;
  if (mean_off_ >= 0) out[mean_off_] = grad.d_mean;
  if (mvec_off_ >= 0) {
    out.segment(mvec_off_, m_) = grad.d_m_white;
    Eigen::Index k = lmat_off_;
    for (Eigen::Index j = 0; j < m_; ++j) {
      out[k++] = grad.d_L_white(j, j) * model.L_white(j, j);
      for (Eigen::Index i = j + 1; i < m_; ++i) out[k++] = grad.d_L_white(i, j);
    }
  }
  if (likert_off_ >= 0) out.segment(likert_off_, likert_n_) = grad.d_likert_raw;
  return out;
}

// ---------------------------------------------------------------- fit

FitResult fit(VariationalGP& model, std::span<const ObservationBlock> blocks,
              const HyperPriors& priors, const FitOptions& options) {
  if (blocks.empty()) throw std::invalid_argument("fit: at least one observation block required");
  model.validate();
  const GaussHermite quad(options.quadrature_order);
  const ParameterLayout layout(model, options.trainable);
  Vector theta = layout.pack(model);
  AdamState state;
  state.reset(theta.size());

  FitResult result;
  result.elbo_trace.reserve(static_cast<std::size_t>(options.iterations) + 1);
  const int T = options.iterations;
  const int decay_from = static_cast<int>(options.decay_start * T);
  VariationalGP trial = model;
  // input errors surface here, before any parameter has moved
  elbo_terms(trial, blocks, priors, quad);
  const auto diverged = [](int it, const std::string& what) {
    return TrainingDivergence(it, "fit diverged: " + what);
  };
  const auto evaluate = [&](int it, ElboGradient* grad) {
    double value;
    try {
      value = elbo_terms(trial, blocks, priors, quad, grad).value();
    } catch (const std::exception& e) {
      throw diverged(it, e.what());
    }
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "ELBO became non-finite at iteration " << it;
      throw TrainingDivergence(it, msg.str());
    }
    return value;
  };
  const auto load = [&](int it, const Vector& params) {
    try {
      layout.unpack(params, trial);
    } catch (const std::exception& e) {
      throw diverged(it, e.what());
    }
  };

  // last accepted point (monotone mode)
  Vector kept_theta;
  Vector kept_grad;
  AdamState kept_state;
  double kept_value = -std::numeric_limits<double>::infinity();
  double backoff = 1.0;

  for (int it = 0; it < T; ++it) {
    ElboGradient grad;
    double value = evaluate(it, &grad);
    Vector g = layout.pack_gradient(trial, grad);
    if (!g.allFinite()) {
      std::ostringstream msg;
      msg << "ELBO gradient became non-finite at iteration " << it;
      throw TrainingDivergence(it, msg.str());
    }
    if (options.monotone) {
      if (value < kept_value) {
        theta = kept_theta;
        state = kept_state;
        g = kept_grad;
        value = kept_value;
        load(it, theta);
        backoff *= 0.5;
      } else {
        kept_theta = theta;
        kept_state = state;
        kept_grad = g;
        kept_value = value;
        backoff = std::min(1.0, backoff * 1.25);
      }
    }
    result.elbo_trace.push_back(value);
    double scale = 1.0;
    if (it >= decay_from && T > decay_from) {
      const double frac = static_cast<double>(it - decay_from) / static_cast<double>(T - decay_from);
      scale = 1.0 - (1.0 - options.final_lr_fraction) * frac;
    }
    Vector neg = -g;
    adam_step(theta, neg, state, options.adam, scale * backoff);
    load(it, theta);
  }
  result.final_elbo = evaluate(T, nullptr);
  if (options.monotone && T > 0 && result.final_elbo < kept_value) {
    load(T, kept_theta);
    result.final_elbo = kept_value;
  }
  result.elbo_trace.push_back(result.final_elbo);
  model = std::move(trial);
  return result;
}

// ---------------------------------------------------------------- exact GP

ExactPosterior exact_gp_posterior(const Points& X, const Vector& y, const Vector& noise_sd,
                                  const Covariance& cov, const Points& X_star, double prior_mean) {
  if (X.rows() != y.size() || noise_sd.size() != y.size())
    throw DimensionError("exact_gp_posterior: X, y and noise_sd must have matching rows");
  ExactPosterior out;
  const Matrix Kss = cov.gram(X_star);
  if (X.rows() == 0) {
    out.mean = Vector::Constant(X_star.rows(), prior_mean);
    out.cov = Kss;
    out.log_marginal_likelihood = 0.0;
    return out;
  }
  Matrix K = cov.gram(X);
  K.diagonal() += noise_sd.cwiseAbs2();
  const Cholesky chol(K, kExactFirst);
  const Vector r = y.array() - prior_mean;
  const Vector alpha = chol.solve(r);
  const Matrix Ksx = cov.cross(X_star, X);
  out.mean = (Ksx * alpha).array() + prior_mean;
  const Matrix V = chol.solve_lower(Matrix(Ksx.transpose()));
  out.cov = Kss - V.transpose() * V;
  out.log_marginal_likelihood = -0.5 * r.dot(alpha) - 0.5 * chol.log_det() -
                                static_cast<double>(y.size()) * kLogSqrt2Pi;
  return out;
}

}  // namespace mixgp
