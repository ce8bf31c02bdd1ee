#include "mixgp/likelihoods.hpp"

#include "mixgp/numerics/normal.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mixgp {

double gaussian_log_lik(double y, double f, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_log_lik: sigma must be positive");
  const double r = (y - f) / sigma;
  return -kLogSqrt2Pi - std::log(sigma) - 0.5 * r * r;
}

double bernoulli_probit_log_lik(int y, double f) {
  return log_normal_cdf(y == 1 ? f : -f);
}

// ---------------------------------------------------------------- Likert

LikertLikelihood::LikertLikelihood(int options, double lapse) : options_(options), lapse_(0.0) {
  if (options < 2) throw std::invalid_argument("likert likelihood needs at least two options");
  set_lapse(lapse);
  // gap 2/l = 2 sigmoid(theta) -> theta = logit(1/l)
  raw_ = Vector::Constant(options - 1, logit(1.0 / options));
}

LikertLikelihood LikertLikelihood::from_cut_points(const Vector& cuts, double lapse) {
  if (cuts.size() < 2) throw std::invalid_argument("likert likelihood needs at least two cut points");
  if (cuts[0] != 0.0) throw std::invalid_argument("first cut point must be 0");
  Vector raw(cuts.size() - 1);
  for (Eigen::Index i = 0; i + 1 < cuts.size(); ++i) {
    const double gap = cuts[i + 1] - cuts[i];
    if (!(gap > 0.0 && gap < max_gap))
      throw std::invalid_argument("cut point gaps must lie in (0, 2)");
    raw[i] = logit(gap / max_gap);
  }
  return from_raw(raw, lapse);
}

LikertLikelihood LikertLikelihood::from_raw(const Vector& raw, double lapse) {
  LikertLikelihood lik(static_cast<int>(raw.size()) + 1, lapse);
  lik.set_raw(raw);
  return lik;
}

void LikertLikelihood::set_lapse(double lapse) {
  if (!(lapse >= 0.0 && lapse < 1.0)) throw std::invalid_argument("lapse rate must lie in [0, 1)");
  lapse_ = lapse;
}

void LikertLikelihood::set_raw(const Vector& raw) {
  if (raw.size() != options_ - 1) throw DimensionError("likert raw parameter size mismatch");
  if (!raw.allFinite()) throw std::invalid_argument("likert raw parameters must be finite");
  raw_ = raw;
}

Vector LikertLikelihood::increments() const {
  Vector gaps(raw_.size());
  for (Eigen::Index i = 0; i < raw_.size(); ++i) gaps[i] = max_gap * sigmoid(raw_[i]);
  return gaps;
}

Vector LikertLikelihood::cut_points() const {
  Vector cuts(options_);
  cuts[0] = 0.0;
  const Vector gaps = increments();
  for (int i = 1; i < options_; ++i) cuts[i] = cuts[i - 1] + gaps[i - 1];
  return cuts;
}

namespace {

struct Distances {
  std::vector<double> dist;
  std::vector<int> d_strength;  // -1, 0, +1
  // d dist_i / d c_i (lower edge) and d dist_i / d c_{i+1} (upper edge)
  std::vector<int> d_lower;
  std::vector<int> d_upper;
};

Distances interval_distances(double g, const Vector& cuts) {
  const int l = static_cast<int>(cuts.size());
  Distances out{std::vector<double>(l, 0.0), std::vector<int>(l, 0), std::vector<int>(l, 0),
                std::vector<int>(l, 0)};
  for (int i = 0; i < l; ++i) {
    if (g < cuts[i]) {
      out.dist[i] = cuts[i] - g;
      out.d_strength[i] = -1;
      out.d_lower[i] = 1;
    } else if (i + 1 < l && g >= cuts[i + 1]) {
      out.dist[i] = g - cuts[i + 1];
      out.d_strength[i] = 1;
      out.d_upper[i] = -1;
    }
  }
  return out;
}

Vector softmax_neg(const std::vector<double>& dist) {
  const Eigen::Index l = static_cast<Eigen::Index>(dist.size());
  double lo = dist[0];
  for (double d : dist) lo = std::min(lo, d);
  Vector s(l);
  for (Eigen::Index i = 0; i < l; ++i) s[i] = std::exp(-(dist[static_cast<std::size_t>(i)] - lo));
  return s / s.sum();
}

}  // namespace

Vector LikertLikelihood::probs(double strength) const {
  if (!(strength >= 0.0)) throw std::invalid_argument("likert strength must be nonnegative");
  const Vector s = softmax_neg(interval_distances(strength, cut_points()).dist);
  return (1.0 - lapse_) * s.array() + lapse_ / options_;
}

double LikertLikelihood::log_prob(int y, double strength, double* d_strength, Vector* d_raw,
                                  double weight) const {
  if (y < 0 || y >= options_) throw std::invalid_argument("likert response out of range");
  if (!(strength >= 0.0)) throw std::invalid_argument("likert strength must be nonnegative");
  const Vector cuts = cut_points();
  const Distances dd = interval_distances(strength, cuts);
  const Vector s = softmax_neg(dd.dist);
  const double p = (1.0 - lapse_) * s[y] + lapse_ / options_;
  const double lp = std::log(p);
  if (!d_strength && !d_raw) return lp;

  // dlogp/d dist_j = (1 - lambda) s_y (s_j - [j == y]) / p
  const double scale = (1.0 - lapse_) * s[y] / p;
  Vector d_dist(options_);
  for (int j = 0; j < options_; ++j) d_dist[j] = scale * (s[j] - (j == y ? 1.0 : 0.0));

  if (d_strength) {
    double acc = 0.0;
    for (int j = 0; j < options_; ++j) acc += d_dist[j] * dd.d_strength[static_cast<std::size_t>(j)];
    *d_strength = acc;
  }
  if (d_raw) {
    Vector d_cut = Vector::Zero(options_);
    for (int j = 0; j < options_; ++j) {
      d_cut[j] += d_dist[j] * dd.d_lower[static_cast<std::size_t>(j)];
      if (j + 1 < options_) d_cut[j + 1] += d_dist[j] * dd.d_upper[static_cast<std::size_t>(j)];
    }
    // c_k = sum_{i<k} gap_i
    double tail = 0.0;
    for (int i = options_ - 2; i >= 0; --i) {
      tail += d_cut[i + 1];
      const double sg = sigmoid(raw_[i]);
      (*d_raw)[i] += weight * tail * max_gap * sg * (1.0 - sg);
    }
  }
  return lp;
}

int map_raw_likert(int raw) {
  if (raw < 1 || raw > 9) throw std::out_of_range("raw Likert rating must lie in 1..9");
  return (raw - 1) / 3;
}

// ---------------------------------------------------------------- blocks

std::string_view to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::gaussian: return "gaussian";
    case LikelihoodKind::bernoulli: return "bernoulli";
    case LikelihoodKind::likert: return "likert";
  }
  return "unknown";
}

LikelihoodKind likelihood_kind_from_string(std::string_view name) {
  if (name == "gaussian") return LikelihoodKind::gaussian;
  if (name == "bernoulli") return LikelihoodKind::bernoulli;
  if (name == "likert") return LikelihoodKind::likert;
  throw std::invalid_argument("unknown likelihood kind: " + std::string(name));
}

ObservationBlock ObservationBlock::gaussian(Points X, Vector y, Vector noise_sd) {
  ObservationBlock b{LikelihoodKind::gaussian, std::move(X), std::move(y), std::move(noise_sd)};
  b.validate();
  return b;
}

ObservationBlock ObservationBlock::bernoulli(Points X, Vector y) {
  ObservationBlock b{LikelihoodKind::bernoulli, std::move(X), std::move(y), Vector()};
  b.validate();
  return b;
}

ObservationBlock ObservationBlock::likert(Points X, Vector y) {
  ObservationBlock b{LikelihoodKind::likert, std::move(X), std::move(y), Vector()};
  b.validate();
  return b;
}

void ObservationBlock::validate(int likert_options) const {
  if (X.rows() != y.size())
    throw std::invalid_argument("observation block: X has " + std::to_string(X.rows()) +
                                " rows but y has " + std::to_string(y.size()));
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("observation block: non-finite values");
  switch (kind) {
    case LikelihoodKind::gaussian:
      if (noise_sd.size() != y.size())
        throw std::invalid_argument("gaussian block: one noise sd per row required");
      if (y.size() > 0 && !(noise_sd.array() > 0.0).all())
        throw std::invalid_argument("gaussian block: noise sd must be positive");
      break;
    case LikelihoodKind::bernoulli:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw std::invalid_argument("bernoulli block: targets must be 0/1");
      break;
    case LikelihoodKind::likert:
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        if (v != std::floor(v) || v < 0.0 || (likert_options > 0 && v >= likert_options))
          throw std::invalid_argument("likert block: targets must be option indices");
      }
      break;
  }
}

// ---------------------------------------------------------------- expectations

namespace {

// Below this the marginal is treated as a point mass for the value, and the
// variance derivative uses a floored scale.
constexpr double kMinSd = 1e-6;

template <typename F>
double quadrature_term(const GaussHermite& quad, double mu, double var, F&& f, double* d_mu,
                       double* d_var) {
  const double sd = std::sqrt(std::max(var, 0.0));
  const Vector& n = quad.nodes();
  const Vector& w = quad.weights();
  double value = 0.0, dm = 0.0, ds = 0.0;
  for (Eigen::Index k = 0; k < n.size(); ++k) {
    double df = 0.0;
    value += w[k] * f(mu + sd * n[k], k, &df);
    dm += w[k] * df;
    ds += w[k] * df * n[k];
  }
  if (d_mu) *d_mu = dm;
  if (d_var) {
    if (sd > kMinSd) {
      *d_var = ds / (2.0 * sd);
    } else {
      // dE/dvar = E[f'(x) n] / (2 sd), evaluated at a floored scale
      double ds_floor = 0.0;
      for (Eigen::Index k = 0; k < n.size(); ++k) {
        double df = 0.0;
        f(mu + kMinSd * n[k], -1, &df);
        ds_floor += w[k] * df * n[k];
      }
      *d_var = ds_floor / (2.0 * kMinSd);
    }
  }
  return value;
}

}  // namespace

double gaussian_expected_log_lik_quadrature(const ObservationBlock& block, const Vector& mean,
                                            const Vector& var, const GaussHermite& quad) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < block.size(); ++i) {
    const double sd = std::sqrt(std::max(var[i], 0.0));
    total += quad.expect(mean[i], sd, [&](double f) {
      return gaussian_log_lik(block.y[i], f, block.noise_sd[i]);
    });
  }
  return total;
}

double expected_log_lik(const ObservationBlock& block, const Vector& mean, const Vector& var,
                        const LikelihoodContext& ctx, BlockGradient* grad) {
  const Eigen::Index n = block.size();
  if (mean.size() != n || var.size() != n)
    throw DimensionError("expected_log_lik: one marginal per observation required");
  if (grad) {
    grad->d_mean = Vector::Zero(n);
    grad->d_var = Vector::Zero(n);
    if (ctx.likert) grad->d_likert_raw = Vector::Zero(ctx.likert->options() - 1);
  }
  if (n == 0) return 0.0;

  double total = 0.0;
  switch (block.kind) {
    case LikelihoodKind::gaussian: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s2 = block.noise_sd[i] * block.noise_sd[i];
        const double r = block.y[i] - mean[i];
        total += -kLogSqrt2Pi - std::log(block.noise_sd[i]) - 0.5 * (r * r + var[i]) / s2;
        if (grad) {
          grad->d_mean[i] = r / s2;
          grad->d_var[i] = -0.5 / s2;
        }
      }
      return total;
    }
    case LikelihoodKind::bernoulli: {
      if (!ctx.quadrature) throw std::invalid_argument("expected_log_lik: quadrature rule required");
      for (Eigen::Index i = 0; i < n; ++i) {
        const double sign = block.y[i] == 1.0 ? 1.0 : -1.0;
        auto f = [sign](double x, Eigen::Index, double* df) {
          *df = sign * inverse_mills(sign * x);
          return log_normal_cdf(sign * x);
        };
        total += quadrature_term(*ctx.quadrature, mean[i], var[i], f,
                                 grad ? &grad->d_mean[i] : nullptr, grad ? &grad->d_var[i] : nullptr);
      }
      return total;
    }
    case LikelihoodKind::likert: {
      if (!ctx.quadrature) throw std::invalid_argument("expected_log_lik: quadrature rule required");
      if (!ctx.likert) throw std::invalid_argument("expected_log_lik: likert block without a likert likelihood");
      const LikertLikelihood& lik = *ctx.likert;
      const Vector& w = ctx.quadrature->weights();
      for (Eigen::Index i = 0; i < n; ++i) {
        const int y = static_cast<int>(block.y[i]);
        if (y < 0 || y >= lik.options()) throw std::invalid_argument("likert response out of range");
        auto f = [&](double x, Eigen::Index k, double* df) {
          double ds = 0.0;
          // k < 0 marks a derivative-only evaluation
          Vector* d_raw = (grad && k >= 0) ? &grad->d_likert_raw : nullptr;
          const double lp = lik.log_prob(y, std::abs(x), &ds, d_raw, k >= 0 ? w[k] : 0.0);
          *df = x < 0.0 ? -ds : ds;
          return lp;
        };
        total += quadrature_term(*ctx.quadrature, mean[i], var[i], f,
                                 grad ? &grad->d_mean[i] : nullptr, grad ? &grad->d_var[i] : nullptr);
      }
      return total;
    }
  }
  return total;
}

}  // namespace mixgp
