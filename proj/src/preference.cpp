#include "mixgp/preference.hpp"

#include "mixgp/numerics/normal.hpp"
#include "mixgp/numerics/sobol.hpp"

#include <cmath>

namespace mixgp {

Vector PairPoint::concat() const {
  if (x1.size() != x2.size()) throw DimensionError("pair stimuli must have equal dimension");
  Vector out(x1.size() + x2.size());
  out << x1, x2;
  return out;
}

Points pair_rows(std::span<const PairPoint> pairs) {
  if (pairs.empty()) return Points(0, 0);
  const Eigen::Index d = pairs[0].x1.size();
  Points X(static_cast<Eigen::Index>(pairs.size()), 2 * d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].x1.size() != d || pairs[i].x2.size() != d) throw DimensionError("pair dimension mismatch");
    X.row(static_cast<Eigen::Index>(i)) = pairs[i].concat().transpose();
  }
  return X;
}

double preference_kernel(const PairPoint& p, const PairPoint& q, const KernelParams& base) {
  const Vector a = p.concat(), b = q.concat();
  return Covariance({KernelKind::preference, base.dim()}, base)(as_span(a), as_span(b));
}

VariationalGP make_preference_model(const Box& domain, const PreferenceModelConfig& config) {
  const int d = domain.dim();
  Vector lo(2 * d), hi(2 * d);
  lo << domain.lower, domain.lower;
  hi << domain.upper, domain.upper;
  const Box pair_box(lo, hi);
  VariationalGP model({KernelKind::preference, d},
                      KernelParams::isotropic(d, config.initial_lengthscale, config.initial_outputscale),
                      sobol(config.num_inducing, pair_box), MeanMode::zero);
  model.transform = InputTransform::to_unit_cube(domain);
  if (config.likert_options > 0) model.likert = LikertLikelihood(config.likert_options, config.lapse);
  return model;
}

double preference_probability(double mean, double var) {
  return normal_cdf(mean / std::sqrt(1.0 + std::max(var, 0.0)));
}

Vector predict_preference_prob(const Posterior& post, std::span<const PairPoint> pairs) {
  const Marginals mg = post.marginals(pair_rows(pairs));
  Vector p(mg.mean.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = preference_probability(mg.mean[i], mg.var[i]);
  return p;
}

double predict_preference_prob(const Posterior& post, const PairPoint& pair) {
  return predict_preference_prob(post, std::span<const PairPoint>(&pair, 1))[0];
}

std::pair<double, double> likert_strength_marginal(const Posterior& post, const PairPoint& pair) {
  const Marginals mg = post.marginals(pair_rows(std::span<const PairPoint>(&pair, 1)));
  return {mg.mean[0], mg.var[0]};
}

Vector predict_likert_probs(const Posterior& post, const PairPoint& pair, const GaussHermite& quad) {
  if (!post.model().likert) throw std::invalid_argument("model has no Likert likelihood");
  const LikertLikelihood& lik = *post.model().likert;
  const auto [mu, var] = likert_strength_marginal(post, pair);
  const double sd = std::sqrt(std::max(var, 0.0));
  Vector p = Vector::Zero(lik.options());
  for (Eigen::Index k = 0; k < quad.order(); ++k)
    p += quad.weights()[k] * lik.probs(std::abs(mu + sd * quad.nodes()[k]));
  return p;
}

}  // namespace mixgp

namespace mixgp {

std::vector<ObservationBlock> preference_blocks(std::span<const PreferenceRecord> records, bool use_likert) {
  if (records.empty()) throw std::invalid_argument("preference data set is empty");
  std::vector<PairPoint> pairs;
  pairs.reserve(records.size());
  Vector choice(static_cast<Eigen::Index>(records.size()));
  std::vector<Eigen::Index> rated;
  for (std::size_t i = 0; i < records.size(); ++i) {
    pairs.push_back(records[i].pair);
    choice[static_cast<Eigen::Index>(i)] = records[i].choice;
    if (records[i].rating) rated.push_back(static_cast<Eigen::Index>(i));
  }
  const Points X = pair_rows(pairs);
  std::vector<ObservationBlock> blocks;
  blocks.push_back(ObservationBlock::bernoulli(X, choice));
  if (use_likert && !rated.empty()) {
    Points XL(static_cast<Eigen::Index>(rated.size()), X.cols());
    Vector yL(static_cast<Eigen::Index>(rated.size()));
    for (std::size_t k = 0; k < rated.size(); ++k) {
      XL.row(static_cast<Eigen::Index>(k)) = X.row(rated[k]);
      yL[static_cast<Eigen::Index>(k)] = *records[static_cast<std::size_t>(rated[k])].rating;
    }
    blocks.push_back(ObservationBlock::likert(std::move(XL), std::move(yL)));
  }
  return blocks;
}

VariationalGP fit_preference_model(std::span<const PreferenceRecord> records, const Box& domain,
                                   const PreferenceFitConfig& config, FitResult* fit_result) {
  PreferenceModelConfig mc = config.model;
  if (!config.use_likert) mc.likert_options = 0;
  VariationalGP model = make_preference_model(domain, mc);
  const auto blocks = preference_blocks(records, config.use_likert && mc.likert_options > 0);
  FitResult res = fit(model, blocks, config.priors, config.fit);
  if (fit_result) *fit_result = std::move(res);
  return model;
}

}  // namespace mixgp
