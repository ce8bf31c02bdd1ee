#include "mixgp/experiments.hpp"

#include "mixgp/numerics/normal.hpp"
#include "mixgp/numerics/random.hpp"
#include "mixgp/numerics/sobol.hpp"

namespace mixgp {

Figure2Result run_figure2(const Figure2Config& config) {
  const Box domain = Box::uniform(1, -3.0, 3.0);
  Figure2Result r;
  const CounterRng rng(config.seed, 3);
  r.data_x.resize(config.draws, 1);
  r.data_y.resize(config.draws);
  for (int i = 0; i < config.draws; ++i) {
    const auto c = static_cast<std::uint64_t>(2 * i);
    const double x = -3.0 + 6.0 * rng.uniform(c);
    r.data_x(i, 0) = x;
    r.data_y[i] = rng.uniform(c + 1) < normal_cdf(0.5 * x * x) ? 1.0 : 0.0;
  }
  Points cx(2, 1);
  cx << 0.0, 2.0;
  r.constraints = ConstraintSet{cx, Vector{{0.0, 2.0}}, Vector::Constant(2, std::sqrt(config.constraint_variance))};

  LevelSetModelConfig mc;
  mc.num_inducing = config.num_inducing;
  mc.priors = config.priors;
  const VariationalGP base = make_levelset_model(domain, r.constraints, mc);

  r.grid = Vector::LinSpaced(config.grid_points, -3.0, 3.0);
  r.truth = 0.5 * r.grid.array().square();
  const Points G = r.grid;

  const auto train = [&](ModelVariant variant, Figure2Curve& curve, Vector& sd_at, Vector* err_at) {
    VariationalGP model = base;
    const auto blocks = levelset_blocks(variant, r.constraints, r.data_x, r.data_y);
    fit(model, blocks, config.priors, config.fit);
    const Marginals mg = latent_marginals(model, G);
    curve.mean = mg.mean;
    curve.sd = mg.var.cwiseSqrt();
    const Marginals at = latent_marginals(model, cx);
    sd_at = at.var.cwiseSqrt();
    if (err_at) *err_at = (at.mean - r.constraints.y).cwiseAbs();
  };
  train(ModelVariant::mixed, r.mixed, r.mixed_sd_at, &r.mixed_error_at);
  train(ModelVariant::unconstrained, r.unconstrained, r.unconstrained_sd_at, nullptr);
  return r;
}

std::vector<PreferenceRecord> synthetic_preference_data(int n, std::uint64_t seed, double lower, double upper) {
  const Points S = sobol(n, Box::uniform(2, lower, upper), SobolOptions{true, seed, 0});
  const PreferenceResponder resp{CounterRng(seed, 4)};
  std::vector<PreferenceRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const PreferenceResponse r = resp.respond(S(i, 0), S(i, 1), static_cast<std::uint64_t>(i));
    out.push_back({{Vector::Constant(1, S(i, 0)), Vector::Constant(1, S(i, 1))}, r.choice, r.rating, std::nullopt});
  }
  return out;
}

Figure4Result run_figure4(const Figure4Config& config) {
  const Objective obj = make_objective("identity-preference");
  const auto data = synthetic_preference_data(config.train_pairs, config.seed, obj.domain.lower[0],
                                              obj.domain.upper[0]);
  Figure4Result r;
  const int g = config.grid_points;
  r.grid = Vector::LinSpaced(g, obj.domain.lower[0], obj.domain.upper[0]);
  std::vector<PairPoint> pairs;
  pairs.reserve(static_cast<std::size_t>(g * g));
  r.truth.resize(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      pairs.push_back({Vector::Constant(1, r.grid[i]), Vector::Constant(1, r.grid[j])});
      r.truth(i, j) = normal_cdf(r.grid[i] - r.grid[j]);
    }

  const auto predict = [&](bool use_likert) {
    PreferenceFitConfig fc = config.fit;
    fc.use_likert = use_likert;
    const Posterior post(fit_preference_model(data, obj.domain, fc));
    const Vector p = predict_preference_prob(post, pairs);
    Matrix out(g, g);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) out(i, j) = p[i * g + j];
    return out;
  };
  r.mixed = predict(true);
  r.choice_only = predict(false);
  r.mse_mixed = (r.mixed - r.truth).squaredNorm() / static_cast<double>(g * g);
  r.mse_choice_only = (r.choice_only - r.truth).squaredNorm() / static_cast<double>(g * g);
  return r;
}

}  // namespace mixgp
