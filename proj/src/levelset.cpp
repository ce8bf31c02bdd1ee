#include "mixgp/levelset.hpp"

#include "mixgp/evaluation.hpp"
#include "mixgp/numerics/normal.hpp"
#include "mixgp/numerics/sobol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mixgp {

LevelSetProblem LevelSetProblem::make(const Box& domain, double threshold, int num_reference) {
  return LevelSetProblem{domain, threshold, sobol(num_reference, domain)};
}

double sublevel_prob(double mean, double sd, double threshold) {
  if (sd > 0.0) return normal_cdf((threshold - mean) / sd);
  return threshold >= mean ? 1.0 : 0.0;
}

Vector sublevel_prob(const Posterior& post, const Points& X, double threshold) {
  const Marginals mg = post.marginals(X);
  Vector p(mg.mean.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sublevel_prob(mg.mean[i], std::sqrt(mg.var[i]), threshold);
  return p;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

std::string_view to_string(AcquisitionKind kind) {
  return kind == AcquisitionKind::globalmi ? "globalmi" : "eavc";
}

AcquisitionKind acquisition_from_string(std::string_view name) {
  if (name == "globalmi") return AcquisitionKind::globalmi;
  if (name == "eavc") return AcquisitionKind::eavc;
  throw std::invalid_argument("unknown acquisition: " + std::string(name));
}

// ---------------------------------------------------------------- look-ahead

namespace {

constexpr double kMinQuerySd = 1e-12;

struct SiteUpdate {
  double prob;
  double mean;
  double var;
};

// Moment-matched probit site at the query for outcome y.
SiteUpdate probit_site(double mu, double var, int y) {
  const double s = std::sqrt(1.0 + var);
  const double sign = y == 1 ? 1.0 : -1.0;
  const double z = sign * mu / s;
  const double r = inverse_mills(z);
  return {normal_cdf(z), mu + sign * var * r / s, var - var * var * r * (z + r) / (1.0 + var)};
}

}  // namespace

LookaheadContext::LookaheadContext(const Posterior& post, const LevelSetProblem& problem)
    : post_(&post), problem_(&problem), proj_(post.project(problem.reference)) {
  ref_ = post.marginals(proj_);
  const Eigen::Index n = ref_.mean.size();
  pi_.resize(n);
  ref_sd_ = ref_.var.cwiseSqrt();
  for (Eigen::Index r = 0; r < n; ++r) {
    pi_[r] = sublevel_prob(ref_.mean[r], ref_sd_[r], problem.threshold);
  }
  volume_ = problem.volume() / static_cast<double>(std::max<Eigen::Index>(n, 1));
}

std::array<LookaheadOutcome, 2> LookaheadContext::lookahead(const Vector& x_q) const {
  Points Xq(1, x_q.size());
  Xq.row(0) = x_q.transpose();
  const Posterior::Projection pq = post_->project(Xq);
  const Marginals q = post_->marginals(pq);
  const Vector c = post_->cross_cov(proj_, pq).col(0);
  const double mu = q.mean[0], var = q.var[0];
  std::array<LookaheadOutcome, 2> out;
  for (int y = 0; y < 2; ++y) {
    LookaheadOutcome& o = out[static_cast<std::size_t>(y)];
    if (std::sqrt(var) <= kMinQuerySd) {
      o.prob = y == 1 ? normal_cdf(mu) : normal_cdf(-mu);
      o.query_mean = mu;
      o.query_var = var;
      o.mean = ref_.mean;
      o.var = ref_.var;
      continue;
    }
    const SiteUpdate s = probit_site(mu, var, y);
    o.prob = s.prob;
    o.query_mean = s.mean;
    o.query_var = s.var;
    o.mean = ref_.mean + c * ((s.mean - mu) / var);
    o.var = (ref_.var - c.cwiseAbs2() * ((1.0 - s.var / var) / var)).cwiseMax(0.0);
  }
  return out;
}

Vector LookaheadContext::evaluate_columns(const Marginals& q, const Matrix& cross, AcquisitionKind kind) const {
  const Eigen::Index nq = q.mean.size();
  const Eigen::Index n = ref_.mean.size();
  const double gamma = problem_->threshold;
  Vector out(nq);
  for (Eigen::Index j = 0; j < nq; ++j) {
    const double mu = q.mean[j], var = q.var[j];
    if (std::sqrt(var) <= kMinQuerySd) {
      out[j] = 0.0;
      continue;
    }
    const SiteUpdate s[2] = {probit_site(mu, var, 0), probit_site(mu, var, 1)};
    double acc[2] = {0.0, 0.0};
    double mi = 0.0;
    const double shift[2] = {(s[0].mean - mu) / var, (s[1].mean - mu) / var};
    const double shrink[2] = {(1.0 - s[0].var / var) / var, (1.0 - s[1].var / var) / var};
    for (Eigen::Index r = 0; r < n; ++r) {
      const double c = cross(r, j);
      double p[2];
      for (int y = 0; y < 2; ++y) {
        const double m = ref_.mean[r] + c * shift[y];
        const double v = std::max(ref_.var[r] - c * c * shrink[y], 0.0);
        p[y] = sublevel_prob(m, std::sqrt(v), gamma);
        acc[y] += p[y];
      }
      if (kind == AcquisitionKind::globalmi) {
        // Entropy of the outcome mixture rather than of pi_: the Gaussian
        // look-ahead does not preserve pi_ exactly, and this keeps each term >= 0.
        const double mix = s[0].prob * p[0] + s[1].prob * p[1];
        mi += binary_entropy(mix) - s[0].prob * binary_entropy(p[0]) - s[1].prob * binary_entropy(p[1]);
      }
    }
    if (kind == AcquisitionKind::globalmi) {
      out[j] = mi;
    } else {
      const double v0 = volume_ * pi_.sum();
      out[j] = s[0].prob * std::abs(volume_ * acc[0] - v0) + s[1].prob * std::abs(volume_ * acc[1] - v0);
    }
  }
  return out;
}

Vector LookaheadContext::evaluate(const Points& candidates, AcquisitionKind kind) const {
  const Posterior::Projection pq = post_->project(candidates);
  const Marginals q = post_->marginals(pq);
  return evaluate_columns(q, post_->cross_cov(proj_, pq), kind);
}

double LookaheadContext::global_mi(const Vector& x_q) const {
  Points Xq(1, x_q.size());
  Xq.row(0) = x_q.transpose();
  return evaluate(Xq, AcquisitionKind::globalmi)[0];
}

double LookaheadContext::eavc(const Vector& x_q) const {
  Points Xq(1, x_q.size());
  Xq.row(0) = x_q.transpose();
  return evaluate(Xq, AcquisitionKind::eavc)[0];
}

// ---------------------------------------------------------------- optimizer

AcquisitionChoice optimize_acquisition(const BatchAcquisition& acquisition, const Box& domain,
                                       const AcquisitionOptimizerOptions& options) {
  if (options.num_candidates < 1) throw std::invalid_argument("need at least one acquisition candidate");
  const Points C = sobol(options.num_candidates, domain, SobolOptions{true, options.seed, 0});
  const Vector values = acquisition(C);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(C.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });

  AcquisitionChoice best{C.row(order[0]).transpose(), values[order[0]]};
  const int d = domain.dim();
  const int starts = std::min<int>(options.num_starts, static_cast<int>(C.rows()));
  for (int s = 0; s < starts && options.steps_per_axis > 1; ++s) {
    Vector x = C.row(order[static_cast<std::size_t>(s)]).transpose();
    double fx = values[order[static_cast<std::size_t>(s)]];
    Vector half = domain.width() / 16.0;
    for (int sweep = 0; sweep < options.sweeps; ++sweep) {
      for (int axis = 0; axis < d; ++axis) {
        const double lo = std::max(domain.lower[axis], x[axis] - half[axis]);
        const double hi = std::min(domain.upper[axis], x[axis] + half[axis]);
        Points line(options.steps_per_axis, d);
        for (int k = 0; k < options.steps_per_axis; ++k) {
          line.row(k) = x.transpose();
          line(k, axis) = lo + (hi - lo) * k / (options.steps_per_axis - 1);
        }
        const Vector lv = acquisition(line);
        Eigen::Index arg;
        const double m = lv.maxCoeff(&arg);
        if (m > fx) {
          fx = m;
          x = line.row(arg).transpose();
        }
      }
      half *= 0.5;
    }
    if (fx > best.value) best = {x, fx};
  }
  best.x = domain.clamp(best.x);
  return best;
}

AcquisitionChoice optimize_acquisition(const Posterior& post, const LevelSetProblem& problem,
                                       AcquisitionKind kind, const AcquisitionOptimizerOptions& options) {
  const LookaheadContext ctx(post, problem);
  return optimize_acquisition([&](const Points& X) { return ctx.evaluate(X, kind); }, problem.domain, options);
}

// ---------------------------------------------------------------- models

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::mixed: return "mixed";
    case ModelVariant::pseudo: return "pseudo";
    case ModelVariant::unconstrained: return "unconstrained";
  }
  return "mixed";
}

ModelVariant model_variant_from_string(std::string_view name) {
  if (name == "mixed") return ModelVariant::mixed;
  if (name == "pseudo") return ModelVariant::pseudo;
  if (name == "unconstrained") return ModelVariant::unconstrained;
  throw std::invalid_argument("unknown model variant: " + std::string(name));
}

LevelSetModelConfig::LevelSetModelConfig() {
  initial_fit.iterations = 400;
  refit.iterations = 100;
}

Points levelset_inducing_points(const Box& domain, const ConstraintSet& constraints, int num_sobol) {
  const Points S = num_sobol > 0 ? sobol(num_sobol, domain) : Points(0, domain.dim());
  std::vector<Eigen::Index> keep;
  const double tol = 1e-9 * domain.width().maxCoeff();
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j = 0; j < constraints.size() && !dup; ++j)
      dup = (S.row(i) - constraints.X.row(j)).cwiseAbs().maxCoeff() <= tol;
    if (!dup) keep.push_back(i);
  }
  Points Z(static_cast<Eigen::Index>(keep.size()) + constraints.size(), domain.dim());
  for (std::size_t k = 0; k < keep.size(); ++k) Z.row(static_cast<Eigen::Index>(k)) = S.row(keep[k]);
  if (constraints.size() > 0) Z.bottomRows(constraints.size()) = constraints.X;
  return Z;
}

VariationalGP make_levelset_model(const Box& domain, const ConstraintSet& constraints,
                                  const LevelSetModelConfig& config) {
  VariationalGP model({KernelKind::rbf, domain.dim()},
                      KernelParams::isotropic(domain.dim(), config.initial_lengthscale, config.initial_outputscale),
                      levelset_inducing_points(domain, constraints, config.num_inducing), MeanMode::learned_constant,
                      0.0);
  model.transform = InputTransform::to_unit_cube(domain);
  return model;
}

std::vector<ObservationBlock> levelset_blocks(ModelVariant variant, const ConstraintSet& constraints,
                                              const Points& X, const Vector& y) {
  std::vector<ObservationBlock> blocks;
  blocks.push_back(ObservationBlock::bernoulli(X, y));
  if (variant == ModelVariant::mixed && !constraints.empty()) blocks.push_back(constraints.as_block());
  if (variant == ModelVariant::pseudo && !constraints.empty()) blocks.push_back(make_pseudo_data(constraints));
  return blocks;
}

Points initial_design(const Box& domain, int n, std::uint64_t seed) {
  return sobol(n, domain, SobolOptions{true, seed, 0});
}

// ---------------------------------------------------------------- loop

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

ActiveLearningResult run_active_learning(const ActiveLearningConfig& config, const Responder& responder,
                                         const TrialCallback& on_trial) {
  if (config.budget < 0) throw std::invalid_argument("budget must be nonnegative");
  if (config.initial_trials < 1) throw std::invalid_argument("at least one initial trial is required");
  const Objective objective = make_objective(config.objective);
  const Box& domain = objective.domain;
  const double gamma = default_latent_threshold();
  const ConstraintSet constraints =
      config.model.variant == ModelVariant::unconstrained ? ConstraintSet{Points(0, objective.dim), Vector(), Vector()}
                                                          : make_constraints(objective);
  // all variants share one inducing set: Sobol points plus the constraint locations
  const ConstraintSet all_constraints = make_constraints(objective);
  const LevelSetProblem problem = LevelSetProblem::make(domain, gamma, config.num_reference);
  const BernoulliResponder simulated{objective, CounterRng(config.seed, 1)};
  const Responder respond = responder ? responder : Responder([&](const Vector& x, std::uint64_t t) {
    return simulated.respond(x, t);
  });
  const PointPredicate truth = [&](const Vector& x) { return objective.in_truth_sublevel(x); };

  ActiveLearningResult result;
  result.model = make_levelset_model(domain, all_constraints, config.model);
  const int total = config.initial_trials + config.budget;
  Points X(total, objective.dim);
  Vector y(total);
  int n = 0;

  auto record = [&](const Vector& x, std::optional<double> acq) {
    int label;
    try {
      label = respond(x, static_cast<std::uint64_t>(n));
    } catch (const std::exception& e) {
      throw ActiveLearningAborted(std::string("responder failed: ") + e.what(), result);
    }
    if (label != 0 && label != 1) throw ActiveLearningAborted("responder returned a non-binary label", result);
    X.row(n) = x.transpose();
    y[n] = label;
    ++n;
    TrialRecord rec{n, x, label, acq, now_seconds()};
    result.trials.push_back(rec);
    if (on_trial) on_trial(rec);
  };

  auto refit = [&](const FitOptions& opts) {
    const auto blocks = levelset_blocks(config.model.variant, constraints, X.topRows(n), y.head(n));
    FitResult fr = fit(result.model, blocks, config.model.priors, opts);
    result.elbo_traces.push_back(std::move(fr.elbo_trace));
    return fr.final_elbo;
  };

  auto score = [&](int iteration, double elbo_value, int samples) {
    const Posterior post(result.model);
    const LevelSetScores s = score_levelset(post, gamma, truth, domain, samples, config.seed);
    result.metrics.push_back({iteration, s.f1.f1, s.brier, elbo_value});
    return s;
  };

  const Points init = initial_design(domain, config.initial_trials, config.seed);
  for (int i = 0; i < config.initial_trials; ++i) record(init.row(i).transpose(), std::nullopt);
  double elbo_value = refit(config.model.initial_fit);
  score(0, elbo_value, config.metric_samples);

  for (int q = 1; q <= config.budget; ++q) {
    AcquisitionChoice choice;
    {
      const Posterior post(result.model);
      AcquisitionOptimizerOptions opts = config.optimizer;
      opts.seed = config.seed * 7919 + static_cast<std::uint64_t>(q);
      choice = optimize_acquisition(post, problem, config.acquisition, opts);
    }
    record(choice.x, choice.value);
    if (q % std::max(config.model.refit_stride, 1) == 0 || q == config.budget)
      elbo_value = refit(config.model.refit);
    score(q, elbo_value, config.metric_samples);
  }
  const Posterior post(result.model);
  const LevelSetScores fin = score_levelset(post, gamma, truth, domain, config.final_metric_samples, config.seed);
  result.final_f1 = fin.f1.f1;
  result.final_brier = fin.brier;
  return result;
}

}  // namespace mixgp
