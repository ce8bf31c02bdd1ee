#pragma once

#include "mixgp/constraints.hpp"
#include "mixgp/simulators.hpp"
#include "mixgp/svgp.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mixgp {

struct LevelSetProblem {
  Box domain;
  double threshold = 0.0;  // latent gamma
  Points reference;        // X_ref

  static LevelSetProblem make(const Box& domain, double threshold, int num_reference = 10000);
  double volume() const { return domain.volume(); }
};

/// Phi((gamma - mu) / sigma); 0/1 by the sign of gamma - mu when sigma = 0.
double sublevel_prob(double mean, double sd, double threshold);
Vector sublevel_prob(const Posterior& post, const Points& X, double threshold);

double binary_entropy(double p);

enum class AcquisitionKind { globalmi, eavc };
std::string_view to_string(AcquisitionKind kind);
AcquisitionKind acquisition_from_string(std::string_view name);

struct LookaheadOutcome {
  double prob = 0.0;  // P(y)
  double query_mean = 0.0;
  double query_var = 0.0;
  Vector mean;  // updated marginals at X_ref
  Vector var;
};

/// Current posterior at the reference points, ready for look-ahead queries.
class LookaheadContext {
public:
  LookaheadContext(const Posterior& post, const LevelSetProblem& problem);

  const Vector& reference_mean() const { return ref_.mean; }
  const Vector& reference_var() const { return ref_.var; }
  const Vector& reference_prob() const { return pi_; }

  /// Outcomes y = 0 and y = 1 at x_q.
  std::array<LookaheadOutcome, 2> lookahead(const Vector& x_q) const;

  double global_mi(const Vector& x_q) const;
  double eavc(const Vector& x_q) const;
  /// Batched evaluation over candidate rows.
  Vector evaluate(const Points& candidates, AcquisitionKind kind) const;

private:
  // Values for candidates given their marginals and covariances with X_ref.
  Vector evaluate_columns(const Marginals& q, const Matrix& cross, AcquisitionKind kind) const;

  const Posterior* post_;
  const LevelSetProblem* problem_;
  Posterior::Projection proj_;
  Marginals ref_;
  Vector pi_;
  Vector ref_sd_;
  double volume_ = 0.0;
};

struct AcquisitionOptimizerOptions {
  int num_candidates = 512;
  int num_starts = 4;
  int steps_per_axis = 16;
  int sweeps = 2;
  std::uint64_t seed = 0;
};

struct AcquisitionChoice {
  Vector x;
  double value = 0.0;
};

using BatchAcquisition = std::function<Vector(const Points&)>;

/// Sobol candidates, then coordinate line searches from the best starts. Ties
/// keep the earliest candidate.
AcquisitionChoice optimize_acquisition(const BatchAcquisition& acquisition, const Box& domain,
                                       const AcquisitionOptimizerOptions& options = {});
AcquisitionChoice optimize_acquisition(const Posterior& post, const LevelSetProblem& problem,
                                       AcquisitionKind kind,
                                       const AcquisitionOptimizerOptions& options = {});

enum class ModelVariant { mixed, pseudo, unconstrained };
std::string_view to_string(ModelVariant v);
ModelVariant model_variant_from_string(std::string_view name);

struct LevelSetModelConfig {
  ModelVariant variant = ModelVariant::mixed;
  int num_inducing = 100;
  double initial_lengthscale = 1.0 / 3.0;  // unit-cube coordinates
  double initial_outputscale = 2.0;
  HyperPriors priors;
  FitOptions initial_fit;  // first fit after the initial design
  FitOptions refit;        // warm-started refits
  int refit_stride = 1;    // refit after every k-th response
  LevelSetModelConfig();
};

/// Inducing points: Sobol design in the domain plus every constraint location
/// (Sobol points coinciding with a constraint are dropped).
Points levelset_inducing_points(const Box& domain, const ConstraintSet& constraints, int num_sobol);
VariationalGP make_levelset_model(const Box& domain, const ConstraintSet& constraints,
                                  const LevelSetModelConfig& config);

/// Observation blocks for a variant given the Bernoulli responses so far.
std::vector<ObservationBlock> levelset_blocks(ModelVariant variant, const ConstraintSet& constraints,
                                              const Points& X, const Vector& y);

struct TrialRecord {
  int iteration = 0;  // 1-based trial index
  Vector x;
  int y = 0;
  std::optional<double> acquisition_value;  // empty for initial design trials
  double timestamp = 0.0;
};

struct IterationMetrics {
  int iteration = 0;  // queries after the initial design
  double f1 = 0.0;
  double brier = 0.0;
  double elbo = 0.0;
};

struct ActiveLearningConfig {
  std::string objective = "normball-2d";
  LevelSetModelConfig model;
  AcquisitionKind acquisition = AcquisitionKind::globalmi;
  int budget = 50;
  int initial_trials = 10;
  std::uint64_t seed = 0;
  int num_reference = 10000;
  AcquisitionOptimizerOptions optimizer;
  int metric_samples = 1 << 14;   // per-iteration F1/Brier sample count
  int final_metric_samples = 1 << 20;
};

struct ActiveLearningResult {
  std::vector<TrialRecord> trials;
  std::vector<IterationMetrics> metrics;
  std::vector<std::vector<double>> elbo_traces;
  VariationalGP model;
  double final_f1 = 0.0;
  double final_brier = 0.0;
};

/// Thrown when the responder fails; the partial log is preserved.
class ActiveLearningAborted : public std::runtime_error {
public:
  ActiveLearningAborted(const std::string& what, ActiveLearningResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const ActiveLearningResult& partial() const { return partial_; }

private:
  ActiveLearningResult partial_;
};

using Responder = std::function<int(const Vector& x, std::uint64_t trial)>;
using TrialCallback = std::function<void(const TrialRecord&)>;

ActiveLearningResult run_active_learning(const ActiveLearningConfig& config,
                                         const Responder& responder = {},
                                         const TrialCallback& on_trial = {});

/// Initial design: Sobol points scrambled by seed.
Points initial_design(const Box& domain, int n, std::uint64_t seed);

}  // namespace mixgp
