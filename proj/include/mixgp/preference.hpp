#pragma once

#include "mixgp/svgp.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace mixgp {

/// Two stimuli of equal dimension; as a model input it is the row [x1, x2].
struct PairPoint {
  Vector x1;
  Vector x2;

  Vector concat() const;
  PairPoint swapped() const { return {x2, x1}; }
};

Points pair_rows(std::span<const PairPoint> pairs);

/// Cov(f(x1) - f(x2), f(x1') - f(x2')) under an RBF-ARD base process.
double preference_kernel(const PairPoint& p, const PairPoint& q, const KernelParams& base);

struct PreferenceModelConfig {
  int num_inducing = 100;
  double initial_lengthscale = 1.0 / 3.0;  // unit-cube coordinates; mode of the Gamma(3, 6) prior
  double initial_outputscale = 2.0;
  int likert_options = 0;            // 0: no Likert block
  double lapse = LikertLikelihood::default_lapse;
};

/// Zero-mean pair model over `domain` with inducing points from a Sobol design
/// in the concatenated pair space.
VariationalGP make_preference_model(const Box& domain, const PreferenceModelConfig& config = {});

/// Pr(x1 preferred) = Phi(mu / sqrt(1 + sigma^2)) of the pair latent.
double preference_probability(double mean, double var);
Vector predict_preference_prob(const Posterior& post, std::span<const PairPoint> pairs);
double predict_preference_prob(const Posterior& post, const PairPoint& pair);

/// Marginal (mu, sigma^2) of the pair latent; the same quantity drives the
/// choice and Likert terms.
std::pair<double, double> likert_strength_marginal(const Posterior& post, const PairPoint& pair);

/// Option probabilities with |g| integrated under the pair marginal.
Vector predict_likert_probs(const Posterior& post, const PairPoint& pair,
                            const GaussHermite& quad = GaussHermite());

}  // namespace mixgp

namespace mixgp {

/// One trial: the pair, the binary choice and, optionally, a 0-based Likert
/// rating (raw_rating keeps the original 1..9 value when known).
struct PreferenceRecord {
  PairPoint pair;
  int choice = 0;
  std::optional<int> rating;
  std::optional<int> raw_rating;
};

struct PreferenceFitConfig {
  bool use_likert = true;
  PreferenceModelConfig model;
  FitOptions fit;
  HyperPriors priors;
  PreferenceFitConfig() { model.likert_options = 3; }
};

/// Choice block and, when requested and present, a Likert block.
std::vector<ObservationBlock> preference_blocks(std::span<const PreferenceRecord> records, bool use_likert);

VariationalGP fit_preference_model(std::span<const PreferenceRecord> records, const Box& domain,
                                   const PreferenceFitConfig& config, FitResult* fit_result = nullptr);

}  // namespace mixgp
