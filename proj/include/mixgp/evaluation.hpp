#pragma once

#include "mixgp/preference.hpp"
#include "mixgp/svgp.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mixgp {

struct F1Score {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// F1 from counts; 0 when nothing is predicted positive or nothing is positive.
F1Score f1_from_counts(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg);

using PointPredicate = std::function<bool(const Vector&)>;

/// Volume-based F1 of a predicted set against the truth on n scrambled Sobol
/// samples of the domain.
F1Score f1_levelset(const PointPredicate& predicted, const PointPredicate& truth, const Box& domain,
                    int n, std::uint64_t seed);

struct LevelSetScores {
  F1Score f1;
  double brier = 0.0;
};

/// Predicted set {x : sublevel_prob >= 0.5}; Brier of sublevel_prob against
/// truth membership on the same samples.
LevelSetScores score_levelset(const Posterior& post, double threshold, const PointPredicate& truth,
                              const Box& domain, int n, std::uint64_t seed, bool with_brier = true);

/// (1/n) sum (p_i - o_i)^2
double brier(const Vector& probs, const Vector& outcomes);

/// Binary classification F1 with "positive" = prob >= threshold vs outcome 1.
F1Score classification_f1(const Vector& probs, const Vector& outcomes, double threshold = 0.5);

struct SplitEvalConfig {
  std::string name;
  PreferenceFitConfig fit;
};

struct SplitScore {
  std::string config;
  int repeat = 0;
  double brier = 0.0;
  double f1 = 0.0;
};

struct SplitSummary {
  std::string config;
  double brier_mean = 0.0;
  double brier_se = 0.0;
  double f1_mean = 0.0;
  double f1_se = 0.0;
};

struct SplitEvalResult {
  std::vector<SplitScore> scores;  // ordered by repeat, then config
  std::vector<SplitSummary> summary;
  int redrawn_splits = 0;
};

/// Random train/test splits; every config sees the same split in a repeat.
/// Splits whose test set holds a single choice class are redrawn and counted.
SplitEvalResult repeated_split_eval(const std::vector<PreferenceRecord>& dataset, const Box& domain,
                                    int train_size, int repeats, const std::vector<SplitEvalConfig>& configs,
                                    std::uint64_t seed, int workers = 1);

/// Train/test index split for one repeat.
std::pair<std::vector<int>, std::vector<int>> split_indices(int n, int train_size, std::uint64_t seed,
                                                            int repeat, int attempt);

double mean(const std::vector<double>& v);
double standard_error(const std::vector<double>& v);

}  // namespace mixgp
