#include "mixgp/evaluation.hpp"

#include "mixgp/levelset.hpp"
#include "mixgp/numerics/random.hpp"
#include "mixgp/numerics/sobol.hpp"
#include "mixgp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixgp {

F1Score f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Score s;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

constexpr int kChunk = 4096;

template <typename F>
void for_each_chunk(int n, const Box& domain, std::uint64_t seed, F&& f) {
  SobolSequence seq(domain.dim(), SobolOptions{true, seed, 0});
  for (int start = 0; start < n; start += kChunk) {
    const int m = std::min(kChunk, n - start);
    Points P(m, domain.dim());
    for (int i = 0; i < m; ++i) P.row(i) = domain.from_unit(seq.next()).transpose();
    f(P);
  }
}

}  // namespace

F1Score f1_levelset(const PointPredicate& predicted, const PointPredicate& truth, const Box& domain, int n,
                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("f1_levelset needs at least one sample");
  std::size_t tp = 0, fp = 0, fn = 0;
  for_each_chunk(n, domain, seed, [&](const Points& P) {
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const Vector x = P.row(i).transpose();
      const bool p = predicted(x), t = truth(x);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
  });
  return f1_from_counts(tp, fp, fn);
}

LevelSetScores score_levelset(const Posterior& post, double threshold, const PointPredicate& truth,
                              const Box& domain, int n, std::uint64_t seed, bool with_brier) {
  if (n < 1) throw std::invalid_argument("score_levelset needs at least one sample");
  std::size_t tp = 0, fp = 0, fn = 0;
  double sq = 0.0;
  for_each_chunk(n, domain, seed, [&](const Points& P) {
    Vector mean, var;
    if (with_brier) {
      const Marginals mg = post.marginals(P);
      mean = mg.mean;
      var = mg.var;
    } else {
      mean = post.mean(P);
    }
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const bool t = truth(P.row(i).transpose());
      // sublevel_prob >= 0.5 exactly when mu <= gamma
      const bool p = mean[i] <= threshold;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      if (with_brier) {
        const double pr = sublevel_prob(mean[i], std::sqrt(var[i]), threshold);
        sq += (pr - (t ? 1.0 : 0.0)) * (pr - (t ? 1.0 : 0.0));
      }
    }
  });
  return {f1_from_counts(tp, fp, fn), with_brier ? sq / n : 0.0};
}

double brier(const Vector& probs, const Vector& outcomes) {
  if (probs.size() != outcomes.size()) throw std::invalid_argument("brier: length mismatch");
  if (probs.size() == 0) throw std::invalid_argument("brier: empty input");
  return (probs - outcomes).squaredNorm() / static_cast<double>(probs.size());
}

F1Score classification_f1(const Vector& probs, const Vector& outcomes, double threshold) {
  if (probs.size() != outcomes.size()) throw std::invalid_argument("classification_f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const bool p = probs[i] >= threshold, t = outcomes[i] == 1.0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  return f1_from_counts(tp, fp, fn);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int n, int train_size, std::uint64_t seed, int repeat,
                                                            int attempt) {
  if (train_size < 1 || train_size >= n) throw std::invalid_argument("train size must be in [1, n)");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const CounterRng rng = CounterRng(seed, 2).split(static_cast<std::uint64_t>(repeat) * 1000003ULL +
                                                  static_cast<std::uint64_t>(attempt));
  // Fisher-Yates with counter-indexed draws
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.bits(static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<int> train(idx.begin(), idx.begin() + train_size), test(idx.begin() + train_size, idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

SplitEvalResult repeated_split_eval(const std::vector<PreferenceRecord>& dataset, const Box& domain, int train_size,
                                    int repeats, const std::vector<SplitEvalConfig>& configs, std::uint64_t seed,
                                    int workers) {
  const int n = static_cast<int>(dataset.size());
  if (train_size < 1 || train_size >= n) throw std::invalid_argument("train size must lie in [1, dataset size)");
  if (repeats < 1) throw std::invalid_argument("at least one repeat is required");
  if (configs.empty()) throw std::invalid_argument("at least one model config is required");

  struct Split {
    std::vector<int> train, test;
    int redraws = 0;
  };
  std::vector<Split> splits(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    Split& s = splits[static_cast<std::size_t>(r)];
    for (int attempt = 0;; ++attempt) {
      auto [train, test] = split_indices(n, train_size, seed, r, attempt);
      int ones = 0;
      for (int i : test) ones += dataset[static_cast<std::size_t>(i)].choice;
      if (ones > 0 && ones < static_cast<int>(test.size())) {
        s.train = std::move(train);
        s.test = std::move(test);
        break;
      }
      ++s.redraws;
      if (attempt > 1000) throw std::runtime_error("could not draw a split with both choice classes in the test set");
    }
  }

  const std::size_t nc = configs.size();
  std::vector<SplitScore> scores(static_cast<std::size_t>(repeats) * nc);
  auto job = [&](std::size_t k) {
    const int r = static_cast<int>(k / nc);
    const SplitEvalConfig& cfg = configs[k % nc];
    const Split& s = splits[static_cast<std::size_t>(r)];
    std::vector<PreferenceRecord> train;
    for (int i : s.train) train.push_back(dataset[static_cast<std::size_t>(i)]);
    const Posterior post(fit_preference_model(train, domain, cfg.fit));
    std::vector<PairPoint> pairs;
    Vector outcome(static_cast<Eigen::Index>(s.test.size()));
    for (std::size_t t = 0; t < s.test.size(); ++t) {
      pairs.push_back(dataset[static_cast<std::size_t>(s.test[t])].pair);
      outcome[static_cast<Eigen::Index>(t)] = dataset[static_cast<std::size_t>(s.test[t])].choice;
    }
    const Vector p = predict_preference_prob(post, pairs);
    scores[k] = {cfg.name, r, brier(p, outcome), classification_f1(p, outcome).f1};
  };

  parallel_for(scores.size(), workers, job);

  SplitEvalResult result;
  result.scores = std::move(scores);
  for (const Split& s : splits) result.redrawn_splits += s.redraws;
  for (const SplitEvalConfig& cfg : configs) {
    std::vector<double> b, f;
    for (const SplitScore& s : result.scores)
      if (s.config == cfg.name) {
        b.push_back(s.brier);
        f.push_back(s.f1);
      }
    result.summary.push_back({cfg.name, mean(b), standard_error(b), mean(f), standard_error(f)});
  }
  return result;
}

}  // namespace mixgp
