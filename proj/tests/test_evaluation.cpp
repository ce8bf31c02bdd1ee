#include "doctest.h"
#include "support.hpp"

#include "mixgp/evaluation.hpp"
#include "mixgp/numerics/sobol.hpp"
#include "mixgp/simulators.hpp"

#include <cmath>
#include <set>

using namespace mixgp;
using namespace mixgp::testing;

TEST_CASE("F1 from counts") {
  const F1Score s = f1_from_counts(8, 2, 8);
  CHECK(s.precision == doctest::Approx(0.8));
  CHECK(s.recall == doctest::Approx(0.5));
  CHECK(s.f1 == doctest::Approx(2 * 0.8 * 0.5 / 1.3));
  CHECK(f1_from_counts(0, 0, 5).f1 == 0.0);
  CHECK(f1_from_counts(0, 5, 0).f1 == 0.0);
}

TEST_CASE("level-set F1 on the norm ball") {
  const Objective o = make_objective("normball-2d");
  const double r = default_latent_threshold() / 2.0;
  const PointPredicate truth = [&](const Vector& x) { return o.in_truth_sublevel(x); };
  const PointPredicate shrunk = [&](const Vector& x) { return x.norm() <= 0.9 * r; };
  const PointPredicate outside = [&](const Vector& x) { return !o.in_truth_sublevel(x); };

  CHECK(f1_levelset(truth, truth, o.domain, 4096, 0).f1 == 1.0);
  CHECK(f1_levelset(outside, truth, o.domain, 4096, 0).f1 == 0.0);
  CHECK(f1_levelset([](const Vector&) { return false; }, truth, o.domain, 4096, 0).f1 == 0.0);

  const double expected = 2 * 0.81 / 1.81;
  std::vector<double> f1s;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const F1Score s = f1_levelset(shrunk, truth, o.domain, 1000000, seed);
    CHECK(s.precision == 1.0);
    CHECK(std::abs(s.recall - 0.81) < 0.005);
    CHECK(std::abs(s.f1 - expected) < 0.005);
    f1s.push_back(s.f1);
  }
  const double m = mean(f1s);
  double ss = 0.0;
  for (double v : f1s) ss += (v - m) * (v - m);
  CHECK(std::sqrt(ss / (f1s.size() - 1)) < 0.002);
}

TEST_CASE("posterior scoring uses the sublevel probability") {
  // constant-mean model: everything predicted inside when mean < threshold
  VariationalGP model({KernelKind::rbf, 2}, KernelParams::isotropic(2, 0.3, 1.0), Points::Zero(1, 2),
                      MeanMode::fixed_constant, -5.0);
  const Posterior post(model);
  const Objective o = make_objective("normball-2d");
  const PointPredicate truth = [&](const Vector& x) { return o.in_truth_sublevel(x); };
  const LevelSetScores s = score_levelset(post, 0.5, truth, o.domain, 8192, 1);
  CHECK(s.f1.recall == 1.0);
  const double vol = M_PI * std::pow(default_latent_threshold() / 2.0, 2) / 4.0;
  CHECK(std::abs(s.f1.precision - vol) < 0.01);
  // probabilities near 1 everywhere: Brier about the outside fraction
  CHECK(std::abs(s.brier - (1.0 - vol)) < 0.01);
}

TEST_CASE("Brier score") {
  CHECK(brier(Vector{{1.0, 0.0}}, Vector{{1.0, 0.0}}) == 0.0);
  CHECK(brier(Vector::Constant(7, 0.5), Vector{{1, 0, 1, 1, 0, 0, 1}}) == 0.25);
  CHECK(brier(Vector{{0.8, 0.3}}, Vector{{1.0, 0.0}}) == doctest::Approx(0.065).epsilon(1e-14));
  CHECK_THROWS_AS(brier(Vector{{0.8, 0.3}}, Vector{{1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(brier(Vector(), Vector()), std::invalid_argument);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vector p = random_points(rng, 10, 1, 0, 1).col(0);
    const Vector o = (random_points(rng, 10, 1, 0, 1).col(0).array() > 0.5).cast<double>();
    const double b = brier(p, o);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    const F1Score f = classification_f1(p, o);
    CHECK(f.f1 >= 0.0);
    CHECK(f.f1 <= 1.0);
  }
  const Vector o{{1, 0, 1, 0}};
  CHECK(classification_f1(o, o).f1 == 1.0);
}

TEST_CASE("split indices") {
  const auto [tr, te] = split_indices(50, 20, 3, 4, 0);
  CHECK(tr.size() == 20);
  CHECK(te.size() == 30);
  std::set<int> all(tr.begin(), tr.end());
  all.insert(te.begin(), te.end());
  CHECK(all.size() == 50);
  CHECK(split_indices(50, 20, 3, 4, 0) == split_indices(50, 20, 3, 4, 0));
  CHECK(split_indices(50, 20, 3, 4, 0) != split_indices(50, 20, 3, 5, 0));
  CHECK(split_indices(50, 20, 3, 4, 0) != split_indices(50, 20, 3, 4, 1));
  CHECK_THROWS_AS(split_indices(10, 10, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("repeated split evaluation") {
  PreferenceResponder resp{CounterRng(9, 1)};
  const Points S = sobol(60, Box::uniform(2, -2, 2), SobolOptions{true, 9, 0});
  std::vector<PreferenceRecord> data;
  for (int i = 0; i < 60; ++i) {
    const auto r = resp.respond(S(i, 0), S(i, 1), static_cast<std::uint64_t>(i));
    data.push_back({{Vector::Constant(1, S(i, 0)), Vector::Constant(1, S(i, 1))}, r.choice, r.rating, std::nullopt});
  }
  SplitEvalConfig a{"mixed", {}};
  a.fit.fit.iterations = 60;
  a.fit.model.num_inducing = 20;
  SplitEvalConfig b = a;
  b.name = "mixed-again";
  const SplitEvalResult r = repeated_split_eval(data, Box::uniform(1, -2, 2), 20, 2, {a, b}, 4, 2);
  REQUIRE(r.scores.size() == 4);
  // identical configs on the same split give identical scores
  CHECK(r.scores[0].config == "mixed");
  CHECK(r.scores[1].config == "mixed-again");
  CHECK(r.scores[0].brier == r.scores[1].brier);
  CHECK(r.scores[0].f1 == r.scores[1].f1);
  CHECK(r.scores[2].repeat == 1);
  REQUIRE(r.summary.size() == 2);
  CHECK(r.summary[0].brier_mean == doctest::Approx((r.scores[0].brier + r.scores[2].brier) / 2));
  CHECK(r.summary[0].brier_se ==
        doctest::Approx(std::abs(r.scores[0].brier - r.scores[2].brier) / 2.0));

  const SplitEvalResult serial = repeated_split_eval(data, Box::uniform(1, -2, 2), 20, 2, {a, b}, 4, 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(serial.scores[i].brier == r.scores[i].brier);

  CHECK_THROWS_AS(repeated_split_eval(data, Box::uniform(1, -2, 2), 60, 1, {a}, 0), std::invalid_argument);
}

TEST_CASE("mean and standard error") {
  CHECK(mean({1.0, 2.0, 3.0}) == 2.0);
  CHECK(standard_error({1.0, 2.0, 3.0}) == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(standard_error({4.0}) == 0.0);
}
