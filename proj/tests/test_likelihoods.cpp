#include "doctest.h"
#include "support.hpp"

#include "mixgp/likelihoods.hpp"
#include "mixgp/numerics/normal.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>

using namespace mixgp;
using namespace mixgp::testing;

namespace {

// Straight transcription of the distance-to-interval softmax, for comparison.
Vector reference_likert(double g, const std::vector<double>& cuts, double lapse) {
  const std::size_t l = cuts.size();
  std::vector<double> e(l);
  double z = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    const double lo = cuts[i];
    const double hi = i + 1 < l ? cuts[i + 1] : std::numeric_limits<double>::infinity();
    double d = 0.0;
    if (g < lo) d = lo - g;
    else if (g >= hi) d = g - hi;
    e[i] = std::exp(-d);
    z += e[i];
  }
  Vector p(static_cast<Eigen::Index>(l));
  for (std::size_t i = 0; i < l; ++i) p[static_cast<Eigen::Index>(i)] = (1 - lapse) * e[i] / z + lapse / l;
  return p;
}

}  // namespace

TEST_CASE("gaussian log likelihood") {
  CHECK(gaussian_log_lik(1.0, 1.0, 1.0) == doctest::Approx(-0.918938533204673).epsilon(1e-14));
  CHECK(gaussian_log_lik(2.0, 1.0, 1.0) == doctest::Approx(-1.418938533204673).epsilon(1e-14));
  CHECK(gaussian_log_lik(0.0, 0.0, 0.1) == doctest::Approx(-0.5 * std::log(2 * M_PI * 0.01)).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_log_lik(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("bernoulli probit log likelihood") {
  CHECK(bernoulli_probit_log_lik(1, 0.0) == doctest::Approx(std::log(0.5)));
  CHECK(bernoulli_probit_log_lik(0, 0.0) == doctest::Approx(std::log(0.5)));
  const boost::math::normal_distribution<double> ref;
  const double expected = std::log(boost::math::cdf(ref, -10.0));
  CHECK(bernoulli_probit_log_lik(1, -10.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::isfinite(bernoulli_probit_log_lik(0, 60.0)));
}

TEST_CASE("likert probabilities") {
  const auto lik0 = LikertLikelihood::from_cut_points(Vector{{0.0, 0.5, 1.0}}, 0.0);
  const Vector p0 = lik0.probs(0.25);
  CHECK(p0[0] == doctest::Approx(0.44421).epsilon(1e-4));
  CHECK(p0[1] == doctest::Approx(0.34596).epsilon(1e-4));
  CHECK(p0[2] == doctest::Approx(0.20983).epsilon(1e-4));
  CHECK((p0 - reference_likert(0.25, {0.0, 0.5, 1.0}, 0.0)).cwiseAbs().maxCoeff() < 1e-14);

  const auto lik = LikertLikelihood::from_cut_points(Vector{{0.0, 0.5, 1.0}}, 0.1);
  const Vector p = lik.probs(0.25);
  CHECK(p[0] == doctest::Approx(0.43312).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.34470).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(0.22218).epsilon(1e-4));

  // interior of interval i -> option i is the argmax
  for (double g : {0.1, 0.7, 1.6, 5.0}) {
    const int expect = g < 0.5 ? 0 : (g < 1.0 ? 1 : 2);
    Eigen::Index arg;
    lik.probs(g).maxCoeff(&arg);
    CHECK(arg == expect);
  }
  CHECK_THROWS_AS(lik.probs(-0.1), std::invalid_argument);
  CHECK_THROWS(LikertLikelihood::from_cut_points(Vector{{0.0, 2.5}}));
  CHECK_THROWS(LikertLikelihood::from_cut_points(Vector{{0.1, 0.5}}));
}

TEST_CASE("likert property sweep") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = 2 + trial % 6;
    const double lapse = (trial % 3) * 0.1;
    const auto lik = LikertLikelihood::from_raw(random_vector(rng, l - 1, 4.0), lapse);
    const Vector cuts = lik.cut_points();
    CHECK(cuts[0] == 0.0);
    for (int i = 0; i + 1 < l; ++i) {
      CHECK(cuts[i + 1] - cuts[i] > 0.0);
      CHECK(cuts[i + 1] - cuts[i] <= LikertLikelihood::max_gap);
    }
    std::uniform_real_distribution<double> u(0.0, cuts[l - 1] + 2.0);
    for (int k = 0; k < 5; ++k) {
      const Vector p = lik.probs(u(rng));
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
      CHECK(p.minCoeff() >= lapse / l - 1e-15);
    }
    for (int i = 1; i < l; ++i) {
      const Vector a = lik.probs(cuts[i] - 1e-9), b = lik.probs(cuts[i] + 1e-9);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  // extreme raw values still respect the gap bound
  const auto wide = LikertLikelihood::from_raw(Vector::Constant(3, 800.0));
  CHECK((wide.increments().array() <= 2.0).all());
  CHECK((wide.increments().array() >= 0.0).all());
}

TEST_CASE("likert default cut points are equally spaced") {
  const LikertLikelihood lik(4);
  const Vector c = lik.cut_points();
  for (int i = 0; i < 4; ++i) CHECK(c[i] == doctest::Approx(2.0 * i / 4.0));
  CHECK(lik.lapse() == 0.1);
}

TEST_CASE("likert log_prob gradients") {
  std::mt19937_64 rng(8);
  const auto lik = LikertLikelihood::from_raw(random_vector(rng, 3), 0.1);
  for (int y = 0; y < 4; ++y)
    for (double g : {0.05, 0.4, 1.3, 2.9, 4.2}) {
      double ds = 0.0;
      Vector draw = Vector::Zero(3);
      const double lp = lik.log_prob(y, g, &ds, &draw);
      CHECK(lp == doctest::Approx(std::log(lik.probs(g)[y])).epsilon(1e-12));
      const double h = 1e-6;
      const double fd = (lik.log_prob(y, g + h) - lik.log_prob(y, g - h)) / (2 * h);
      CHECK(std::abs(ds - fd) < 1e-6);
      auto f = [&](const Vector& raw) { return LikertLikelihood::from_raw(raw, 0.1).log_prob(y, g); };
      for (Eigen::Index i = 0; i < 3; ++i)
        CHECK(std::abs(draw[i] - central_difference(f, lik.raw(), i, 1e-6)) < 1e-6);
    }
}

TEST_CASE("map_raw_likert") {
  const int expected[] = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  for (int r = 1; r <= 9; ++r) CHECK(map_raw_likert(r) == expected[r - 1]);
  CHECK_THROWS_AS(map_raw_likert(0), std::out_of_range);
  CHECK_THROWS_AS(map_raw_likert(10), std::out_of_range);
}

TEST_CASE("expected log likelihood") {
  const GaussHermite gh(20);
  std::mt19937_64 rng(6);
  const Points X = random_points(rng, 6, 1);
  const Vector y = random_vector(rng, 6);
  const Vector sd = Vector::LinSpaced(6, 0.1, 1.5);
  const auto gb = ObservationBlock::gaussian(X, y, sd);
  const Vector mu = random_vector(rng, 6);
  const Vector var = Vector::LinSpaced(6, 0.01, 2.0);
  const LikelihoodContext ctx{&gh, nullptr};
  double closed = 0.0;
  for (int i = 0; i < 6; ++i)
    closed += -0.5 * std::log(2 * M_PI * sd[i] * sd[i]) - ((y[i] - mu[i]) * (y[i] - mu[i]) + var[i]) / (2 * sd[i] * sd[i]);
  CHECK(expected_log_lik(gb, mu, var, ctx) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(std::abs(gaussian_expected_log_lik_quadrature(gb, mu, var, gh) - closed) < 1e-8);

  const auto bb = ObservationBlock::bernoulli(Points::Zero(1, 1), Vector::Ones(1));
  CHECK(expected_log_lik(bb, Vector::Zero(1), Vector::Zero(1), ctx) == doctest::Approx(std::log(0.5)));
  CHECK(expected_log_lik(bb, Vector::Zero(1), Vector::Constant(1, 1e-14), ctx) == doctest::Approx(std::log(0.5)));

  const ObservationBlock empty = ObservationBlock::bernoulli(Points(0, 1), Vector());
  CHECK(expected_log_lik(empty, Vector(), Vector(), ctx) == 0.0);

  CHECK_THROWS_AS(expected_log_lik(bb, Vector::Zero(2), Vector::Zero(2), ctx), DimensionError);
  const auto lb = ObservationBlock::likert(Points::Zero(1, 2), Vector::Zero(1));
  CHECK_THROWS_AS(expected_log_lik(lb, Vector::Zero(1), Vector::Ones(1), ctx), std::invalid_argument);
}

TEST_CASE("expected log likelihood gradients") {
  const GaussHermite gh(20);
  std::mt19937_64 rng(12);
  const auto lik = LikertLikelihood::from_raw(random_vector(rng, 2, 0.5), 0.1);
  const LikelihoodContext ctx{&gh, &lik};
  const Eigen::Index n = 5;
  const Points X = random_points(rng, n, 2);
  const ObservationBlock blocks[] = {
      ObservationBlock::gaussian(X, random_vector(rng, n), Vector::Constant(n, 0.4)),
      ObservationBlock::bernoulli(X, Vector{{1, 0, 1, 1, 0}}),
      ObservationBlock::likert(X, Vector{{0, 1, 2, 1, 0}}),
  };
  const Vector mu = random_vector(rng, n);
  const Vector var = Vector::LinSpaced(n, 0.2, 1.8);
  for (const auto& b : blocks) {
    BlockGradient g;
    expected_log_lik(b, mu, var, ctx, &g);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto fm = [&](const Vector& m) { return expected_log_lik(b, m, var, ctx); };
      auto fv = [&](const Vector& v) { return expected_log_lik(b, mu, v, ctx); };
      CHECK(relative_error(g.d_mean[i], central_difference(fm, mu, i)) < 1e-4);
      CHECK(relative_error(g.d_var[i], central_difference(fv, var, i)) < 1e-4);
    }
    if (b.kind == LikelihoodKind::likert) {
      auto fr = [&](const Vector& raw) {
        const auto l2 = LikertLikelihood::from_raw(raw, 0.1);
        return expected_log_lik(b, mu, var, LikelihoodContext{&gh, &l2});
      };
      for (Eigen::Index i = 0; i < 2; ++i)
        CHECK(relative_error(g.d_likert_raw[i], central_difference(fr, lik.raw(), i)) < 1e-4);
    }
  }
}

TEST_CASE("observation block validation") {
  CHECK_THROWS_AS(ObservationBlock::bernoulli(Points::Zero(2, 1), Vector::Constant(2, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(ObservationBlock::bernoulli(Points::Zero(3, 1), Vector::Ones(2)), std::invalid_argument);
  CHECK_THROWS_AS(ObservationBlock::gaussian(Points::Zero(1, 1), Vector::Ones(1), Vector::Zero(1)),
                  std::invalid_argument);
  const auto lb = ObservationBlock::likert(Points::Zero(1, 2), Vector::Constant(1, 3));
  CHECK_THROWS_AS(lb.validate(3), std::invalid_argument);
  CHECK(likelihood_kind_from_string(to_string(LikelihoodKind::likert)) == LikelihoodKind::likert);
  CHECK_THROWS(likelihood_kind_from_string("poisson"));
}
