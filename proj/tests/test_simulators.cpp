#include "doctest.h"
#include "support.hpp"

#include "mixgp/numerics/sobol.hpp"
#include "mixgp/numerics/normal.hpp"
#include "mixgp/simulators.hpp"

#include <cmath>

using namespace mixgp;
using namespace mixgp::testing;

TEST_CASE("discrimination objective") {
  const Objective o = make_objective("discrimination");
  CHECK(o.dim == 2);
  for (double x1 : {-1.0, -0.3, 0.0, 0.7, 1.0}) {
    CHECK(o.latent(Vector{{x1, -1.0}}) == 0.0);
    CHECK(o.probability(Vector{{x1, -1.0}}) == 0.5);
  }
  CHECK(o.latent(Vector{{0.0, 1.0}}) == doctest::Approx(40.0).epsilon(1e-12));
  const double x1 = 0.4, x2 = 0.2;
  CHECK(o.latent(Vector{{x1, x2}}) ==
        doctest::Approx((1 + x2) / (0.05 + 0.4 * x1 * x1 * (0.2 * x1 - 1) * (0.2 * x1 - 1))).epsilon(1e-14));
  CHECK_THROWS_AS(o.latent(Vector{{0.0, 1.5}}), std::out_of_range);
}

TEST_CASE("norm ball objective") {
  const Objective o2 = make_objective("normball-2d");
  const Objective o4 = make_objective("normball-4d");
  CHECK(o2.dim == 2);
  CHECK(o4.dim == 4);
  CHECK(o2.latent(Vector::Zero(2)) == 0.0);
  CHECK(o4.latent(Vector{{0.5, 0.5, 0.5, 0.5}}) == doctest::Approx(2.0));
  // membership radius Phi^{-1}(0.75) / 2
  const double r = default_latent_threshold() / 2.0;
  CHECK(r == doctest::Approx(0.33724).epsilon(1e-5));
  CHECK(o2.in_truth_sublevel(Vector{{r - 1e-9, 0.0}}));
  CHECK(!o2.in_truth_sublevel(Vector{{r + 1e-9, 0.0}}));
  CHECK_THROWS(make_objective("normball-0d"));
  CHECK_THROWS(make_objective("sphere"));
}

TEST_CASE("ellipsoid objective") {
  const Objective o = make_objective("ellipsoid");
  CHECK(o.dim == 3);
  CHECK(o.link == Link::sigmoid);
  CHECK(o.latent(Vector::Zero(3)) == 0.0);
  CHECK(o.probability(Vector::Zero(3)) == 0.5);
  CHECK(o.truth_threshold() == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  const Matrix W = ellipsoid_weights();
  CHECK((W - W.transpose()).norm() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues().minCoeff() > 0.0);
  const Vector x{{10.0, 20.0, 5.0}};
  CHECK(o.latent(x) == doctest::Approx(x.dot(W * x)).epsilon(1e-14));

  const Points S = sobol(1 << 20, o.domain, SobolOptions{true, 7, 0});
  long inside = 0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) inside += o.in_truth_sublevel(S.row(i).transpose());
  const double frac = static_cast<double>(inside) / static_cast<double>(S.rows());
  MESSAGE("ellipsoid sublevel volume fraction " << frac);
  CHECK(frac >= 0.015);
  CHECK(frac <= 0.025);
}

TEST_CASE("every objective contains the origin in its truth set") {
  for (const char* name : {"discrimination", "normball-2d", "normball-4d", "ellipsoid"}) {
    const Objective o = make_objective(name);
    Vector x = Vector::Zero(o.dim);
    if (o.kind == ObjectiveKind::discrimination) x[1] = -1.0;
    CHECK(o.in_truth_sublevel(x));
  }
}

TEST_CASE("Bernoulli responder frequency") {
  const Objective o = make_objective("normball-2d");
  const BernoulliResponder resp{o, CounterRng(12, 1)};
  const Vector x{{0.2, -0.1}};
  long ones = 0;
  constexpr int n = 100000;
  for (int t = 0; t < n; ++t) ones += resp.respond(x, static_cast<std::uint64_t>(t));
  CHECK(std::abs(static_cast<double>(ones) / n - o.probability(x)) < 0.005);
  // pure function of (seed, trial, x)
  CHECK(resp.respond(x, 77) == BernoulliResponder{o, CounterRng(12, 1)}.respond(x, 77));

  const Objective e = make_objective("ellipsoid");
  const BernoulliResponder er{e, CounterRng(1, 1)};
  long eones = 0;
  for (int t = 0; t < n; ++t) eones += er.respond(Vector::Zero(3), static_cast<std::uint64_t>(t));
  CHECK(std::abs(static_cast<double>(eones) / n - 0.5) < 0.005);
}

TEST_CASE("preference responder") {
  CHECK(synthetic_likert_rating(0.0) == 0);
  CHECK(synthetic_likert_rating(0.49) == 0);
  CHECK(synthetic_likert_rating(0.5) == 1);
  CHECK(synthetic_likert_rating(0.7) == 1);
  CHECK(synthetic_likert_rating(1.0) == 2);
  CHECK(synthetic_likert_rating(3.0) == 2);
  const PreferenceResponder resp{CounterRng(3, 2)};
  CHECK(resp.respond(0.4, 1.1, 0).rating == 1);
  CHECK(resp.respond(-1.5, 1.5, 0).rating == 2);
  long ones = 0;
  constexpr int n = 100000;
  for (int t = 0; t < n; ++t) {
    const auto r = resp.respond(0.3, 0.3, static_cast<std::uint64_t>(t));
    CHECK(r.rating == 0);
    ones += r.choice;
  }
  CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.005);
  long ones2 = 0;
  for (int t = 0; t < n; ++t) ones2 += resp.respond(0.8, 0.0, static_cast<std::uint64_t>(t)).choice;
  CHECK(std::abs(static_cast<double>(ones2) / n - normal_cdf(0.8)) < 0.005);
}

TEST_CASE("constraint locations") {
  const Objective d = make_objective("discrimination");
  const ConstraintSet cd = make_constraints(d);
  CHECK(cd.size() == 20);
  int low = 0, high = 0;
  for (Eigen::Index i = 0; i < cd.size(); ++i) {
    low += cd.X(i, 1) == -1.0;
    high += cd.X(i, 1) == 1.0;
    CHECK(cd.y[i] == doctest::Approx(d.latent(cd.X.row(i).transpose())));
    CHECK(cd.noise_sd[i] == doctest::Approx(constraint_noise(cd.y[i])));
  }
  CHECK(low == 10);
  CHECK(high == 10);
  CHECK(cd.X.col(0).minCoeff() == -1.0);
  CHECK(cd.X.col(0).maxCoeff() == 1.0);

  for (int dim : {2, 4}) {
    const Objective o = make_objective("normball-" + std::to_string(dim) + "d");
    const ConstraintSet c = make_constraints(o);
    CHECK(c.size() == 1 + 5 * 2 * dim);
    CHECK(c.X.row(0).norm() == 0.0);
    CHECK(c.y[0] == 0.0);
    CHECK(c.noise_sd[0] == 0.1);
    for (Eigen::Index i = 1; i < c.size(); ++i) {
      CHECK(c.X.row(i).cwiseAbs().maxCoeff() == 1.0);
      CHECK(c.y[i] == doctest::Approx(2.0 * c.X.row(i).norm()));
    }
    c.validate(o.domain);
  }

  const Objective e = make_objective("ellipsoid");
  const ConstraintSet ce = make_constraints(e);
  CHECK(ce.size() == 21);
  CHECK(ce.X.row(0).norm() == 0.0);
  int faces[4] = {0, 0, 0, 0};
  for (Eigen::Index i = 1; i < ce.size(); ++i) {
    faces[0] += ce.X(i, 0) == -30.0;
    faces[1] += ce.X(i, 0) == 50.0;
    faces[2] += ce.X(i, 1) == 60.0;
    faces[3] += ce.X(i, 2) == 75.0;
    const double s = e.probability(ce.X.row(i).transpose());
    CHECK(ce.y[i] == doctest::Approx(normal_quantile(std::min(s, 0.999))).epsilon(1e-12));
  }
  for (int f : faces) CHECK(f == 5);
  ce.validate(e.domain);
}
