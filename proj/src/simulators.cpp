#include "mixgp/simulators.hpp"

#include "mixgp/numerics/normal.hpp"
#include "mixgp/numerics/sobol.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixgp {

Matrix ellipsoid_weights() {
  Matrix W(3, 3);
  W << 0.00345447, -0.00344695, -0.00144475,
      -0.00344695, 0.00556409, 0.00252343,
      -0.00144475, 0.00252343, 0.00466492;
  return W;
}

double default_latent_threshold() { return normal_quantile(0.75); }

Objective make_objective(std::string_view name) {
  Objective o;
  o.name = std::string(name);
  if (name == "discrimination") {
    o.kind = ObjectiveKind::discrimination;
    o.dim = 2;
    o.domain = Box::uniform(2, -1.0, 1.0);
  } else if (name.starts_with("normball-") && name.ends_with("d")) {
    const std::string digits(name.substr(9, name.size() - 10));
    int d = 0;
    try {
      std::size_t used = 0;
      d = std::stoi(digits, &used);
      if (used != digits.size()) d = 0;
    } catch (const std::exception&) {
      d = 0;
    }
    if (d < 1 || d > 16) throw std::invalid_argument("unsupported objective: " + o.name);
    o.kind = ObjectiveKind::normball;
    o.dim = d;
    o.domain = Box::uniform(d, -1.0, 1.0);
  } else if (name == "ellipsoid") {
    o.kind = ObjectiveKind::ellipsoid;
    o.dim = 3;
    o.domain = Box(Vector{{-30.0, 0.0, 0.0}}, Vector{{50.0, 60.0, 75.0}});
    o.link = Link::sigmoid;
  } else if (name == "identity-preference") {
    o.kind = ObjectiveKind::identity_preference;
    o.dim = 1;
    o.domain = Box::uniform(1, -2.0, 2.0);
  } else {
    throw std::invalid_argument("unknown objective: " + o.name);
  }
  return o;
}

double Objective::latent(const Vector& x) const {
  if (x.size() != dim) throw DimensionError("objective " + name + " expects " + std::to_string(dim) + " coordinates");
  if (!domain.contains(x, 1e-9)) throw std::out_of_range("point outside the domain of " + name);
  switch (kind) {
    case ObjectiveKind::discrimination: {
      const double a = x[0];
      const double b = 0.2 * a - 1.0;
      return (1.0 + x[1]) / (0.05 + 0.4 * a * a * b * b);
    }
    case ObjectiveKind::normball: return 2.0 * x.norm();
    case ObjectiveKind::ellipsoid: {
      static const Matrix W = ellipsoid_weights();
      return x.dot(W * x);
    }
    case ObjectiveKind::identity_preference: return x[0];
  }
  return 0.0;
}

double Objective::probability(const Vector& x) const {
  const double f = latent(x);
  return link == Link::sigmoid ? sigmoid(f) : normal_cdf(f);
}

double Objective::truth_threshold() const {
  return link == Link::sigmoid ? std::log(3.0) : default_latent_threshold();
}

int BernoulliResponder::respond(const Vector& x, std::uint64_t trial) const {
  return rng.uniform(trial) < objective.probability(x) ? 1 : 0;
}

int synthetic_likert_rating(double strength) {
  if (strength < 0.5) return 0;
  if (strength < 1.0) return 1;
  return 2;
}

PreferenceResponse PreferenceResponder::respond(double x1, double x2, std::uint64_t trial) const {
  return {rng.uniform(trial) < normal_cdf(x1 - x2) ? 1 : 0, synthetic_likert_rating(std::abs(x1 - x2))};
}

namespace {

// n Sobol points on the face where `axis` is pinned to `value`. Index 0 of
// the sequence is skipped so faces do not share their corner.
Points face_samples(const Box& domain, int axis, double value, int n) {
  const int d = domain.dim();
  Points out(n, d);
  if (d == 1) {
    for (int i = 0; i < n; ++i) out(i, 0) = value;
    return out;
  }
  Vector lo(d - 1), hi(d - 1);
  for (int j = 0, k = 0; j < d; ++j) {
    if (j == axis) continue;
    lo[k] = domain.lower[j];
    hi[k] = domain.upper[j];
    ++k;
  }
  const Box face(lo, hi);
  const Points P = sobol(n, face, SobolOptions{false, 0, 1});
  for (int i = 0; i < n; ++i)
    for (int j = 0, k = 0; j < d; ++j) out(i, j) = j == axis ? value : P(i, k++);
  return out;
}

}  // namespace

Points constraint_locations(const Objective& o) {
  std::vector<Vector> rows;
  switch (o.kind) {
    case ObjectiveKind::discrimination: {
      const Vector xs = Vector::LinSpaced(10, -1.0, 1.0);
      for (double x2 : {-1.0, 1.0})
        for (Eigen::Index i = 0; i < xs.size(); ++i) rows.push_back(Vector{{xs[i], x2}});
      break;
    }
    case ObjectiveKind::normball: {
      rows.push_back(Vector::Zero(o.dim));
      for (int axis = 0; axis < o.dim; ++axis)
        for (double v : {-1.0, 1.0}) {
          const Points F = face_samples(o.domain, axis, v, 5);
          for (Eigen::Index i = 0; i < F.rows(); ++i) rows.push_back(F.row(i).transpose());
        }
      break;
    }
    case ObjectiveKind::ellipsoid: {
      rows.push_back(Vector::Zero(3));
      const std::pair<int, double> faces[] = {{0, -30.0}, {0, 50.0}, {1, 60.0}, {2, 75.0}};
      for (const auto& [axis, v] : faces) {
        const Points F = face_samples(o.domain, axis, v, 5);
        for (Eigen::Index i = 0; i < F.rows(); ++i) rows.push_back(F.row(i).transpose());
      }
      break;
    }
    case ObjectiveKind::identity_preference:
      break;
  }
  Points X(static_cast<Eigen::Index>(rows.size()), o.dim);
  for (std::size_t i = 0; i < rows.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return X;
}

double constraint_target(const Objective& o, const Vector& x) {
  if (o.link == Link::sigmoid) return normal_quantile(std::min(o.probability(x), 0.999));
  return o.latent(x);
}

ConstraintSet make_constraints(const Objective& o) {
  Points X = constraint_locations(o);
  Vector y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = constraint_target(o, X.row(i).transpose());
  return make_constraint_set(std::move(X), std::move(y));
}

}  // namespace mixgp
