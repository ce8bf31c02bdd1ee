#include "mixgp/numerics/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace mixgp {

GaussHermite::GaussHermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Matrix J = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
  nodes_ = eig.eigenvalues();
  weights_ = eig.eigenvectors().row(0).transpose().array().square();
  weights_ /= weights_.sum();
  // The rule is symmetric; enforce it exactly so odd moments vanish.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double n = 0.5 * (nodes_[j] - nodes_[i]);
    const double w = 0.5 * (weights_[i] + weights_[j]);
    nodes_[i] = -n;
    nodes_[j] = n;
    weights_[i] = weights_[j] = w;
  }
  if (order % 2 == 1) nodes_[order / 2] = 0.0;
}

}  // namespace mixgp
