#pragma once

#include "mixgp/numerics/types.hpp"

namespace mixgp {

/// Diagonal jitter added before factorization, relative to mean(diag(A)).
/// Starts at `initial` and escalates x10 up to `max_relative`. An initial
/// value of 0 tries the bare matrix first and then continues from 1e-8.
struct JitterPolicy {
  double initial = 1e-8;
  double max_relative = 1e-4;
};

class Cholesky {
public:
  // Throws FactorizationError if A + jitter I is not SPD at the largest jitter.
  explicit Cholesky(const Matrix& A, JitterPolicy policy = {});

  const Matrix& lower() const { return L_; }
  Eigen::Index size() const { return L_.rows(); }
  // Absolute diagonal jitter that was added.
  double jitter() const { return jitter_; }
  // Relative jitter factor c with jitter = c * trace(A) / n.
  double jitter_factor() const { return factor_; }

  Matrix solve(const Matrix& B) const;
  Vector solve(const Vector& b) const;
  // L^{-1} B
  Matrix solve_lower(const Matrix& B) const;
  // L^{-T} B
  Matrix solve_upper(const Matrix& B) const;
  double log_det() const;

private:
  Matrix L_;
  double jitter_ = 0.0;
  double factor_ = 0.0;
};

/// Jitter-free first attempt, escalating from 1e-8 only when that fails.
inline constexpr JitterPolicy kExactFirst{0.0, 1e-4};

/// A^{-1} B for SPD A, with the jitter policy applied.
Matrix cholesky_solve(const Matrix& A, const Matrix& B, JitterPolicy policy = kExactFirst);

/// Reverse-mode adjoint of A = L L^T: given dE/dL (lower triangle used),
/// returns the symmetric dE/dA.
Matrix cholesky_backward(const Matrix& L, const Matrix& L_bar);

Matrix symmetrize(const Matrix& A);

}  // namespace mixgp
