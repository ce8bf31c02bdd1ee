#include "mixgp/numerics/linalg.hpp"

#include <cmath>
#include <sstream>

namespace mixgp {

Cholesky::Cholesky(const Matrix& A, JitterPolicy policy) {
  if (A.rows() != A.cols()) throw DimensionError("cholesky requires a square matrix");
  const Eigen::Index n = A.rows();
  if (n == 0) return;
  if (!A.allFinite()) throw FactorizationError("matrix has non-finite entries");
  const double scale = A.trace() / static_cast<double>(n);
  for (double c = policy.initial; c <= policy.max_relative * (1.0 + 1e-9);
       c = c == 0.0 ? std::min(1e-8, policy.max_relative) : c * 10.0) {
    Matrix Aj = A;
    Aj.diagonal().array() += c * scale;
    Eigen::LLT<Matrix> llt(Aj);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      L_ = llt.matrixL();
      jitter_ = c * scale;
      factor_ = c;
      return;
    }
    if (c == 0.0 && policy.max_relative == 0.0) break;
  }
  std::ostringstream msg;
  msg << "matrix of size " << n << " is not positive definite even with relative jitter "
      << policy.max_relative;
  throw FactorizationError(msg.str());
}

Matrix Cholesky::solve_lower(const Matrix& B) const {
  return L_.triangularView<Eigen::Lower>().solve(B);
}

Matrix Cholesky::solve_upper(const Matrix& B) const {
  return L_.transpose().triangularView<Eigen::Upper>().solve(B);
}

Matrix Cholesky::solve(const Matrix& B) const {
  if (B.rows() != L_.rows()) throw DimensionError("cholesky solve: right-hand side rows mismatch");
  return solve_upper(solve_lower(B));
}

Vector Cholesky::solve(const Vector& b) const {
  if (b.size() != L_.rows()) throw DimensionError("cholesky solve: right-hand side size mismatch");
  Vector t = L_.triangularView<Eigen::Lower>().solve(b);
  return L_.transpose().triangularView<Eigen::Upper>().solve(t);
}

double Cholesky::log_det() const { return 2.0 * L_.diagonal().array().log().sum(); }

Matrix cholesky_solve(const Matrix& A, const Matrix& B, JitterPolicy policy) {
  return Cholesky(A, policy).solve(B);
}

Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

Matrix cholesky_backward(const Matrix& L, const Matrix& L_bar) {
  // P = Phi(L^T Lbar): lower triangle with halved diagonal.
  Matrix P = L.transpose() * L_bar.triangularView<Eigen::Lower>().toDenseMatrix();
  P.triangularView<Eigen::StrictlyUpper>().setZero();
  P.diagonal() *= 0.5;
  // L^{-T} P L^{-1}
  Matrix M = L.transpose().triangularView<Eigen::Upper>().solve(P);
  M = L.transpose().triangularView<Eigen::Upper>().solve(M.transpose()).transpose();
  return symmetrize(M);
}

}  // namespace mixgp
