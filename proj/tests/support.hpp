#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Eigenvalues>

#include "expint/linalg.hpp"

namespace expint::testing {

inline double rel_err(const Vector& got, const Vector& want) {
  const double scale = want.norm();
  return scale == 0.0 ? got.norm() : (got - want).norm() / scale;
}

inline Matrix random_matrix(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix M(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) M(i, j) = N(rng);
  return M;
}

inline Vector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

/**
 * @brief Symmetric negative semidefinite part with spectrum in [-scale, 0]
 *        plus a skew part of relative size @p skew.
 */
inline Matrix random_stable(Index n, std::mt19937_64& rng, double scale = 10.0,
                            double skew = 0.05) {
  const Matrix G = random_matrix(n, rng);
  Matrix S = -(G * G.transpose());
  S *= scale / Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues().cwiseAbs().maxCoeff();
  const Matrix K = random_matrix(n, rng);
  return S + skew * scale / std::sqrt(static_cast<double>(n)) * 0.5 * (K - K.transpose());
}

inline double spectral_radius(const Matrix& A) {
  return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Column-by-column assembly of an operator.
inline Matrix assemble(MatrixFreeOperator& op) {
  Matrix M(op.dim(), op.dim());
  Vector e = Vector::Zero(op.dim());
  for (Index j = 0; j < op.dim(); ++j) {
    e[j] = 1.0;
    M.col(j) = op(e);
    e[j] = 0.0;
  }
  return M;
}

/// Second-difference matrix on n interior points of [0, 1] with zero boundary values.
inline Matrix dirichlet_laplacian(Index n) {
  const double h = 1.0 / static_cast<double>(n + 1);
  Matrix A = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    A(i, i) = -2.0 / (h * h);
    if (i > 0) A(i, i - 1) = 1.0 / (h * h);
    if (i + 1 < n) A(i, i + 1) = 1.0 / (h * h);
  }
  return A;
}

}  // namespace expint::testing
