/**
 * @file matrix_function.hpp
 * @brief Dense matrix exponential and phi-functions for small matrices.
 *
 * These are the kernels behind the Hessenberg exponentials in the Krylov
 * engine and the Leja divided differences, and the reference oracle in tests.
 * Everything is templated on the scalar type of the Eigen expression.
 */
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "expint/linalg.hpp"

namespace expint {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Scalar>
Scalar norm1(const DenseMatrix<Scalar>& M) {
  if (M.size() == 0) return Scalar(0);
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename Scalar, std::size_t N>
DenseMatrix<Scalar> pade_low(const DenseMatrix<Scalar>& A, const std::array<double, N>& b) {
  // Degrees 3, 5, 7, 9: U collects odd powers, V even powers.
  const Index n = A.rows();
  const DenseMatrix<Scalar> I = DenseMatrix<Scalar>::Identity(n, n);
  const DenseMatrix<Scalar> A2 = A * A;
  DenseMatrix<Scalar> power = I;
  DenseMatrix<Scalar> U_inner = Scalar(b[1]) * I;
  DenseMatrix<Scalar> V = Scalar(b[0]) * I;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * A2;
    V += Scalar(b[k]) * power;
    U_inner += Scalar(b[k + 1]) * power;
  }
  const DenseMatrix<Scalar> U = A * U_inner;
  return (V - U).partialPivLu().solve(V + U);
}

template <typename Scalar>
DenseMatrix<Scalar> pade13(const DenseMatrix<Scalar>& A) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const Index n = A.rows();
  const DenseMatrix<Scalar> I = DenseMatrix<Scalar>::Identity(n, n);
  const DenseMatrix<Scalar> A2 = A * A;
  const DenseMatrix<Scalar> A4 = A2 * A2;
  const DenseMatrix<Scalar> A6 = A4 * A2;
  DenseMatrix<Scalar> tmp = Scalar(b[13]) * A6 + Scalar(b[11]) * A4 + Scalar(b[9]) * A2;
  DenseMatrix<Scalar> U = A6 * tmp;
  U += Scalar(b[7]) * A6 + Scalar(b[5]) * A4 + Scalar(b[3]) * A2 + Scalar(b[1]) * I;
  U = (A * U).eval();
  tmp = Scalar(b[12]) * A6 + Scalar(b[10]) * A4 + Scalar(b[8]) * A2;
  DenseMatrix<Scalar> V = A6 * tmp;
  V += Scalar(b[6]) * A6 + Scalar(b[4]) * A4 + Scalar(b[2]) * A2 + Scalar(b[0]) * I;
  return (V - U).partialPivLu().solve(V + U);
}

template <typename Scalar>
bool all_finite(const DenseMatrix<Scalar>& M) {
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) {
      using std::isfinite;
      if (!isfinite(M(i, j))) return false;
    }
  return true;
}

}  // namespace detail

/**
 * @brief exp(M) by scaling and squaring with a Pade approximant of degree
 *        3, 5, 7, 9 or 13 selected from the 1-norm.
 */
template <typename Derived>
DenseMatrix<typename Derived::Scalar> dense_expm(const Eigen::MatrixBase<Derived>& M_in) {
  using Scalar = typename Derived::Scalar;
  DenseMatrix<Scalar> M = M_in;
  if (M.rows() != M.cols()) throw DimensionMismatch("dense_expm: matrix must be square");
  if (!detail::all_finite(M)) throw NumericalError("dense_expm: non-finite input");
  if (M.rows() == 0) return M;

  static constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                  9.504178996162932e-1, 2.097847961257068e0};
  static constexpr double theta13 = 5.371920351148152;
  static constexpr std::array<double, 4> b3 = {120.0, 60.0, 12.0, 1.0};
  static constexpr std::array<double, 6> b5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr std::array<double, 8> b7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                               25200.0,    1512.0,    56.0,      1.0};
  static constexpr std::array<double, 10> b9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                302702400.0,   30270240.0,   2162160.0,
                                                110880.0,      3960.0,       90.0,
                                                1.0};

  const Scalar nrm = detail::norm1(M);
  DenseMatrix<Scalar> E;
  if (nrm <= Scalar(theta[0])) {
    E = detail::pade_low(M, b3);
  } else if (nrm <= Scalar(theta[1])) {
    E = detail::pade_low(M, b5);
  } else if (nrm <= Scalar(theta[2])) {
    E = detail::pade_low(M, b7);
  } else if (nrm <= Scalar(theta[3])) {
    E = detail::pade_low(M, b9);
  } else {
    using std::ceil;
    using std::log2;
    int s = 0;
    if (nrm > Scalar(theta13)) s = static_cast<int>(ceil(log2(nrm / Scalar(theta13))));
    using std::ldexp;
    const DenseMatrix<Scalar> A = M * Scalar(ldexp(1.0, -s));
    E = detail::pade13(A);
    for (int k = 0; k < s; ++k) E = (E * E).eval();
  }
  if (!detail::all_finite(E)) throw NumericalError("dense_expm: non-finite result");
  return E;
}

/**
 * @brief phi_l(M) for l >= 0 (phi_0 = exp).
 *
 * For l >= 1 the block matrix [[M, I, 0..], [0, 0, I..], .., [0 .. 0]] with
 * l+1 block rows is exponentiated; its top-right block is phi_l(M). A short
 * Taylor series is used when |M|_1 < 1e-8.
 */
template <typename Derived>
DenseMatrix<typename Derived::Scalar> dense_phi(int l, const Eigen::MatrixBase<Derived>& M_in) {
  using Scalar = typename Derived::Scalar;
  if (l < 0) throw std::invalid_argument("dense_phi: order must be non-negative");
  DenseMatrix<Scalar> M = M_in;
  if (M.rows() != M.cols()) throw DimensionMismatch("dense_phi: matrix must be square");
  if (l == 0) return dense_expm(M);
  const Index k = M.rows();

  if (detail::norm1(M) < Scalar(1e-8)) {
    // phi_l(M) = sum_j M^j / (j + l)!
    Scalar fact = 1;
    for (int i = 2; i <= l; ++i) fact *= Scalar(i);
    DenseMatrix<Scalar> term = DenseMatrix<Scalar>::Identity(k, k) / fact;
    DenseMatrix<Scalar> sum = term;
    for (int j = 1; j <= 4; ++j) {
      term = (term * M).eval() / Scalar(j + l);
      sum += term;
    }
    return sum;
  }

  const Index size = (l + 1) * k;
  DenseMatrix<Scalar> big = DenseMatrix<Scalar>::Zero(size, size);
  big.topLeftCorner(k, k) = M;
  for (int b = 0; b < l; ++b) {
    big.block(b * k, (b + 1) * k, k, k).setIdentity();
  }
  const DenseMatrix<Scalar> E = dense_expm(big);
  return E.block(0, l * k, k, k);
}

/**
 * @brief phi_l(M) b via a single exponential of the (k+l)-dimensional
 *        augmented matrix [[M, b e_1^T], [0, K]] with K the l x l upshift.
 */
template <typename DerivedM, typename DerivedB>
DenseVector<typename DerivedM::Scalar> dense_phi_action(int l, const Eigen::MatrixBase<DerivedM>& M,
                                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedM::Scalar;
  if (l < 0) throw std::invalid_argument("dense_phi_action: order must be non-negative");
  if (M.rows() != M.cols() || M.rows() != b.size())
    throw DimensionMismatch("dense_phi_action: incompatible sizes");
  const Index k = M.rows();
  if (l == 0) return dense_expm(M) * b;
  DenseMatrix<Scalar> big = DenseMatrix<Scalar>::Zero(k + l, k + l);
  big.topLeftCorner(k, k) = M;
  big.block(0, k, k, 1) = b;
  for (int i = 0; i + 1 < l; ++i) big(k + i, k + i + 1) = Scalar(1);
  const DenseMatrix<Scalar> E = dense_expm(big);
  return E.block(0, k + l - 1, k, 1);
}

}  // namespace expint
