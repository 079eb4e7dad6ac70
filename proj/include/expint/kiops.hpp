/**
 * @file kiops.hpp
 * @brief Krylov evaluation of sum_j phi_j(dt A) v_j on the augmented operator
 *        with incomplete orthogonalization, adaptive substeps and adaptive
 *        basis size.
 */
#pragma once

#include <span>
#include <vector>

#include "expint/linalg.hpp"

namespace expint {

/**
 * [[scale*A, B], [0, K]] acting on vectors of length n + p, where the columns
 * of B are b_p, ..., b_1 and K is the p x p upshift matrix.
 */
struct AugmentedSystem {
  MatrixFreeOperator* A = nullptr;
  Matrix B;
  double scale = 1.0;

  [[nodiscard]] Index n() const { return B.rows(); }
  [[nodiscard]] Index p() const { return B.cols(); }
  [[nodiscard]] Index dim() const { return B.rows() + B.cols(); }
};

[[nodiscard]] Vector augmented_apply(AugmentedSystem& sys, const Vector& w);

/// Arnoldi basis V (dim x (m+1)) and Hessenberg matrix H ((m+1) x m).
struct KrylovState {
  Matrix V;
  Matrix H;
  int m = 0;
  int iop_len = 2;
  bool happy_breakdown = false;
  double beta = 0.0;  ///< norm of the start vector
};

/**
 * Arnoldi with orthogonalization against only the last @p iop_len vectors.
 * Stops early on happy breakdown (subdiagonal below 1e-14 |H|), truncating m.
 */
[[nodiscard]] KrylovState arnoldi_iop(MatrixFreeOperator& op, const Vector& start, int m,
                                      int iop_len = 2);

struct KiopsOptions {
  int m_init = 10;
  int m_min = 10;
  int m_max = 128;
  int iop_len = 2;
  /// Smallest admissible substep as a fraction of dt.
  double tau_min = 1e-8;
  double breakdown_tol = 1e-14;
};

struct KiopsStats {
  int matvecs = 0;    ///< applications of A
  int substeps = 0;   ///< accepted substeps
  int rejections = 0;
  std::vector<double> substep_lengths;  ///< in units of time, sum to the integrated span
  std::vector<double> substep_errors;   ///< accepted error estimates
};

struct KiopsResult {
  std::vector<Vector> outputs;
  KiopsStats stats;
};

/**
 * w(tau_k) = sum_j tau_k^j phi_j(tau_k dt A) v_j for each 0 < tau_k <= 1,
 * ascending. Powers of dt are expected to be folded into v_j by the caller,
 * so at tau = 1 the result is sum_j phi_j(dt A) v_j.
 */
[[nodiscard]] KiopsResult kiops_eval(MatrixFreeOperator& A, std::span<const Vector> v, double dt,
                                     double tol, std::span<const double> taus,
                                     const KiopsOptions& opts = {});

/// Single output at tau = 1.
[[nodiscard]] Vector kiops_eval(MatrixFreeOperator& A, std::span<const Vector> v, double dt,
                                double tol, KiopsStats* stats = nullptr,
                                const KiopsOptions& opts = {});

}  // namespace expint
