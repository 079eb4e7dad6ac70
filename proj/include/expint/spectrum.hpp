/**
 * @file spectrum.hpp
 * @brief Real-spectrum bounds for the Jacobian and the Leja scaling (c, gamma).
 */
#pragma once

#include <cstdint>

#include "expint/linalg.hpp"

namespace expint {

inline constexpr double kGammaMin = 1e-13;

/**
 * Interval [alpha, beta] assumed to contain the real parts of the spectrum,
 * with midpoint c and quarter-length gamma used to map it onto [-2, 2].
 */
struct SpectrumEstimate {
  double alpha = 0.0;
  double beta = 0.0;
  double c = 0.0;
  double gamma = kGammaMin;
  double safety = 1.1;
  int age_steps = 0;
  /// Set when the power iteration that produced this estimate did not converge.
  bool stale = false;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;  ///< dominant magnitude estimate
  int iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  double tol = 1e-2;
  int max_iterations = 1000;
  std::uint64_t seed = 0x5eed;
};

/// Dominant-magnitude eigenvalue estimate |J v| over normalized iterates.
[[nodiscard]] PowerIterationResult power_iterate(MatrixFreeOperator& J,
                                                 const PowerIterationOptions& opts = {});

/// alpha = -safety*|lambda|, beta = 0; gamma floored at kGammaMin.
[[nodiscard]] SpectrumEstimate make_estimate(double lambda, double safety = 1.1);

struct RefreshPolicy {
  int n_recompute = 50;
  int rejection_trigger = 2;
  double safety = 1.1;
  /// Multiplier applied to the safety factor when the power iteration stalls.
  double stale_inflation = 1.2;
  PowerIterationOptions power{};
};

/// Power iteration + make_estimate, honouring the stale inflation of @p policy.
[[nodiscard]] SpectrumEstimate estimate_spectrum(MatrixFreeOperator& J, const RefreshPolicy& policy);

/**
 * Refreshes the estimate when it is n_recompute steps old or after
 * @p consecutive_rejections reaches the trigger; otherwise only ages it.
 */
[[nodiscard]] SpectrumEstimate maybe_refresh(const SpectrumEstimate& est, MatrixFreeOperator& J,
                                             const RefreshPolicy& policy,
                                             int consecutive_rejections = 0);

}  // namespace expint
