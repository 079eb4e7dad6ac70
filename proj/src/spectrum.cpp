#include "expint/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace expint {

PowerIterationResult power_iterate(MatrixFreeOperator& J, const PowerIterationOptions& opts) {
  const Index n = J.dim();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  v /= v.norm();

  PowerIterationResult result;
  Vector w(n);
  double previous = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    J.apply(v, w);
    const double estimate = w.norm();
    if (!std::isfinite(estimate)) throw NumericalError("power_iterate: non-finite iterate");
    result.iterations = it;
    result.eigenvalue = estimate;
    if (estimate == 0.0) {
      result.converged = true;
      return result;
    }
    if (it > 1 && std::abs(estimate - previous) <= opts.tol * estimate) {
      result.converged = true;
      return result;
    }
    previous = estimate;
    v = w / estimate;
  }
  return result;
}

SpectrumEstimate make_estimate(double lambda, double safety) {
  if (!std::isfinite(lambda)) throw NumericalError("make_estimate: non-finite eigenvalue");
  SpectrumEstimate est;
  est.safety = safety;
  est.alpha = -safety * std::abs(lambda);
  est.beta = 0.0;
  est.c = 0.5 * (est.alpha + est.beta);
  est.gamma = std::max(std::abs(est.beta - est.alpha) / 4.0, kGammaMin);
  return est;
}

SpectrumEstimate estimate_spectrum(MatrixFreeOperator& J, const RefreshPolicy& policy) {
  const PowerIterationResult pi = power_iterate(J, policy.power);
  const double safety = pi.converged ? policy.safety : policy.safety * policy.stale_inflation;
  SpectrumEstimate est = make_estimate(pi.eigenvalue, safety);
  est.stale = !pi.converged;
  return est;
}

SpectrumEstimate maybe_refresh(const SpectrumEstimate& est, MatrixFreeOperator& J,
                               const RefreshPolicy& policy, int consecutive_rejections) {
  if (est.age_steps >= policy.n_recompute || consecutive_rejections >= policy.rejection_trigger) {
    return estimate_spectrum(J, policy);
  }
  SpectrumEstimate aged = est;
  ++aged.age_steps;
  return aged;
}

}  // namespace expint
