/**
 * @file timestep.hpp
 * @brief Step-size controllers and the adaptive integration loop.
 */
#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "expint/integrators.hpp"
#include "expint/spectrum.hpp"

namespace expint {

/// dt * 0.9 * (tol / max(e, 1e-16 tol))^(1/(p+1)), clamped to [dt/5, 5 dt].
[[nodiscard]] double traditional_dt(double dt, double e, double tol, int p);

namespace cost_controller {
inline constexpr double alpha = 0.65241444;
inline constexpr double beta = 0.26862269;
inline constexpr double lambda = 1.37412002;
inline constexpr double delta = 0.64446017;

/// Multiplier for a given log-log cost slope.
[[nodiscard]] double factor(double slope);
}  // namespace cost_controller

/**
 * Cost-minimising step from the last two (step, cost) pairs. Equal steps are
 * treated as a zero slope, giving lambda * dt_n.
 */
[[nodiscard]] double cost_dt(double dt_n, double dt_prev, double cost_n, double cost_prev);

struct RunStats {
  int steps_accepted = 0;
  int steps_rejected = 0;
  std::int64_t rhs_evals = 0;  ///< every RHS-equivalent evaluation, accepted or not
  std::int64_t leja_iterations = 0;
  std::int64_t krylov_matvecs = 0;
  std::int64_t substeps = 0;
  std::int64_t internal_leja_iterations = 0;  ///< Leja terms spent on internal stages
  int spectrum_refreshes = 0;
  double wall_time_s = 0.0;
};

/// One step attempt as seen by observers and the stored trajectory.
struct StepRecord {
  double t = 0.0;   ///< start time of the attempt
  double dt = 0.0;  ///< step size attempted
  double err = 0.0;
  bool accepted = false;
  bool engine_failure = false;
  std::int64_t rhs_evals = 0;  ///< cost of the attempt including linearization
  double dt_traditional = 0.0;
  /// Only when two accepted steps of history were available.
  std::optional<double> dt_cost;
  double dt_next = 0.0;  ///< step proposed for the next attempt
};

/// Sees every attempt; @p result is null when an engine failed.
using StepObserver = std::function<void(const StepRecord& record, const StepResult* result)>;

struct LoopOptions {
  Integrator integrator = Integrator::Exprb43;
  Scheme scheme = Scheme::Kiops;
  double tol = 1e-6;
  double t_final = 1.0;
  /// Defaults to 1e-5 * t_final.
  std::optional<double> dt_init;
  JacobianMode jacobian = JacobianMode::Analytic;
  bool cost_control = true;
  double engine_factor = 0.1;
  KiopsOptions kiops{};
  RefreshPolicy spectrum{};
  std::span<const double> leja_points;
  bool lekry_phi4_leja = true;
  bool keep_trajectory = true;
  long max_attempts = 10'000'000;
};

struct LoopResult {
  Vector state;
  RunStats stats;
  std::vector<StepRecord> trajectory;
};

/// The step size fell below 1e-12 t_final (or the attempt budget ran out).
class IntegrationAborted : public std::runtime_error {
 public:
  IntegrationAborted(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  [[nodiscard]] double time() const { return t_; }

 private:
  double t_;
};

/**
 * Integrates @p system from @p u0 to t_final. A step is accepted iff its error
 * estimate is <= tol; the next step is min(traditional, cost) once two
 * accepted steps exist, otherwise traditional. Rejected steps retry with the
 * traditional proposal, engine failures with half the step. The final step is
 * shortened to land on t_final.
 */
[[nodiscard]] LoopResult adaptive_loop(RhsSystem& system, Vector u0, const LoopOptions& opts,
                                       const StepObserver& observer = {});

}  // namespace expint
