#include "expint/timestep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace expint {

double traditional_dt(double dt, double e, double tol, int p) {
  if (!(tol > 0.0)) throw std::invalid_argument("traditional_dt: tolerance must be positive");
  if (!(e >= 0.0)) throw std::invalid_argument("traditional_dt: negative error estimate");
  const double floor = 1e-16 * tol;
  const double proposal = dt * 0.9 * std::pow(tol / std::max(e, floor), 1.0 / (p + 1));
  return std::clamp(proposal, dt / 5.0, 5.0 * dt);
}

namespace cost_controller {

double factor(double slope) {
  const double s = std::exp(-alpha * std::tanh(beta * slope));
  if (s >= 1.0 && s < lambda) return lambda;
  if (s >= delta && s < 1.0) return delta;
  return s;
}

}  // namespace cost_controller

double cost_dt(double dt_n, double dt_prev, double cost_n, double cost_prev) {
  if (!(dt_n > 0.0 && dt_prev > 0.0 && cost_n > 0.0 && cost_prev > 0.0)) {
    throw std::invalid_argument("cost_dt: inputs must be positive");
  }
  const double dlog_dt = std::log(dt_n) - std::log(dt_prev);
  const double slope = dlog_dt == 0.0 ? 0.0 : (std::log(cost_n) - std::log(cost_prev)) / dlog_dt;
  return dt_n * cost_controller::factor(slope);
}

LoopResult adaptive_loop(RhsSystem& system, Vector u0, const LoopOptions& opts,
                         const StepObserver& observer) {
  if (!(opts.t_final > 0.0)) throw std::invalid_argument("adaptive_loop: t_final must be > 0");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("adaptive_loop: tol must be > 0");
  if (!supports(opts.integrator, opts.scheme)) {
    throw std::invalid_argument(std::string(to_string(opts.integrator)) + " has no " +
                                std::string(to_string(opts.scheme)) + " scheme");
  }
  if (u0.size() != system.dim()) throw DimensionMismatch("adaptive_loop: initial state length");

  const auto clock_start = std::chrono::steady_clock::now();
  const double t_final = opts.t_final;
  const double dt_min = 1e-12 * t_final;
  const int p = order(opts.integrator);
  const bool leja = uses_leja(opts.scheme);
  const std::int64_t evals_start = system.rhs_evals();

  StepOptions step_opts;
  step_opts.tol = opts.tol;
  step_opts.engine_factor = opts.engine_factor;
  step_opts.kiops = opts.kiops;
  step_opts.leja_points = opts.leja_points;
  step_opts.lekry_phi4_leja = opts.lekry_phi4_leja;

  LoopResult out;
  Vector u = std::move(u0);
  double t = 0.0;
  double dt = opts.dt_init.value_or(1e-5 * t_final);
  if (!(dt > 0.0)) throw std::invalid_argument("adaptive_loop: initial step must be > 0");

  std::optional<SpectrumEstimate> spectrum;
  int consecutive_rejections = 0;
  bool have_history = false;
  double dt_prev = 0.0;
  double cost_prev = 0.0;
  long attempts = 0;

  while (t < t_final) {
    if (++attempts > opts.max_attempts) {
      throw IntegrationAborted("adaptive_loop: attempt budget exhausted at t = " +
                                   std::to_string(t),
                               t);
    }
    // Land exactly on t_final; also absorb a sliver smaller than roundoff.
    bool last = false;
    if (t + dt >= t_final * (1.0 - 1e-14)) {
      dt = t_final - t;
      last = true;
    }

    StepRecord rec;
    rec.t = t;
    rec.dt = dt;
    const std::int64_t attempt_start = system.rhs_evals();
    LinearizedSystem lin(system, u, opts.jacobian);
    if (leja) {
      // A streak of rejections re-triggers the refresh every `trigger` attempts.
      const int trigger = opts.spectrum.rejection_trigger;
      const bool flagged = consecutive_rejections > 0 && consecutive_rejections % trigger == 0;
      if (!spectrum || spectrum->age_steps >= opts.spectrum.n_recompute || flagged) {
        spectrum = estimate_spectrum(lin.jacobian(), opts.spectrum);
        ++out.stats.spectrum_refreshes;
      } else {
        spectrum = maybe_refresh(*spectrum, lin.jacobian(), opts.spectrum, 0);
      }
      step_opts.spectrum = spectrum;
    }

    std::optional<StepResult> result;
    try {
      result = take_step(opts.integrator, lin, dt, opts.scheme, step_opts);
    } catch (const StepFailure& failure) {
      rec.engine_failure = true;
      const StepStats& s = failure.stats();
      out.stats.leja_iterations += s.leja_iterations;
      out.stats.krylov_matvecs += s.krylov_matvecs;
      out.stats.substeps += s.substeps;
    }
    rec.rhs_evals = system.rhs_evals() - attempt_start;

    if (result) {
      const StepStats& s = result->stats;
      out.stats.leja_iterations += s.leja_iterations;
      out.stats.krylov_matvecs += s.krylov_matvecs;
      out.stats.substeps += s.substeps;
      out.stats.internal_leja_iterations += s.iterations(GroupKind::Internal, Engine::Leja);
      rec.err = result->err_est;
      rec.dt_traditional = traditional_dt(dt, rec.err, opts.tol, p);
    }

    if (result && rec.err <= opts.tol) {
      rec.accepted = true;
      ++out.stats.steps_accepted;
      consecutive_rejections = 0;
      u = std::move(result->u_high);
      t = last ? t_final : t + dt;
      const double cost = static_cast<double>(std::max<std::int64_t>(rec.rhs_evals, 1)) / dt;
      double next = rec.dt_traditional;
      if (opts.cost_control && have_history) {
        rec.dt_cost = cost_dt(dt, dt_prev, cost, cost_prev);
        next = std::min(rec.dt_traditional, *rec.dt_cost);
      }
      have_history = true;
      dt_prev = dt;
      cost_prev = cost;
      rec.dt_next = next;
    } else {
      ++out.stats.steps_rejected;
      ++consecutive_rejections;
      rec.dt_next = result ? std::min(rec.dt_traditional, 0.9 * dt) : 0.5 * dt;
    }

    if (observer) observer(rec, result ? &*result : nullptr);
    if (opts.keep_trajectory) out.trajectory.push_back(rec);

    if (t < t_final && rec.dt_next < dt_min) {
      throw IntegrationAborted("adaptive_loop: step size " + std::to_string(rec.dt_next) +
                                   " below minimum at t = " + std::to_string(t),
                               t);
    }
    dt = rec.dt_next;
  }

  out.state = std::move(u);
  out.stats.rhs_evals = system.rhs_evals() - evals_start;
  out.stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return out;
}

}  // namespace expint
