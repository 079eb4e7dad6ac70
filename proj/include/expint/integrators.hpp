/**
 * @file integrators.hpp
 * @brief Embedded exponential integrators (EPIRK4s3, EPIRK4s3A, EPIRK5P1,
 *        EXPRB43, EXPRB53s3) on a frozen linearization, each with Leja,
 *        KIOPS and, where defined, mixed LeKry stage groupings.
 */
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "expint/kiops.hpp"
#include "expint/leja.hpp"
#include "expint/linalg.hpp"
#include "expint/spectrum.hpp"

namespace expint {

enum class Integrator { Epirk4s3, Epirk4s3a, Epirk5p1, Exprb43, Exprb53s3 };
enum class Scheme { Leja, Kiops, LeKry };
enum class JacobianMode { Analytic, FiniteDifference };

[[nodiscard]] std::string_view to_string(Integrator integrator);
[[nodiscard]] std::string_view to_string(Scheme scheme);
[[nodiscard]] Integrator parse_integrator(std::string_view name);
[[nodiscard]] Scheme parse_scheme(std::string_view name);

inline constexpr Integrator kAllIntegrators[] = {Integrator::Epirk4s3, Integrator::Epirk4s3a,
                                                 Integrator::Epirk5p1, Integrator::Exprb43,
                                                 Integrator::Exprb53s3};
inline constexpr Scheme kAllSchemes[] = {Scheme::Leja, Scheme::Kiops, Scheme::LeKry};

/// LeKry exists only for integrators with both vertical and horizontal stages.
[[nodiscard]] bool supports(Integrator integrator, Scheme scheme);
/// Order of the propagated solution.
[[nodiscard]] int order(Integrator integrator);
/// Order of the embedded companion solution used for the error estimate.
[[nodiscard]] int embedded_order(Integrator integrator);
[[nodiscard]] bool uses_leja(Scheme scheme);

/**
 * @brief Snapshot of an autonomous system at u_n: f(u_n), the Jacobian action
 *        and the nonlinear remainder R(k) = f(k) - f(u_n) - J (k - u_n).
 *
 * Construction evaluates f(u_n) once. In finite-difference mode each Jacobian
 * action costs one further RHS evaluation.
 */
class LinearizedSystem {
 public:
  LinearizedSystem(RhsSystem& system, Vector u_n, JacobianMode mode = JacobianMode::Analytic);

  LinearizedSystem(const LinearizedSystem&) = delete;
  LinearizedSystem& operator=(const LinearizedSystem&) = delete;

  [[nodiscard]] const Vector& u_n() const { return u_n_; }
  [[nodiscard]] const Vector& f_n() const { return f_n_; }
  [[nodiscard]] MatrixFreeOperator& jacobian() { return jacobian_; }
  [[nodiscard]] RhsSystem& system() { return *system_; }
  [[nodiscard]] JacobianMode mode() const { return mode_; }

  [[nodiscard]] Vector remainder(const Vector& k);

 private:
  RhsSystem* system_;
  Vector u_n_;
  Vector f_n_;
  JacobianMode mode_;
  MatrixFreeOperator jacobian_;
};

enum class GroupKind { Internal, Stage3, ErrorEstimate, Remainder };
enum class Engine { Leja, Kiops, None };

[[nodiscard]] std::string_view to_string(GroupKind kind);

/// Work of one engine call (or one remainder evaluation) inside a step.
struct GroupStats {
  GroupKind kind = GroupKind::Internal;
  Engine engine = Engine::None;
  std::int64_t rhs_evals = 0;
  /// Leja: terms of the shared recurrence; KIOPS: operator applications.
  int iterations = 0;
  int substeps = 0;
  /// Leja only: terms needed by each coefficient, in call order.
  std::vector<int> per_coefficient;
};

struct StepStats {
  std::vector<GroupStats> groups;
  std::int64_t rhs_evals = 0;
  int leja_iterations = 0;
  int krylov_matvecs = 0;
  int substeps = 0;

  void add(const GroupStats& g);
  /// Sum over groups of @p kind using engine @p engine (None matches any).
  [[nodiscard]] int iterations(GroupKind kind, Engine engine = Engine::None) const;
};

struct StepResult {
  Vector u_high;
  Vector u_low;
  double err_est = 0.0;  ///< |u_high - u_low|_2
  StepStats stats;
};

struct StepOptions {
  /// Step tolerance; engines run at engine_factor * tol.
  double tol = 1e-6;
  double engine_factor = 0.1;
  /// Required by the Leja and LeKry schemes.
  std::optional<SpectrumEstimate> spectrum;
  /// Leja points; empty selects the default 400-point set.
  std::span<const double> leja_points;
  KiopsOptions kiops{};
  /// LeKry: evaluate the phi_4 error term with Leja (true) or KIOPS.
  bool lekry_phi4_leja = true;

  [[nodiscard]] double engine_tol() const { return engine_factor * tol; }
};

/// An engine gave up; the caller should retry with a smaller step.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, StepStats stats)
      : std::runtime_error(what), stats_(std::move(stats)) {}
  [[nodiscard]] const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

[[nodiscard]] StepResult step_epirk4s3(LinearizedSystem& sys, double dt, Scheme scheme,
                                       const StepOptions& opts);
[[nodiscard]] StepResult step_epirk4s3a(LinearizedSystem& sys, double dt, Scheme scheme,
                                        const StepOptions& opts);
[[nodiscard]] StepResult step_epirk5p1(LinearizedSystem& sys, double dt, Scheme scheme,
                                       const StepOptions& opts);
[[nodiscard]] StepResult step_exprb43(LinearizedSystem& sys, double dt, Scheme scheme,
                                      const StepOptions& opts);
[[nodiscard]] StepResult step_exprb53s3(LinearizedSystem& sys, double dt, Scheme scheme,
                                        const StepOptions& opts);

/// Dispatches to the step_* function of @p integrator.
[[nodiscard]] StepResult take_step(Integrator integrator, LinearizedSystem& sys, double dt,
                                   Scheme scheme, const StepOptions& opts);

namespace epirk5p1 {
inline constexpr double a11 = 0.35129592695058193092;
inline constexpr double a21 = 0.84405472011657126298;
inline constexpr double a22 = 1.6905891609568963624;
inline constexpr double b1 = 1.0;
inline constexpr double b2 = 1.2727127317356892397;
inline constexpr double b3 = 2.2714599265422622275;
inline constexpr double g11 = 0.35129592695058193092;
inline constexpr double g21 = 0.84405472011657126298;
inline constexpr double g22 = 0.5;
inline constexpr double g31 = 1.0;
inline constexpr double g32 = 0.71111095364366870359;
inline constexpr double g32_hat = 0.5;
inline constexpr double g33 = 0.62378111953371494809;
inline constexpr double g33_hat = 1.0;
}  // namespace epirk5p1

}  // namespace expint
