/**
 * @file problems.hpp
 * @brief The five reaction-diffusion test problems on uniform grids with
 *        second-order centered stencils.
 */
#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "expint/linalg.hpp"

namespace expint {

enum class BoundaryKind { NeumannHomogeneous, Periodic, DirichletHomogeneous };

/**
 * @brief Uniform 1D or 2D tensor grid on [lo, hi]^dims.
 *
 * Neumann grids include both boundary points (h = L/(n-1)), periodic grids
 * drop the right endpoint (h = L/n) and Dirichlet grids hold interior points
 * only (h = L/(n+1)). Unknowns are ordered with x fastest.
 */
struct Grid {
  int dims = 1;
  Index n = 0;
  double lo = 0.0;
  double hi = 1.0;
  double h = 0.0;
  BoundaryKind bc = BoundaryKind::NeumannHomogeneous;
  std::vector<double> x;  ///< 1D coordinates, shared by every axis

  [[nodiscard]] Index points() const { return dims == 1 ? n : n * n; }
};

[[nodiscard]] Grid make_grid(int dims, Index n, double lo, double hi, BoundaryKind bc);

/// Discrete Laplacian of one scalar field.
[[nodiscard]] Vector apply_laplacian(const Grid& grid, const Vector& u);

/// Centered d/dx + d/dy (just d/dx in 1D) of one scalar field.
[[nodiscard]] Vector apply_gradient_sum(const Grid& grid, const Vector& u);

/// Trapezoid quadrature weights matching the grid's boundary treatment.
[[nodiscard]] Vector quadrature_weights(const Grid& grid);

enum class ProblemKind { Adr, AllenCahn, Brusselator, GrayScott, Semilinear };

/// printed: u v^2 - 4u + 1 / -u^2 v + 3u; standard: u^2 v - 4u + 1 / -u^2 v + 3u.
enum class BrusselatorForm { Printed, Standard };

/**
 * Discrete forcing makes the sampled exact solution an exact solution of the
 * semi-discrete system; continuous forcing uses the PDE's own integral value.
 */
enum class SemilinearForcing { Discrete, Continuous };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Semilinear;
  /// Diffusion coefficient; NaN selects the problem default.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  Index n = 32;
  BrusselatorForm brusselator_form = BrusselatorForm::Printed;
  SemilinearForcing semilinear_forcing = SemilinearForcing::Discrete;
  std::optional<double> t_final;
};

[[nodiscard]] std::string_view to_string(ProblemKind kind);
[[nodiscard]] ProblemKind parse_problem_kind(std::string_view name);

/// Diffusion coefficients a problem accepts; empty when it has none.
[[nodiscard]] std::vector<double> allowed_alphas(ProblemKind kind);
[[nodiscard]] double default_alpha(ProblemKind kind);
[[nodiscard]] double default_t_final(ProblemKind kind);

class Problem {
 public:
  explicit Problem(ProblemSpec spec, Grid grid, int components);
  virtual ~Problem() = default;

  [[nodiscard]] const ProblemSpec& spec() const { return spec_; }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] int components() const { return components_; }
  /// Number of spatial unknowns (all components).
  [[nodiscard]] Index dof() const { return grid_.points() * components_; }
  [[nodiscard]] double alpha() const { return spec_.alpha; }
  [[nodiscard]] double t_final() const;

  virtual void rhs(double t, const Vector& u, Vector& du) const = 0;
  virtual void jacobian_action(double t, const Vector& u, const Vector& v, Vector& jv) const = 0;
  [[nodiscard]] virtual bool autonomous() const { return true; }
  /// Partial derivative of the right-hand side with respect to t.
  virtual void time_derivative(double t, const Vector& u, Vector& dfdt) const;
  [[nodiscard]] virtual Vector initial_condition() const = 0;
  [[nodiscard]] virtual std::optional<Vector> exact_solution(double /*t*/) const {
    return std::nullopt;
  }

  [[nodiscard]] Vector rhs(double t, const Vector& u) const {
    Vector du(dof());
    rhs(t, u, du);
    return du;
  }

 private:
  ProblemSpec spec_;
  Grid grid_;
  int components_;
};

/// Validates @p spec (fills in alpha default) and builds the problem.
[[nodiscard]] std::unique_ptr<Problem> make_problem(ProblemSpec spec);

/// alpha grad^2 u + beta (u_x + u_y) + gamma u (1 - u)(u - 1/2), Neumann.
[[nodiscard]] Vector rhs_adr(const Grid& grid, const Vector& u, double alpha, double beta,
                             double gamma);
/// alpha grad^2 u + u - u^3, Neumann.
[[nodiscard]] Vector rhs_allen_cahn(const Grid& grid, const Vector& u, double alpha);
[[nodiscard]] Vector rhs_brusselator(const Grid& grid, const Vector& uv, double alpha,
                                     BrusselatorForm form = BrusselatorForm::Printed);
[[nodiscard]] Vector rhs_gray_scott(const Grid& grid, const Vector& uv, double alpha1,
                                    double alpha2, double a = 0.04, double b = 0.06);

/// x (1 - x) e^t
[[nodiscard]] double exact_semilinear(double x, double t);
/// e^t (x (1 - x) + 2 - integral), with integral = 1/6 for the continuous forcing.
[[nodiscard]] double semilinear_forcing(double x, double t, double integral = 1.0 / 6.0);
/// Composite trapezoid integral of u over [0, 1] with zero Dirichlet values.
[[nodiscard]] double semilinear_integral(const Grid& grid, const Vector& u);

/**
 * @brief Autonomous RhsSystem view of a problem.
 *
 * Non-autonomous problems get the time appended as one extra state entry with
 * dt/dt = 1, so the linearization sees the explicit time dependence. The
 * problem must outlive the returned system.
 */
[[nodiscard]] RhsSystem make_system(const Problem& problem);
[[nodiscard]] Index state_dim(const Problem& problem);
[[nodiscard]] Vector initial_state(const Problem& problem);
/// Drops the appended time entry, if any.
[[nodiscard]] Vector physical_part(const Problem& problem, const Vector& state);

}  // namespace expint
