#include "expint/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace expint {

Grid make_grid(int dims, Index n, double lo, double hi, BoundaryKind bc) {
  if (dims != 1 && dims != 2) throw std::invalid_argument("make_grid: dims must be 1 or 2");
  if (!(hi > lo)) throw std::invalid_argument("make_grid: empty domain");
  const Index min_n = bc == BoundaryKind::DirichletHomogeneous ? 1 : 3;
  if (n < min_n) throw std::invalid_argument("make_grid: too few points");
  Grid g;
  g.dims = dims;
  g.n = n;
  g.lo = lo;
  g.hi = hi;
  g.bc = bc;
  const double L = hi - lo;
  g.x.resize(static_cast<std::size_t>(n));
  switch (bc) {
    case BoundaryKind::NeumannHomogeneous:
      g.h = L / static_cast<double>(n - 1);
      for (Index i = 0; i < n; ++i) g.x[static_cast<std::size_t>(i)] = lo + g.h * i;
      g.x.back() = hi;
      break;
    case BoundaryKind::Periodic:
      g.h = L / static_cast<double>(n);
      for (Index i = 0; i < n; ++i) g.x[static_cast<std::size_t>(i)] = lo + g.h * i;
      break;
    case BoundaryKind::DirichletHomogeneous:
      g.h = L / static_cast<double>(n + 1);
      for (Index i = 0; i < n; ++i) g.x[static_cast<std::size_t>(i)] = lo + g.h * (i + 1);
      break;
  }
  return g;
}

namespace {

/// Neighbour indices along one axis; -1 marks a zero Dirichlet value.
struct Neighbours {
  Index left;
  Index right;
};

inline Neighbours neighbours(Index i, Index n, BoundaryKind bc) {
  switch (bc) {
    case BoundaryKind::NeumannHomogeneous:
      // Mirror ghost: u_{-1} = u_1, u_n = u_{n-2}.
      return {i == 0 ? 1 : i - 1, i == n - 1 ? n - 2 : i + 1};
    case BoundaryKind::Periodic:
      return {i == 0 ? n - 1 : i - 1, i == n - 1 ? 0 : i + 1};
    case BoundaryKind::DirichletHomogeneous:
    default:
      return {i - 1, i + 1 < n ? i + 1 : -1};
  }
}

inline double at(const double* u, Index k) { return k < 0 ? 0.0 : u[k]; }

void laplacian_into(const Grid& g, const double* u, double* out) {
  const Index n = g.n;
  const double inv_h2 = 1.0 / (g.h * g.h);
  if (g.dims == 1) {
    for (Index i = 0; i < n; ++i) {
      const Neighbours nb = neighbours(i, n, g.bc);
      out[i] = (at(u, nb.left) - 2.0 * u[i] + at(u, nb.right)) * inv_h2;
    }
    return;
  }
  for (Index j = 0; j < n; ++j) {
    const Neighbours ny = neighbours(j, n, g.bc);
    const double* row = u + j * n;
    const double* down = ny.left < 0 ? nullptr : u + ny.left * n;
    const double* up = ny.right < 0 ? nullptr : u + ny.right * n;
    for (Index i = 0; i < n; ++i) {
      const Neighbours nx = neighbours(i, n, g.bc);
      const double s = at(row, nx.left) + at(row, nx.right) + (down ? down[i] : 0.0) +
                       (up ? up[i] : 0.0) - 4.0 * row[i];
      out[j * n + i] = s * inv_h2;
    }
  }
}

void gradient_sum_into(const Grid& g, const double* u, double* out) {
  const Index n = g.n;
  const double inv_2h = 0.5 / g.h;
  if (g.dims == 1) {
    for (Index i = 0; i < n; ++i) {
      const Neighbours nb = neighbours(i, n, g.bc);
      out[i] = (at(u, nb.right) - at(u, nb.left)) * inv_2h;
    }
    return;
  }
  for (Index j = 0; j < n; ++j) {
    const Neighbours ny = neighbours(j, n, g.bc);
    const double* row = u + j * n;
    const double* down = ny.left < 0 ? nullptr : u + ny.left * n;
    const double* up = ny.right < 0 ? nullptr : u + ny.right * n;
    for (Index i = 0; i < n; ++i) {
      const Neighbours nx = neighbours(i, n, g.bc);
      const double dx = at(row, nx.right) - at(row, nx.left);
      const double dy = (up ? up[i] : 0.0) - (down ? down[i] : 0.0);
      out[j * n + i] = (dx + dy) * inv_2h;
    }
  }
}

void check_field(const Grid& g, const Vector& u, int components, const char* where) {
  if (u.size() != g.points() * components) {
    throw DimensionMismatch(std::string(where) + ": field length does not match the grid");
  }
}

}  // namespace

Vector apply_laplacian(const Grid& grid, const Vector& u) {
  check_field(grid, u, 1, "apply_laplacian");
  Vector out(u.size());
  laplacian_into(grid, u.data(), out.data());
  return out;
}

Vector apply_gradient_sum(const Grid& grid, const Vector& u) {
  check_field(grid, u, 1, "apply_gradient_sum");
  Vector out(u.size());
  gradient_sum_into(grid, u.data(), out.data());
  return out;
}

Vector quadrature_weights(const Grid& grid) {
  Vector w1 = Vector::Constant(grid.n, grid.h);
  if (grid.bc == BoundaryKind::NeumannHomogeneous) {
    w1[0] *= 0.5;
    w1[grid.n - 1] *= 0.5;
  }
  if (grid.dims == 1) return w1;
  Vector w(grid.points());
  for (Index j = 0; j < grid.n; ++j) w.segment(j * grid.n, grid.n) = w1[j] * w1;
  return w;
}

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Adr: return "adr";
    case ProblemKind::AllenCahn: return "allen_cahn";
    case ProblemKind::Brusselator: return "brusselator";
    case ProblemKind::GrayScott: return "gray_scott";
    case ProblemKind::Semilinear: return "semilinear";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  for (ProblemKind k : {ProblemKind::Adr, ProblemKind::AllenCahn, ProblemKind::Brusselator,
                        ProblemKind::GrayScott, ProblemKind::Semilinear}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
}

std::vector<double> allowed_alphas(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Adr: return {0.1, 0.01};
    case ProblemKind::AllenCahn:
    case ProblemKind::Brusselator:
    case ProblemKind::GrayScott: return {1e-1, 1e-2, 1e-3};
    case ProblemKind::Semilinear: return {};
  }
  return {};
}

double default_alpha(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Adr: return 0.01;
    case ProblemKind::AllenCahn: return 0.01;
    case ProblemKind::Brusselator: return 1e-3;
    case ProblemKind::GrayScott: return 1e-3;
    case ProblemKind::Semilinear: return std::numeric_limits<double>::quiet_NaN();
  }
  return 0.0;
}

double default_t_final(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Adr: return 0.01;
    case ProblemKind::AllenCahn: return 1.0;
    case ProblemKind::Brusselator: return 1.0;
    case ProblemKind::GrayScott: return 0.1;
    case ProblemKind::Semilinear: return 1.0;
  }
  return 1.0;
}

Problem::Problem(ProblemSpec spec, Grid grid, int components)
    : spec_(std::move(spec)), grid_(std::move(grid)), components_(components) {}

double Problem::t_final() const {
  return spec_.t_final.value_or(default_t_final(spec_.kind));
}

void Problem::time_derivative(double, const Vector&, Vector& dfdt) const {
  dfdt.setZero(dof());
}

// ---------------------------------------------------------------------------
// Right-hand sides as free functions

Vector rhs_adr(const Grid& grid, const Vector& u, double alpha, double beta, double gamma) {
  check_field(grid, u, 1, "rhs_adr");
  Vector du = alpha * apply_laplacian(grid, u) + beta * apply_gradient_sum(grid, u);
  du.array() += gamma * u.array() * (1.0 - u.array()) * (u.array() - 0.5);
  return du;
}

Vector rhs_allen_cahn(const Grid& grid, const Vector& u, double alpha) {
  check_field(grid, u, 1, "rhs_allen_cahn");
  Vector du = alpha * apply_laplacian(grid, u);
  du.array() += u.array() - u.array().cube();
  return du;
}

Vector rhs_brusselator(const Grid& grid, const Vector& uv, double alpha, BrusselatorForm form) {
  check_field(grid, uv, 2, "rhs_brusselator");
  const Index m = grid.points();
  const auto u = uv.head(m).array();
  const auto v = uv.tail(m).array();
  Vector out(2 * m);
  laplacian_into(grid, uv.data(), out.data());
  laplacian_into(grid, uv.data() + m, out.data() + m);
  out *= alpha;
  if (form == BrusselatorForm::Printed) {
    out.head(m).array() += u * v.square() - 4.0 * u + 1.0;
  } else {
    out.head(m).array() += u.square() * v - 4.0 * u + 1.0;
  }
  out.tail(m).array() += -u.square() * v + 3.0 * u;
  return out;
}

Vector rhs_gray_scott(const Grid& grid, const Vector& uv, double alpha1, double alpha2, double a,
                      double b) {
  check_field(grid, uv, 2, "rhs_gray_scott");
  const Index m = grid.points();
  const auto u = uv.head(m).array();
  const auto v = uv.tail(m).array();
  Vector out(2 * m);
  laplacian_into(grid, uv.data(), out.data());
  laplacian_into(grid, uv.data() + m, out.data() + m);
  out.head(m) *= alpha1;
  out.tail(m) *= alpha2;
  const Eigen::ArrayXd uvv = u * v.square();
  out.head(m).array() += -uvv + a * (1.0 - u);
  out.tail(m).array() += uvv - (a + b) * v;
  return out;
}

double exact_semilinear(double x, double t) { return x * (1.0 - x) * std::exp(t); }

double semilinear_forcing(double x, double t, double integral) {
  return std::exp(t) * (x * (1.0 - x) + 2.0 - integral);
}

double semilinear_integral(const Grid& grid, const Vector& u) {
  check_field(grid, u, 1, "semilinear_integral");
  return grid.h * u.sum();
}

// ---------------------------------------------------------------------------
// Concrete problems

namespace {

class AdrProblem final : public Problem {
 public:
  explicit AdrProblem(ProblemSpec spec)
      : Problem(spec, make_grid(2, spec.n, 0.0, 1.0, BoundaryKind::NeumannHomogeneous), 1) {}

  void rhs(double, const Vector& u, Vector& du) const override {
    du = rhs_adr(grid(), u, alpha(), kBeta, kGamma);
  }

  void jacobian_action(double, const Vector& u, const Vector& v, Vector& jv) const override {
    jv = alpha() * apply_laplacian(grid(), v) + kBeta * apply_gradient_sum(grid(), v);
    jv.array() +=
        kGamma * (-3.0 * u.array().square() + 3.0 * u.array() - 0.5) * v.array();
  }

  [[nodiscard]] Vector initial_condition() const override {
    const Grid& g = grid();
    Vector u(g.points());
    for (Index j = 0; j < g.n; ++j) {
      for (Index i = 0; i < g.n; ++i) {
        const double x = g.x[static_cast<std::size_t>(i)];
        const double y = g.x[static_cast<std::size_t>(j)];
        const double q = x * y * (1.0 - x) * (1.0 - y);
        u[j * g.n + i] = 256.0 * q * q + 0.3;
      }
    }
    return u;
  }

  static constexpr double kBeta = -10.0;
  static constexpr double kGamma = 100.0;
};

class AllenCahnProblem final : public Problem {
 public:
  explicit AllenCahnProblem(ProblemSpec spec)
      : Problem(spec, make_grid(2, spec.n, -1.0, 1.0, BoundaryKind::NeumannHomogeneous), 1) {}

  void rhs(double, const Vector& u, Vector& du) const override {
    du = rhs_allen_cahn(grid(), u, alpha());
  }

  void jacobian_action(double, const Vector& u, const Vector& v, Vector& jv) const override {
    jv = alpha() * apply_laplacian(grid(), v);
    jv.array() += (1.0 - 3.0 * u.array().square()) * v.array();
  }

  [[nodiscard]] Vector initial_condition() const override {
    const Grid& g = grid();
    Vector u(g.points());
    const double two_pi = 2.0 * std::numbers::pi;
    for (Index j = 0; j < g.n; ++j) {
      for (Index i = 0; i < g.n; ++i) {
        u[j * g.n + i] = 0.1 + 0.1 * std::cos(two_pi * g.x[static_cast<std::size_t>(i)]) *
                                   std::cos(two_pi * g.x[static_cast<std::size_t>(j)]);
      }
    }
    return u;
  }
};

class BrusselatorProblem final : public Problem {
 public:
  explicit BrusselatorProblem(ProblemSpec spec)
      : Problem(spec, make_grid(2, spec.n, 0.0, 1.0, BoundaryKind::NeumannHomogeneous), 2) {}

  void rhs(double, const Vector& u, Vector& du) const override {
    du = rhs_brusselator(grid(), u, alpha(), spec().brusselator_form);
  }

  void jacobian_action(double, const Vector& uv, const Vector& w, Vector& jw) const override {
    const Index m = grid().points();
    const auto u = uv.head(m).array();
    const auto v = uv.tail(m).array();
    const auto p = w.head(m).array();
    const auto q = w.tail(m).array();
    jw.resize(2 * m);
    laplacian_into(grid(), w.data(), jw.data());
    laplacian_into(grid(), w.data() + m, jw.data() + m);
    jw *= alpha();
    if (spec().brusselator_form == BrusselatorForm::Printed) {
      jw.head(m).array() += (v.square() - 4.0) * p + 2.0 * u * v * q;
    } else {
      jw.head(m).array() += (2.0 * u * v - 4.0) * p + u.square() * q;
    }
    jw.tail(m).array() += (3.0 - 2.0 * u * v) * p - u.square() * q;
  }

  [[nodiscard]] Vector initial_condition() const override {
    const Grid& g = grid();
    const Index m = g.points();
    Vector uv(2 * m);
    for (Index j = 0; j < g.n; ++j) {
      for (Index i = 0; i < g.n; ++i) {
        uv[j * g.n + i] = 2.0 + 0.25 * g.x[static_cast<std::size_t>(j)];
        uv[m + j * g.n + i] = 1.0 + 0.8 * g.x[static_cast<std::size_t>(i)];
      }
    }
    return uv;
  }
};

class GrayScottProblem final : public Problem {
 public:
  explicit GrayScottProblem(ProblemSpec spec)
      : Problem(spec, make_grid(2, spec.n, 0.0, 1.0, BoundaryKind::Periodic), 2) {}

  void rhs(double, const Vector& u, Vector& du) const override {
    du = rhs_gray_scott(grid(), u, alpha(), alpha(), kA, kB);
  }

  void jacobian_action(double, const Vector& uv, const Vector& w, Vector& jw) const override {
    const Index m = grid().points();
    const auto u = uv.head(m).array();
    const auto v = uv.tail(m).array();
    const auto p = w.head(m).array();
    const auto q = w.tail(m).array();
    jw.resize(2 * m);
    laplacian_into(grid(), w.data(), jw.data());
    laplacian_into(grid(), w.data() + m, jw.data() + m);
    jw *= alpha();
    jw.head(m).array() += (-v.square() - kA) * p - 2.0 * u * v * q;
    jw.tail(m).array() += v.square() * p + (2.0 * u * v - (kA + kB)) * q;
  }

  [[nodiscard]] Vector initial_condition() const override {
    const Grid& g = grid();
    const Index m = g.points();
    Vector uv(2 * m);
    for (Index j = 0; j < g.n; ++j) {
      for (Index i = 0; i < g.n; ++i) {
        const double dx = g.x[static_cast<std::size_t>(i)] - 0.5;
        const double dy = g.x[static_cast<std::size_t>(j)] - 0.5;
        uv[j * g.n + i] = 1.0 - std::exp(-150.0 * (dx * dx + dy * dy));
        uv[m + j * g.n + i] = std::exp(-150.0 * (dx * dx + 2.0 * dy * dy));
      }
    }
    return uv;
  }

  static constexpr double kA = 0.04;
  static constexpr double kB = 0.06;
};

class SemilinearProblem final : public Problem {
 public:
  explicit SemilinearProblem(ProblemSpec spec)
      : Problem(spec, make_grid(1, spec.n, 0.0, 1.0, BoundaryKind::DirichletHomogeneous), 1) {
    const double h = grid().h;
    // h * sum x_i (1 - x_i) over the interior nodes, in closed form.
    forcing_integral_ =
        spec.semilinear_forcing == SemilinearForcing::Discrete ? (1.0 - h * h) / 6.0 : 1.0 / 6.0;
    profile_.resize(grid().n);
    for (Index i = 0; i < grid().n; ++i) {
      const double x = grid().x[static_cast<std::size_t>(i)];
      profile_[i] = semilinear_forcing(x, 0.0, forcing_integral_);
    }
  }

  void rhs(double t, const Vector& u, Vector& du) const override {
    du = apply_laplacian(grid(), u);
    du.array() += semilinear_integral(grid(), u);
    du.noalias() += std::exp(t) * profile_;
  }

  void jacobian_action(double, const Vector&, const Vector& v, Vector& jv) const override {
    jv = apply_laplacian(grid(), v);
    jv.array() += semilinear_integral(grid(), v);
  }

  [[nodiscard]] bool autonomous() const override { return false; }

  void time_derivative(double t, const Vector&, Vector& dfdt) const override {
    dfdt = std::exp(t) * profile_;
  }

  [[nodiscard]] Vector initial_condition() const override { return *exact_solution(0.0); }

  [[nodiscard]] std::optional<Vector> exact_solution(double t) const override {
    Vector u(grid().n);
    for (Index i = 0; i < grid().n; ++i) {
      u[i] = exact_semilinear(grid().x[static_cast<std::size_t>(i)], t);
    }
    return u;
  }

 private:
  double forcing_integral_ = 1.0 / 6.0;
  Vector profile_;
};

}  // namespace

std::unique_ptr<Problem> make_problem(ProblemSpec spec) {
  const std::vector<double> menu = allowed_alphas(spec.kind);
  if (menu.empty()) {
    spec.alpha = std::numeric_limits<double>::quiet_NaN();
  } else {
    if (std::isnan(spec.alpha)) spec.alpha = default_alpha(spec.kind);
    const bool listed = std::any_of(menu.begin(), menu.end(), [&](double a) {
      return std::abs(a - spec.alpha) <= 1e-12 * a;
    });
    if (!listed) {
      throw std::invalid_argument("make_problem: alpha " + std::to_string(spec.alpha) +
                                  " is not offered for " + std::string(to_string(spec.kind)));
    }
  }
  if (spec.t_final && !(*spec.t_final > 0.0)) {
    throw std::invalid_argument("make_problem: t_final must be positive");
  }
  switch (spec.kind) {
    case ProblemKind::Adr: return std::make_unique<AdrProblem>(spec);
    case ProblemKind::AllenCahn: return std::make_unique<AllenCahnProblem>(spec);
    case ProblemKind::Brusselator: return std::make_unique<BrusselatorProblem>(spec);
    case ProblemKind::GrayScott: return std::make_unique<GrayScottProblem>(spec);
    case ProblemKind::Semilinear: return std::make_unique<SemilinearProblem>(spec);
  }
  throw std::invalid_argument("make_problem: unknown problem kind");
}

// ---------------------------------------------------------------------------
// Autonomous view

Index state_dim(const Problem& problem) {
  return problem.dof() + (problem.autonomous() ? 0 : 1);
}

Vector initial_state(const Problem& problem) {
  Vector u0 = problem.initial_condition();
  if (problem.autonomous()) return u0;
  Vector s(u0.size() + 1);
  s.head(u0.size()) = u0;
  s[u0.size()] = 0.0;
  return s;
}

Vector physical_part(const Problem& problem, const Vector& state) {
  if (state.size() != state_dim(problem)) {
    throw DimensionMismatch("physical_part: state length does not match the problem");
  }
  return state.head(problem.dof());
}

RhsSystem make_system(const Problem& problem) {
  const Index n = problem.dof();
  if (problem.autonomous()) {
    return RhsSystem(
        n, [&problem](const Vector& u, Vector& du) { problem.rhs(0.0, u, du); },
        [&problem](const Vector& u, const Vector& v, Vector& jv) {
          problem.jacobian_action(0.0, u, v, jv);
        });
  }
  return RhsSystem(
      n + 1,
      [&problem, n](const Vector& s, Vector& ds) {
        Vector du(n);
        problem.rhs(s[n], s.head(n), du);
        ds.head(n) = du;
        ds[n] = 1.0;
      },
      [&problem, n](const Vector& s, const Vector& w, Vector& jw) {
        const double t = s[n];
        Vector jv(n);
        problem.jacobian_action(t, s.head(n), w.head(n), jv);
        if (w[n] != 0.0) {
          Vector ft(n);
          problem.time_derivative(t, s.head(n), ft);
          jv.noalias() += w[n] * ft;
        }
        jw.head(n) = jv;
        jw[n] = 0.0;
      });
}

}  // namespace expint
