#include "expint/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace expint {

std::string_view to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::Epirk4s3: return "epirk4s3";
    case Integrator::Epirk4s3a: return "epirk4s3a";
    case Integrator::Epirk5p1: return "epirk5p1";
    case Integrator::Exprb43: return "exprb43";
    case Integrator::Exprb53s3: return "exprb53s3";
  }
  return "unknown";
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Leja: return "leja";
    case Scheme::Kiops: return "kiops";
    case Scheme::LeKry: return "lekry";
  }
  return "unknown";
}

std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::Internal: return "internal";
    case GroupKind::Stage3: return "stage3";
    case GroupKind::ErrorEstimate: return "error_estimate";
    case GroupKind::Remainder: return "remainder";
  }
  return "unknown";
}

Integrator parse_integrator(std::string_view name) {
  for (Integrator i : kAllIntegrators) {
    if (name == to_string(i)) return i;
  }
  throw std::invalid_argument("unknown integrator '" + std::string(name) + "'");
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

bool supports(Integrator integrator, Scheme scheme) {
  if (scheme != Scheme::LeKry) return true;
  return integrator == Integrator::Epirk4s3 || integrator == Integrator::Epirk4s3a ||
         integrator == Integrator::Exprb53s3;
}

int order(Integrator integrator) {
  switch (integrator) {
    case Integrator::Epirk5p1:
    case Integrator::Exprb53s3: return 5;
    default: return 4;
  }
}

int embedded_order(Integrator integrator) {
  return integrator == Integrator::Epirk5p1 ? 4 : 3;
}

bool uses_leja(Scheme scheme) { return scheme != Scheme::Kiops; }

// ---------------------------------------------------------------------------

LinearizedSystem::LinearizedSystem(RhsSystem& system, Vector u_n, JacobianMode mode)
    : system_(&system),
      u_n_(std::move(u_n)),
      mode_(mode),
      jacobian_(system.dim(), [this](const Vector& v, Vector& out) {
        if (mode_ == JacobianMode::Analytic) {
          system_->jacobian_action(u_n_, v, out);
          return;
        }
        if (v.norm() == 0.0) {
          out.setZero(v.size());
          return;
        }
        out = fd_jacobian_apply([this](const Vector& x) { return system_->rhs(x); }, u_n_, f_n_,
                                v);
      }) {
  if (u_n_.size() != system.dim()) throw DimensionMismatch("LinearizedSystem: state length");
  if (mode_ == JacobianMode::Analytic && !system.has_jacobian()) {
    throw std::invalid_argument("LinearizedSystem: analytic mode needs a Jacobian action");
  }
  f_n_ = system.rhs(u_n_);
  if (!f_n_.allFinite()) throw NumericalError("LinearizedSystem: non-finite f(u_n)");
}

Vector LinearizedSystem::remainder(const Vector& k) {
  require_same_size(k, u_n_, "remainder");
  Vector r = system_->rhs(k);
  r -= f_n_;
  const Vector d = k - u_n_;
  if (d.norm() != 0.0) r -= jacobian_(d);
  if (!r.allFinite()) throw NumericalError("remainder: non-finite value");
  return r;
}

void StepStats::add(const GroupStats& g) {
  groups.push_back(g);
  rhs_evals += g.rhs_evals;
  substeps += g.substeps;
  if (g.engine == Engine::Leja) leja_iterations += g.iterations;
  if (g.engine == Engine::Kiops) krylov_matvecs += g.iterations;
}

int StepStats::iterations(GroupKind kind, Engine engine) const {
  int total = 0;
  for (const GroupStats& g : groups) {
    if (g.kind == kind && (engine == Engine::None || g.engine == engine)) total += g.iterations;
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

/// Distinct coefficients in ascending order plus the slot of each input.
struct CoefficientSet {
  std::vector<double> unique;
  std::vector<std::size_t> slot;
};

CoefficientSet dedupe(const std::vector<double>& coeffs) {
  CoefficientSet s;
  s.unique = coeffs;
  std::sort(s.unique.begin(), s.unique.end());
  s.unique.erase(std::unique(s.unique.begin(), s.unique.end()), s.unique.end());
  for (double c : coeffs) {
    s.slot.push_back(static_cast<std::size_t>(
        std::lower_bound(s.unique.begin(), s.unique.end(), c) - s.unique.begin()));
  }
  return s;
}

/// Engine calls of one step with per-group accounting.
class Stages {
 public:
  Stages(LinearizedSystem& sys, double dt, const StepOptions& opts)
      : sys_(sys), dt_(dt), opts_(opts) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be > 0");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("step: tolerance must be positive");
  }

  /// phi_l(c_i dt J) b for every c_i from one shared Leja recurrence.
  /**
   * @brief Vertical Leja group; the last @p final_stage coefficients feed the
   * final stage, and the terms only they need are booked under Stage3.
   */
  std::vector<Vector> leja(GroupKind kind, int l, const Vector& b,
                           const std::vector<double>& coeffs, std::size_t final_stage = 0) {
    if (!opts_.spectrum) {
      throw std::invalid_argument("step: Leja evaluation needs a spectrum estimate");
    }
    const CoefficientSet set = dedupe(coeffs);
    const std::span<const double> xi =
        opts_.leja_points.empty() ? std::span<const double>(default_leja_points())
                                  : opts_.leja_points;
    GroupStats g{kind, Engine::Leja, 0, 0, 0, {}};
    const std::int64_t before = sys_.system().rhs_evals();
    VerticalLejaResult r;
    try {
      r = leja_interpolate_vertical(sys_.jacobian(), b, l, set.unique, dt_, *opts_.spectrum,
                                    opts_.engine_tol(), xi);
    } catch (const NonConvergence& e) {
      fail(g, before, e.what());
    } catch (const NumericalError& e) {
      fail(g, before, e.what());
    }
    g.rhs_evals = sys_.system().rhs_evals() - before;
    g.iterations = r.total_iterations;
    for (std::size_t s : set.slot) g.per_coefficient.push_back(r.iterations[s]);
    const std::size_t leading = coeffs.size() - std::min(final_stage, coeffs.size());
    if (leading > 0 && leading < coeffs.size()) {
      const int own = *std::max_element(g.per_coefficient.begin(),
                                        g.per_coefficient.begin() + static_cast<std::ptrdiff_t>(leading));
      GroupStats tail{GroupKind::Stage3, Engine::Leja, 0, g.iterations - own, 0, {}};
      g.iterations = own;
      stats.add(g);
      stats.add(tail);
    } else {
      stats.add(g);
    }
    std::vector<Vector> out;
    for (std::size_t s : set.slot) out.push_back(r.values[s]);
    return out;
  }

  /// phi_l(c_i dt J) b for every c_i from intermediate KIOPS outputs.
  std::vector<Vector> kiops_vertical(GroupKind kind, int l, const Vector& b,
                                     const std::vector<double>& coeffs) {
    const CoefficientSet set = dedupe(coeffs);
    std::vector<Vector> v(static_cast<std::size_t>(l) + 1, Vector::Zero(b.size()));
    v.back() = b;
    std::vector<Vector> w = run_kiops(kind, v, set.unique);
    std::vector<Vector> out;
    for (std::size_t s : set.slot) {
      const double tau = set.unique[s];
      out.push_back(w[s] / std::pow(tau, l));
    }
    return out;
  }

  std::vector<Vector> vertical(Engine engine, GroupKind kind, int l, const Vector& b,
                               const std::vector<double>& coeffs, std::size_t final_stage = 0) {
    return engine == Engine::Leja ? leja(kind, l, b, coeffs, final_stage)
                                  : kiops_vertical(kind, l, b, coeffs);
  }

  /// phi_l(dt J) b with the selected engine.
  Vector single(Engine engine, GroupKind kind, int l, const Vector& b) {
    return vertical(engine, kind, l, b, {1.0}).front();
  }

  /// sum_j phi_j(dt J) v_j in one augmented Krylov evaluation.
  Vector horizontal(GroupKind kind, const std::vector<Vector>& v) {
    return run_kiops(kind, v, {1.0}).front();
  }

  Vector remainder(const Vector& k) {
    GroupStats g{GroupKind::Remainder, Engine::None, 0, 0, 0, {}};
    const std::int64_t before = sys_.system().rhs_evals();
    Vector r;
    try {
      r = sys_.remainder(k);
    } catch (const NumericalError& e) {
      fail(g, before, e.what());
    }
    g.rhs_evals = sys_.system().rhs_evals() - before;
    stats.add(g);
    return r;
  }

  [[nodiscard]] const Vector& u() const { return sys_.u_n(); }
  [[nodiscard]] double dt() const { return dt_; }
  /// f(u_n) dt
  [[nodiscard]] Vector F() const { return dt_ * sys_.f_n(); }

  StepStats stats;

 private:
  std::vector<Vector> run_kiops(GroupKind kind, const std::vector<Vector>& v,
                                const std::vector<double>& taus) {
    GroupStats g{kind, Engine::Kiops, 0, 0, 0, {}};
    const bool all_zero =
        std::all_of(v.begin(), v.end(), [](const Vector& x) { return x.norm() == 0.0; });
    if (all_zero) {
      stats.add(g);
      return std::vector<Vector>(taus.size(), Vector::Zero(v.front().size()));
    }
    const std::int64_t before = sys_.system().rhs_evals();
    KiopsResult r;
    try {
      r = kiops_eval(sys_.jacobian(), v, dt_, opts_.engine_tol(), taus, opts_.kiops);
    } catch (const NonConvergence& e) {
      fail(g, before, e.what());
    } catch (const NumericalError& e) {
      fail(g, before, e.what());
    }
    g.rhs_evals = sys_.system().rhs_evals() - before;
    g.iterations = r.stats.matvecs;
    g.substeps = r.stats.substeps;
    stats.add(g);
    return std::move(r.outputs);
  }

  [[noreturn]] void fail(GroupStats g, std::int64_t before, const std::string& what) {
    g.rhs_evals = sys_.system().rhs_evals() - before;
    stats.add(g);
    throw StepFailure(what, stats);
  }

  LinearizedSystem& sys_;
  double dt_;
  const StepOptions& opts_;
};

StepResult finish(Stages& st, Vector u_high, Vector u_low) {
  StepResult res;
  res.err_est = (u_high - u_low).norm();
  if (!u_high.allFinite() || !std::isfinite(res.err_est)) {
    throw StepFailure("step: non-finite solution", st.stats);
  }
  res.u_high = std::move(u_high);
  res.u_low = std::move(u_low);
  res.stats = std::move(st.stats);
  return res;
}

void require_supported(Integrator integrator, Scheme scheme) {
  if (!supports(integrator, scheme)) {
    throw std::invalid_argument(std::string(to_string(integrator)) + " has no " +
                                std::string(to_string(scheme)) + " scheme");
  }
}

/**
 * The two fourth-order EPIRK methods share one structure: internal stages at
 * coefficients c_a, c_b, a phi_3 third stage and a phi_4 correction.
 */
struct Epirk4Tableau {
  double ca;
  double cb;
  // phi_3 weights on R(a), R(b); phi_4 weights likewise.
  double p3a;
  double p3b;
  double p4a;
  double p4b;
};

StepResult epirk4_family(const Epirk4Tableau& tab, LinearizedSystem& sys, double dt,
                         Scheme scheme, const StepOptions& opts) {
  Stages st(sys, dt, opts);
  const Vector& u = st.u();
  const Vector F = st.F();
  const Index n = u.size();

  Vector a;
  Vector b;
  Vector phi1_F;
  if (scheme == Scheme::Kiops) {
    std::vector<Vector> w = st.kiops_vertical(GroupKind::Internal, 1, F, {tab.ca, tab.cb});
    a = u + tab.ca * w[0];
    b = u + tab.cb * w[1];
  } else {
    std::vector<double> coeffs = {tab.ca, tab.cb};
    if (scheme == Scheme::Leja) coeffs.push_back(1.0);
    std::vector<Vector> p =
        st.leja(GroupKind::Internal, 1, F, coeffs, scheme == Scheme::Leja ? 1 : 0);
    a = u + tab.ca * p[0];
    b = u + tab.cb * p[1];
    if (scheme == Scheme::Leja) phi1_F = std::move(p[2]);
  }

  const Vector Ra = st.remainder(a);
  const Vector Rb = st.remainder(b);
  const Vector X3 = dt * (tab.p3a * Ra + tab.p3b * Rb);
  const Vector X4 = dt * (tab.p4a * Ra + tab.p4b * Rb);

  Vector u3;
  if (scheme == Scheme::Leja) {
    u3 = u + phi1_F + st.single(Engine::Leja, GroupKind::Stage3, 3, X3);
  } else {
    const Vector zero = Vector::Zero(n);
    u3 = u + st.horizontal(GroupKind::Stage3, {zero, F, zero, X3});
  }

  const Engine e4 = scheme == Scheme::Kiops                           ? Engine::Kiops
                    : scheme == Scheme::LeKry && !opts.lekry_phi4_leja ? Engine::Kiops
                                                                       : Engine::Leja;
  const Vector t4 = st.single(e4, GroupKind::ErrorEstimate, 4, X4);
  Vector u4 = u3 + t4;
  return finish(st, std::move(u4), std::move(u3));
}

}  // namespace

StepResult step_epirk4s3(LinearizedSystem& sys, double dt, Scheme scheme,
                         const StepOptions& opts) {
  // 1892 Ra + 1458 (Rb - 2 Ra) and -42336 Ra - 34992 (Rb - 2 Ra), expanded.
  const Epirk4Tableau tab{1.0 / 8.0,        1.0 / 9.0, 1892.0 - 2.0 * 1458.0, 1458.0,
                          -42336.0 + 2.0 * 34992.0, -34992.0};
  return epirk4_family(tab, sys, dt, scheme, opts);
}

StepResult step_epirk4s3a(LinearizedSystem& sys, double dt, Scheme scheme,
                          const StepOptions& opts) {
  const Epirk4Tableau tab{0.5, 2.0 / 3.0, 32.0, -13.5, -144.0, 81.0};
  return epirk4_family(tab, sys, dt, scheme, opts);
}

StepResult step_epirk5p1(LinearizedSystem& sys, double dt, Scheme scheme,
                         const StepOptions& opts) {
  using namespace epirk5p1;
  require_supported(Integrator::Epirk5p1, scheme);
  Stages st(sys, dt, opts);
  const Engine engine = scheme == Scheme::Leja ? Engine::Leja : Engine::Kiops;
  const Vector& u = st.u();
  const Vector F = st.F();

  const std::vector<Vector> pf = st.vertical(engine, GroupKind::Internal, 1, F, {g11, g21, g31}, 1);
  const Vector a = u + a11 * pf[0];
  const Vector Ra = st.remainder(a);
  const Vector RaH = dt * Ra;

  const std::vector<Vector> pr =
      st.vertical(engine, GroupKind::Internal, 1, RaH, {g22, g32_hat, g32}, 2);
  const Vector b = u + a21 * pf[1] + a22 * pr[0];
  const Vector Rb = st.remainder(b);
  const Vector X = dt * (-2.0 * Ra + Rb);

  const std::vector<Vector> p3 = st.vertical(engine, GroupKind::Stage3, 3, X, {g33_hat, g33});
  const Vector common = u + b1 * pf[2];
  Vector u4 = common + b2 * pr[1] + b3 * p3[0];
  Vector u5 = common + b2 * pr[2] + b3 * p3[1];
  return finish(st, std::move(u5), std::move(u4));
}

StepResult step_exprb43(LinearizedSystem& sys, double dt, Scheme scheme,
                        const StepOptions& opts) {
  require_supported(Integrator::Exprb43, scheme);
  Stages st(sys, dt, opts);
  const Engine engine = scheme == Scheme::Leja ? Engine::Leja : Engine::Kiops;
  const Vector& u = st.u();
  const Vector F = st.F();

  const std::vector<Vector> pf = st.vertical(engine, GroupKind::Internal, 1, F, {0.5, 1.0});
  const Vector a = u + 0.5 * pf[0];
  const Vector Ra = st.remainder(a);
  const Vector b = u + pf[1] + st.single(engine, GroupKind::Internal, 1, dt * Ra);
  const Vector Rb = st.remainder(b);

  Vector u3 =
      u + pf[1] + st.single(engine, GroupKind::Stage3, 3, dt * (16.0 * Ra - 2.0 * Rb));
  Vector u4 =
      u3 + st.single(engine, GroupKind::ErrorEstimate, 4, dt * (-48.0 * Ra + 12.0 * Rb));
  return finish(st, std::move(u4), std::move(u3));
}

StepResult step_exprb53s3(LinearizedSystem& sys, double dt, Scheme scheme,
                          const StepOptions& opts) {
  Stages st(sys, dt, opts);
  const Vector& u = st.u();
  const Vector F = st.F();
  const Index n = u.size();
  const Engine internal = scheme == Scheme::Kiops ? Engine::Kiops : Engine::Leja;

  std::vector<double> c1 = {0.5, 0.9};
  if (scheme == Scheme::Leja) c1.push_back(1.0);
  const std::vector<Vector> pf =
      st.vertical(internal, GroupKind::Internal, 1, F, c1, scheme == Scheme::Leja ? 1 : 0);
  const Vector a = u + 0.5 * pf[0];
  const Vector Ra = st.remainder(a);
  const std::vector<Vector> p3 =
      st.vertical(internal, GroupKind::Internal, 3, dt * Ra, {0.5, 0.9});
  const Vector b = u + 0.9 * pf[1] + (27.0 / 25.0) * p3[0] + (729.0 / 125.0) * p3[1];
  const Vector Rb = st.remainder(b);

  const Vector X3 = dt * (2.0 * Ra + (150.0 / 81.0) * Rb);
  const Vector X5 = dt * (18.0 * Ra - (250.0 / 81.0) * Rb);
  const Vector Y5 = dt * (-60.0 * Ra + (500.0 / 27.0) * Rb);

  Vector u3;
  Vector u5;
  if (scheme == Scheme::Leja) {
    const Vector& phi1_F = pf[2];
    u3 = u + phi1_F + st.single(Engine::Leja, GroupKind::Stage3, 3, X3);
    u5 = u + phi1_F + st.single(Engine::Leja, GroupKind::Stage3, 3, X5) +
         st.single(Engine::Leja, GroupKind::Stage3, 4, Y5);
  } else {
    const Vector zero = Vector::Zero(n);
    u3 = u + st.horizontal(GroupKind::ErrorEstimate, {zero, F, zero, X3});
    u5 = u + st.horizontal(GroupKind::Stage3, {zero, F, zero, X5, Y5});
  }
  return finish(st, std::move(u5), std::move(u3));
}

StepResult take_step(Integrator integrator, LinearizedSystem& sys, double dt, Scheme scheme,
                     const StepOptions& opts) {
  require_supported(integrator, scheme);
  switch (integrator) {
    case Integrator::Epirk4s3: return step_epirk4s3(sys, dt, scheme, opts);
    case Integrator::Epirk4s3a: return step_epirk4s3a(sys, dt, scheme, opts);
    case Integrator::Epirk5p1: return step_epirk5p1(sys, dt, scheme, opts);
    case Integrator::Exprb43: return step_exprb43(sys, dt, scheme, opts);
    case Integrator::Exprb53s3: return step_exprb53s3(sys, dt, scheme, opts);
  }
  throw std::invalid_argument("take_step: unknown integrator");
}

}  // namespace expint
