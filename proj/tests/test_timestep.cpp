#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "expint/problems.hpp"
#include "expint/timestep.hpp"
#include "support.hpp"

using namespace expint;
using namespace expint::testing;

TEST_CASE("traditional controller") {
  CHECK(traditional_dt(0.1, 1e-4, 1e-6, 4) ==
        doctest::Approx(0.1 * 0.9 * std::pow(1e-2, 0.2)).epsilon(1e-14));
  CHECK(traditional_dt(0.1, 1e-4, 1e-6, 4) == doctest::Approx(0.03583).epsilon(1e-4));
  CHECK(traditional_dt(0.1, 1e-6, 1e-6, 4) == doctest::Approx(0.09));
  CHECK(traditional_dt(0.1, 0.0, 1e-6, 4) == doctest::Approx(0.5));
  CHECK(traditional_dt(0.1, 1.0, 1e-6, 4) == doctest::Approx(0.02));
  CHECK_THROWS((void)traditional_dt(0.1, 1e-4, 0.0, 4));
}

TEST_CASE("cost controller") {
  using namespace cost_controller;
  // Delta = 0: s = 1 falls in [1, lambda).
  CHECK(std::abs(factor(0.0) - lambda) < 1e-9);
  CHECK(std::abs(cost_dt(0.1, 0.05, 3.0, 3.0) - 0.1 * lambda) < 1e-9);
  // Delta -> infinity: s -> exp(-alpha), below delta, used as is.
  CHECK(std::abs(factor(1e6) - std::exp(-alpha)) < 1e-9);
  CHECK(std::abs(factor(1e6) - 0.52077) < 1e-4);
  // s = 0.8 lies in [delta, 1) and snaps to delta.
  const double slope = std::atanh(-std::log(0.8) / alpha) / beta;
  CHECK(std::abs(std::exp(-alpha * std::tanh(beta * slope)) - 0.8) < 1e-12);
  CHECK(std::abs(factor(slope) - delta) < 1e-9);
  // The same slope realized through (dt, cost) pairs.
  const double dt_prev = 0.01;
  const double dt_n = 0.02;
  const double c_prev = 100.0;
  const double c_n = c_prev * std::exp(slope * std::log(dt_n / dt_prev));
  CHECK(std::abs(cost_dt(dt_n, dt_prev, c_n, c_prev) - dt_n * delta) < 1e-9);
  // Decreasing cost with growing steps: s > lambda passes through.
  CHECK(factor(-1e6) == doctest::Approx(std::exp(alpha)));
  // Equal steps are a zero slope.
  CHECK(cost_dt(0.1, 0.1, 5.0, 2.0) == doctest::Approx(0.1 * lambda));
  CHECK_THROWS((void)cost_dt(0.0, 0.1, 1.0, 1.0));
}

TEST_CASE("adaptive loop invariants") {
  auto p = make_problem(ProblemSpec{ProblemKind::Semilinear, std::nan(""), 64});
  RhsSystem sys = make_system(*p);
  LoopOptions opts;
  opts.integrator = Integrator::Exprb43;
  opts.scheme = Scheme::Kiops;
  opts.tol = 1e-8;
  opts.t_final = p->t_final();
  int observed = 0;
  const LoopResult r = adaptive_loop(sys, initial_state(*p), opts,
                                     [&](const StepRecord&, const StepResult*) { ++observed; });

  const Vector exact = *p->exact_solution(p->t_final());
  CHECK((physical_part(*p, r.state) - exact).norm() / exact.norm() <= 10.0 * opts.tol);
  // Time rides along as an ordinary state entry, so it carries the same engine error.
  CHECK(std::abs(r.state[p->dof()] - p->t_final()) <= 10.0 * opts.tol);

  REQUIRE(r.trajectory.size() ==
          static_cast<std::size_t>(r.stats.steps_accepted + r.stats.steps_rejected));
  CHECK(observed == static_cast<int>(r.trajectory.size()));
  double span = 0.0;
  int with_history = 0;
  for (const StepRecord& s : r.trajectory) {
    if (!s.accepted) continue;
    span += s.dt;
    CHECK(s.err <= opts.tol);
    if (s.dt_cost) {
      ++with_history;
      CHECK(s.dt_next == std::min(s.dt_traditional, *s.dt_cost));
    } else {
      CHECK(s.dt_next == s.dt_traditional);
    }
  }
  CHECK(span == doctest::Approx(p->t_final()).epsilon(1e-12));
  CHECK(with_history == r.stats.steps_accepted - 1);
  CHECK(r.stats.rhs_evals > 0);
  CHECK(r.stats.krylov_matvecs > 0);
}

TEST_CASE("rejections retry with a smaller step") {
  auto p = make_problem(ProblemSpec{ProblemKind::Brusselator, 1e-3, 12});
  RhsSystem sys = make_system(*p);
  LoopOptions opts;
  opts.integrator = Integrator::Epirk4s3;
  opts.scheme = Scheme::Leja;
  opts.tol = 1e-9;
  opts.t_final = p->t_final();
  opts.dt_init = 0.5;
  const LoopResult r = adaptive_loop(sys, initial_state(*p), opts);
  REQUIRE(r.stats.steps_rejected > 0);
  CHECK(r.stats.spectrum_refreshes >= 1);
  for (const StepRecord& s : r.trajectory) {
    if (s.accepted) continue;
    if (s.engine_failure) {
      CHECK(s.dt_next == doctest::Approx(0.5 * s.dt));
    } else {
      CHECK(s.err > opts.tol);
      CHECK(s.dt_next == std::min(s.dt_traditional, 0.9 * s.dt));
    }
  }
}

TEST_CASE("cost control can be disabled") {
  auto p = make_problem(ProblemSpec{ProblemKind::AllenCahn, 0.01, 12});
  RhsSystem sys = make_system(*p);
  LoopOptions opts;
  opts.t_final = p->t_final();
  opts.cost_control = false;
  const LoopResult r = adaptive_loop(sys, initial_state(*p), opts);
  for (const StepRecord& s : r.trajectory) {
    CHECK(!s.dt_cost);
    if (s.accepted) CHECK(s.dt_next == s.dt_traditional);
  }
}

TEST_CASE("loop argument checks and abort") {
  auto p = make_problem(ProblemSpec{ProblemKind::AllenCahn, 0.01, 8});
  RhsSystem sys = make_system(*p);
  LoopOptions opts;
  opts.t_final = p->t_final();
  opts.scheme = Scheme::LeKry;
  opts.integrator = Integrator::Exprb43;
  CHECK_THROWS_AS((void)adaptive_loop(sys, initial_state(*p), opts), std::invalid_argument);
  opts.scheme = Scheme::Kiops;
  opts.max_attempts = 3;
  CHECK_THROWS_AS((void)adaptive_loop(sys, initial_state(*p), opts), IntegrationAborted);
  CHECK_THROWS_AS((void)adaptive_loop(sys, Vector::Zero(3), opts), DimensionMismatch);
}
