/**
 * @file bench.hpp
 * @brief Benchmark runs, cached reference solutions and tolerance sweeps
 *        written as CSV work-precision records.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "expint/integrators.hpp"
#include "expint/problems.hpp"

namespace expint {

struct RunConfig {
  ProblemKind problem = ProblemKind::Semilinear;
  double alpha = std::numeric_limits<double>::quiet_NaN();  ///< NaN: problem default
  Index n = 32;
  Integrator integrator = Integrator::Exprb43;
  Scheme scheme = Scheme::Kiops;
  double tol = 1e-6;
  std::optional<double> t_final;
  std::uint64_t seed = 0x5eed;
  JacobianMode jacobian = JacobianMode::Analytic;
  BrusselatorForm brusselator_form = BrusselatorForm::Printed;
  bool relative_error = true;
  /// Where non-analytic references are cached; empty disables caching.
  std::filesystem::path ref_cache_dir;
};

struct RunRecord {
  RunConfig config;
  bool ok = false;
  std::string error;
  int steps_accepted = 0;
  int steps_rejected = 0;
  std::int64_t rhs_evals = 0;
  std::int64_t leja_iters = 0;
  std::int64_t krylov_matvecs = 0;
  std::int64_t substeps = 0;
  double wall_time_s = 0.0;
  double l2_error = std::numeric_limits<double>::quiet_NaN();
  double t_reached = 0.0;  ///< sum of accepted steps
};

[[nodiscard]] ProblemSpec problem_spec(const RunConfig& config);

/// Reference integrator settings used for problems without an exact solution.
inline constexpr double kReferenceTol = 1e-12;

/// FNV-1a hash of everything that determines a reference solution.
[[nodiscard]] std::uint64_t reference_key(const ProblemSpec& spec);

/// Binary cache file: little-endian u64 count followed by little-endian doubles.
void write_reference(const std::filesystem::path& path, const Vector& u);
[[nodiscard]] Vector read_reference(const std::filesystem::path& path);

struct ReferenceInfo {
  bool cache_hit = false;
  bool exact = false;
  std::int64_t rhs_evals = 0;  ///< work spent building it (0 on a hit)
  std::filesystem::path path;
};

/**
 * Solution at t_final used to score runs: the exact solution when the problem
 * has one, otherwise EPIRK5P1 + KIOPS at kReferenceTol, cached in @p cache_dir.
 */
[[nodiscard]] Vector build_reference(const ProblemSpec& spec,
                                     const std::filesystem::path& cache_dir,
                                     ReferenceInfo* info = nullptr,
                                     double reference_tol = kReferenceTol);

/// Runs one configuration; failures are reported in the record, not thrown.
[[nodiscard]] RunRecord run_one(const RunConfig& config);
/// As above with a precomputed reference (physical unknowns only).
[[nodiscard]] RunRecord run_one(const RunConfig& config, const Vector& reference);

struct SweepConfig {
  std::vector<ProblemKind> problems{ProblemKind::Semilinear};
  /// Applied to each problem whose menu contains it; empty uses the default.
  std::vector<double> alphas;
  std::vector<Index> grids{32};
  std::vector<Integrator> integrators{Integrator::Exprb43};
  std::vector<Scheme> schemes{Scheme::Leja, Scheme::Kiops};
  std::vector<double> tols{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  std::optional<double> t_final;
  std::uint64_t seed = 0x5eed;
  JacobianMode jacobian = JacobianMode::Analytic;
  BrusselatorForm brusselator_form = BrusselatorForm::Printed;
  bool relative_error = true;
  std::filesystem::path ref_cache_dir;
  unsigned jobs = 1;
};

/// Cartesian product of the sweep axes, skipping undefined scheme pairings.
[[nodiscard]] std::vector<RunConfig> expand_sweep(const SweepConfig& sweep);

/// Runs every configuration (concurrently when jobs > 1), in config order.
[[nodiscard]] std::vector<RunRecord> run_sweep(const SweepConfig& sweep);

inline constexpr const char* kCsvHeader =
    "problem,param,n,integrator,scheme,tol,steps_accepted,steps_rejected,rhs_evals,leja_iters,"
    "krylov_matvecs,substeps,wall_time_s,l2_error";

/// Header plus one row per record; an extra trailing error column holds diagnostics.
void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

/// printf-style %.17g text; NaN prints as "nan".
[[nodiscard]] std::string format_double(double x);

}  // namespace expint
