#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "expint/bench.hpp"

using namespace expint;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("CSV layout") {
  CHECK(std::string(kCsvHeader) ==
        "problem,param,n,integrator,scheme,tol,steps_accepted,steps_rejected,rhs_evals,"
        "leja_iters,krylov_matvecs,substeps,wall_time_s,l2_error");
  std::ostringstream out;
  write_csv(out, {});
  CHECK(split_lines(out.str()).front().rfind(kCsvHeader, 0) == 0);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("sweep expansion") {
  SweepConfig s;
  s.problems = {ProblemKind::Semilinear};
  s.schemes = {Scheme::Leja, Scheme::Kiops};
  CHECK(expand_sweep(s).size() == 14);

  s.integrators = {Integrator::Exprb43, Integrator::Epirk4s3};
  s.schemes = {Scheme::LeKry};
  s.tols = {1e-6};
  const auto configs = expand_sweep(s);
  REQUIRE(configs.size() == 1);
  CHECK(configs.front().integrator == Integrator::Epirk4s3);

  s.problems = {ProblemKind::Brusselator};
  s.alphas = {0.1, 0.5, 1e-3};
  CHECK(expand_sweep(s).size() == 2);
}

TEST_CASE("single run against the exact solution") {
  RunConfig c;
  c.problem = ProblemKind::Semilinear;
  c.n = 128;
  c.integrator = Integrator::Exprb43;
  c.scheme = Scheme::Kiops;
  c.tol = 1e-8;
  const RunRecord r = run_one(c);
  REQUIRE(r.ok);
  CHECK(r.l2_error <= 1e-7);
  CHECK(r.steps_accepted >= 1);
  CHECK(r.t_reached == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rhs_evals > 0);
  CHECK(r.krylov_matvecs > 0);
  CHECK(r.leja_iters == 0);
}

TEST_CASE("failed runs are reported, not thrown") {
  RunConfig c;
  c.problem = ProblemKind::Adr;
  c.alpha = 0.5;
  const RunRecord r = run_one(c);
  CHECK(!r.ok);
  CHECK(!r.error.empty());
  std::ostringstream out;
  write_csv(out, {r});
  const auto fields = split_fields(split_lines(out.str()).at(1));
  REQUIRE(fields.size() == 15);
  CHECK(fields[13] == "nan");
  CHECK(!fields[14].empty());
}

TEST_CASE("runs are deterministic") {
  RunConfig c;
  c.problem = ProblemKind::AllenCahn;
  c.n = 12;
  c.integrator = Integrator::Epirk4s3;
  c.scheme = Scheme::LeKry;
  c.tol = 1e-6;
  c.ref_cache_dir = scratch_dir("expint_det_refs");
  RunRecord a = run_one(c);
  RunRecord b = run_one(c);
  REQUIRE(a.ok);
  CHECK(a.l2_error == b.l2_error);
  CHECK(a.rhs_evals == b.rhs_evals);
  CHECK(a.leja_iters == b.leja_iters);
  CHECK(a.krylov_matvecs == b.krylov_matvecs);
  CHECK(a.steps_rejected == b.steps_rejected);

  SweepConfig s;
  s.problems = {ProblemKind::AllenCahn};
  s.grids = {12};
  s.integrators = {Integrator::Epirk4s3, Integrator::Exprb43};
  s.schemes = {Scheme::Leja, Scheme::Kiops};
  s.tols = {1e-4, 1e-6};
  s.ref_cache_dir = c.ref_cache_dir;
  auto strip_time = [](std::vector<RunRecord> recs) {
    for (auto& r : recs) r.wall_time_s = 0.0;
    std::ostringstream out;
    write_csv(out, recs);
    return out.str();
  };
  s.jobs = 1;
  const std::string serial = strip_time(run_sweep(s));
  s.jobs = 4;
  const std::string parallel = strip_time(run_sweep(s));
  CHECK(serial == parallel);
  CHECK(split_lines(serial).size() == 9);
  std::filesystem::remove_all(c.ref_cache_dir);
}

TEST_CASE("reference solutions") {
  SUBCASE("exact solution when available") {
    ProblemSpec spec;
    spec.kind = ProblemKind::Semilinear;
    spec.n = 64;
    ReferenceInfo info;
    const Vector u = build_reference(spec, {}, &info);
    CHECK(info.exact);
    const double h = 1.0 / 65.0;
    CHECK(u[31] == doctest::Approx(32 * h * (1 - 32 * h) * std::exp(1.0)).epsilon(1e-14));
  }
  SUBCASE("cache round trip") {
    const auto dir = scratch_dir("expint_ref_cache");
    ProblemSpec spec;
    spec.kind = ProblemKind::GrayScott;
    spec.n = 12;
    ReferenceInfo first;
    const Vector a = build_reference(spec, dir, &first);
    CHECK(!first.cache_hit);
    CHECK(first.rhs_evals > 0);
    CHECK(std::filesystem::exists(first.path));
    ReferenceInfo second;
    const Vector b = build_reference(spec, dir, &second);
    CHECK(second.cache_hit);
    CHECK(second.rhs_evals == 0);
    CHECK(a == b);

    const Vector looser = build_reference(spec, {}, nullptr, 1e-11);
    CHECK((looser - a).norm() / a.norm() < 1e-10);

    write_reference(dir / "x.ref", a);
    CHECK(read_reference(dir / "x.ref") == a);
    std::filesystem::resize_file(dir / "x.ref", 20);
    CHECK_THROWS((void)read_reference(dir / "x.ref"));
    std::filesystem::remove_all(dir);
  }
  SUBCASE("keys separate distinct problems") {
    ProblemSpec a;
    a.kind = ProblemKind::Brusselator;
    a.alpha = 1e-3;
    ProblemSpec b = a;
    b.n = 64;
    ProblemSpec c = a;
    c.brusselator_form = BrusselatorForm::Standard;
    CHECK(reference_key(a) != reference_key(b));
    CHECK(reference_key(a) != reference_key(c));
    CHECK(reference_key(a) == reference_key(ProblemSpec(a)));
  }
}
