// Command-line harness: single runs, tolerance sweeps, reference caching and
// Leja point generation.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "expint/bench.hpp"
#include "expint/leja.hpp"

using namespace expint;
using json = nlohmann::json;

namespace {

JacobianMode parse_jacobian(const std::string& s) {
  if (s == "analytic") return JacobianMode::Analytic;
  if (s == "fd") return JacobianMode::FiniteDifference;
  throw std::invalid_argument("unknown jacobian mode '" + s + "' (analytic|fd)");
}

BrusselatorForm parse_form(const std::string& s) {
  if (s == "printed") return BrusselatorForm::Printed;
  if (s == "standard") return BrusselatorForm::Standard;
  throw std::invalid_argument("unknown brusselator form '" + s + "' (printed|standard)");
}

bool parse_norm(const std::string& s) {
  if (s == "relative") return true;
  if (s == "absolute") return false;
  throw std::invalid_argument("unknown error norm '" + s + "' (relative|absolute)");
}

template <typename T, typename F>
std::vector<T> map_names(const std::vector<std::string>& names, F parse) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

/// Reads the sweep axes from a JSON document; absent keys keep their defaults.
void apply_json(const json& j, SweepConfig& s, std::string& out_path) {
  auto strings = [&](const char* key) { return j.at(key).get<std::vector<std::string>>(); };
  if (j.contains("problems")) s.problems = map_names<ProblemKind>(strings("problems"), parse_problem_kind);
  if (j.contains("alphas")) s.alphas = j.at("alphas").get<std::vector<double>>();
  if (j.contains("grids")) s.grids = j.at("grids").get<std::vector<Index>>();
  if (j.contains("integrators")) s.integrators = map_names<Integrator>(strings("integrators"), parse_integrator);
  if (j.contains("schemes")) s.schemes = map_names<Scheme>(strings("schemes"), parse_scheme);
  if (j.contains("tols")) s.tols = j.at("tols").get<std::vector<double>>();
  if (j.contains("t_final")) s.t_final = j.at("t_final").get<double>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) s.jobs = j.at("jobs").get<unsigned>();
  if (j.contains("jacobian")) s.jacobian = parse_jacobian(j.at("jacobian").get<std::string>());
  if (j.contains("brusselator_form")) s.brusselator_form = parse_form(j.at("brusselator_form").get<std::string>());
  if (j.contains("error_norm")) s.relative_error = parse_norm(j.at("error_norm").get<std::string>());
  if (j.contains("ref_cache_dir")) s.ref_cache_dir = j.at("ref_cache_dir").get<std::string>();
  if (j.contains("out")) out_path = j.at("out").get<std::string>();
}

struct CommonFlags {
  std::vector<std::string> problems;
  std::vector<double> alphas;
  std::vector<Index> grids;
  std::vector<std::string> integrators;
  std::vector<std::string> schemes;
  double tol = 0.0;
  std::vector<double> tols;
  double t_final = 0.0;
  std::string jacobian;
  std::string form;
  std::string norm;
  std::string ref_cache_dir;
  std::string out;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* app, CommonFlags& f, bool multi) {
  if (multi) {
    app->add_option("--problem", f.problems, "adr|allen_cahn|brusselator|gray_scott|semilinear");
    app->add_option("--alpha", f.alphas, "diffusion coefficient(s)");
    app->add_option("--grid", f.grids, "points per dimension");
    app->add_option("--integrator", f.integrators,
                    "epirk4s3|epirk4s3a|epirk5p1|exprb43|exprb53s3");
    app->add_option("--scheme", f.schemes, "leja|kiops|lekry");
    app->add_option("--tols", f.tols, "tolerance sweep")->delimiter(',');
  } else {
    app->add_option("--problem", f.problems, "problem name")->expected(1);
    app->add_option("--alpha", f.alphas, "diffusion coefficient")->expected(1);
    app->add_option("--grid", f.grids, "points per dimension")->expected(1);
    app->add_option("--integrator", f.integrators, "integrator")->expected(1);
    app->add_option("--scheme", f.schemes, "scheme")->expected(1);
  }
  app->add_option("--tol", f.tol, "single tolerance");
  app->add_option("--t-final", f.t_final, "override the final time");
  app->add_option("--jacobian", f.jacobian, "analytic|fd");
  app->add_option("--brusselator-form", f.form, "printed|standard");
  app->add_option("--error-norm", f.norm, "relative|absolute");
  app->add_option("--ref-cache-dir", f.ref_cache_dir, "reference cache directory");
  app->add_option("--out", f.out, "output CSV path (default: stdout)");
  app->add_option("--seed", f.seed, "power-iteration seed");
}

void apply_flags(const CommonFlags& f, SweepConfig& s, std::string& out_path) {
  if (!f.problems.empty()) s.problems = map_names<ProblemKind>(f.problems, parse_problem_kind);
  if (!f.alphas.empty()) s.alphas = f.alphas;
  if (!f.grids.empty()) s.grids = f.grids;
  if (!f.integrators.empty()) s.integrators = map_names<Integrator>(f.integrators, parse_integrator);
  if (!f.schemes.empty()) s.schemes = map_names<Scheme>(f.schemes, parse_scheme);
  if (!f.tols.empty()) s.tols = f.tols;
  if (f.tol > 0.0) s.tols = {f.tol};
  if (f.t_final > 0.0) s.t_final = f.t_final;
  if (!f.jacobian.empty()) s.jacobian = parse_jacobian(f.jacobian);
  if (!f.form.empty()) s.brusselator_form = parse_form(f.form);
  if (!f.norm.empty()) s.relative_error = parse_norm(f.norm);
  if (!f.ref_cache_dir.empty()) s.ref_cache_dir = f.ref_cache_dir;
  if (!f.out.empty()) out_path = f.out;
  if (f.seed != 0) s.seed = f.seed;
}

int emit(const std::vector<RunRecord>& records, const std::string& out_path) {
  if (out_path.empty()) {
    write_csv(std::cout, records);
  } else {
    write_csv(out_path, records);
  }
  int failed = 0;
  for (const RunRecord& r : records) {
    if (!r.ok) {
      ++failed;
      std::cerr << "failed: " << to_string(r.config.problem) << ' '
                << to_string(r.config.integrator) << '/' << to_string(r.config.scheme)
                << " tol=" << r.config.tol << ": " << r.error << '\n';
    }
  }
  if (failed > 0) std::cerr << failed << " of " << records.size() << " runs failed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential integrator benchmark harness"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "integrate one configuration");
  add_common(run, run_flags, false);

  CommonFlags sweep_flags;
  std::string config_path;
  unsigned jobs = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "Cartesian sweep over problems and tolerances");
  add_common(sweep, sweep_flags, true);
  sweep->add_option("--config", config_path, "JSON sweep description")->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "concurrent runs");

  CommonFlags ref_flags;
  CLI::App* reference = app.add_subcommand("reference", "build or look up a cached reference");
  add_common(reference, ref_flags, false);

  int leja_count = kDefaultLejaCount;
  int leja_density = kDefaultLejaDensity;
  std::string leja_out = "leja_points.txt";
  CLI::App* leja = app.add_subcommand("leja-points", "write the Leja point file");
  leja->add_option("--count", leja_count, "number of points");
  leja->add_option("--density", leja_density, "candidates per unit length");
  leja->add_option("--out", leja_out, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *reference) {
      const CommonFlags& f = *run ? run_flags : ref_flags;
      SweepConfig s;
      std::string out_path;
      apply_flags(f, s, out_path);
      if (s.problems.size() != 1 || s.grids.size() != 1) {
        throw std::invalid_argument("give exactly one --problem and --grid");
      }
      std::vector<RunConfig> configs = expand_sweep(s);
      if (*reference) {
        RunConfig c = configs.empty() ? RunConfig{} : configs.front();
        c.problem = s.problems.front();
        c.n = s.grids.front();
        if (!s.alphas.empty()) c.alpha = s.alphas.front();
        c.t_final = s.t_final;
        c.brusselator_form = s.brusselator_form;
        ReferenceInfo info;
        const Vector u = build_reference(problem_spec(c), s.ref_cache_dir, &info);
        std::cout << "dof " << u.size() << '\n'
                  << "source " << (info.exact ? "exact" : info.cache_hit ? "cache" : "computed")
                  << '\n'
                  << "rhs_evals " << info.rhs_evals << '\n';
        if (!info.path.empty()) std::cout << "path " << info.path.string() << '\n';
        return 0;
      }
      if (configs.size() != 1) {
        throw std::invalid_argument("run needs one valid integrator/scheme/alpha combination");
      }
      return emit({run_one(configs.front())}, out_path);
    }

    if (*sweep) {
      SweepConfig s;
      std::string out_path;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        apply_json(json::parse(in), s, out_path);
      }
      apply_flags(sweep_flags, s, out_path);
      if (jobs > 0) s.jobs = jobs;
      return emit(run_sweep(s), out_path);
    }

    if (*leja) {
      write_leja_points(leja_out, generate_leja_points(leja_count, leja_density));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
