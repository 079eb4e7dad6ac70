#include "expint/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "expint/timestep.hpp"

namespace expint {

ProblemSpec problem_spec(const RunConfig& config) {
  ProblemSpec spec;
  spec.kind = config.problem;
  spec.alpha = config.alpha;
  spec.n = config.n;
  spec.t_final = config.t_final;
  spec.brusselator_form = config.brusselator_form;
  return spec;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

double spec_t_final(const ProblemSpec& spec) {
  return spec.t_final.value_or(default_t_final(spec.kind));
}

}  // namespace

std::uint64_t reference_key(const ProblemSpec& spec) {
  std::ostringstream key;
  key << "problem=" << to_string(spec.kind) << ";alpha=" << format_double(spec.alpha)
      << ";n=" << spec.n << ";t_final=" << format_double(spec_t_final(spec))
      << ";brusselator=" << (spec.brusselator_form == BrusselatorForm::Printed ? "printed"
                                                                               : "standard")
      << ";reference=epirk5p1/kiops/" << format_double(kReferenceTol);
  return fnv1a(key.str());
}

void write_reference(const std::filesystem::path& path, const Vector& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_reference: cannot open " + path.string());
  const std::uint64_t count = to_little_endian(static_cast<std::uint64_t>(u.size()));
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (Index i = 0; i < u.size(); ++i) {
    const double v = to_little_endian(u[i]);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  if (!out) throw std::runtime_error("write_reference: write failed for " + path.string());
}

Vector read_reference(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_reference: cannot open " + path.string());
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  count = to_little_endian(count);
  if (!in || count > (std::uint64_t{1} << 32)) {
    throw std::runtime_error("read_reference: corrupt header in " + path.string());
  }
  Vector u(static_cast<Index>(count));
  for (Index i = 0; i < u.size(); ++i) {
    double v = 0.0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    u[i] = to_little_endian(v);
  }
  if (!in) throw std::runtime_error("read_reference: truncated file " + path.string());
  return u;
}

Vector build_reference(const ProblemSpec& spec, const std::filesystem::path& cache_dir,
                       ReferenceInfo* info, double reference_tol) {
  ReferenceInfo local;
  ReferenceInfo& inf = info ? *info : local;
  inf = ReferenceInfo{};
  auto problem = make_problem(spec);
  if (auto exact = problem->exact_solution(problem->t_final())) {
    inf.exact = true;
    return *exact;
  }

  std::filesystem::path path;
  if (!cache_dir.empty()) {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.ref",
                  static_cast<unsigned long long>(reference_key(problem->spec())));
    path = cache_dir / name;
    inf.path = path;
    if (reference_tol == kReferenceTol && std::filesystem::exists(path)) {
      Vector u = read_reference(path);
      if (u.size() == problem->dof()) {
        inf.cache_hit = true;
        return u;
      }
    }
  }

  RhsSystem system = make_system(*problem);
  LoopOptions opts;
  opts.integrator = Integrator::Epirk5p1;
  opts.scheme = Scheme::Kiops;
  opts.tol = reference_tol;
  opts.t_final = problem->t_final();
  opts.keep_trajectory = false;
  LoopResult r;
  try {
    r = adaptive_loop(system, initial_state(*problem), opts);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("reference run failed (") + e.what() +
                             "); loosen the reference tolerance");
  }
  inf.rhs_evals = r.stats.rhs_evals;
  Vector u = physical_part(*problem, r.state);
  if (!path.empty() && reference_tol == kReferenceTol) {
    std::filesystem::create_directories(cache_dir);
    write_reference(path, u);
  }
  return u;
}

RunRecord run_one(const RunConfig& config) {
  RunRecord rec;
  rec.config = config;
  Vector reference;
  try {
    reference = build_reference(problem_spec(config), config.ref_cache_dir);
  } catch (const std::exception& e) {
    rec.error = e.what();
    return rec;
  }
  return run_one(config, reference);
}

RunRecord run_one(const RunConfig& config, const Vector& reference) {
  RunRecord rec;
  rec.config = config;
  try {
    auto problem = make_problem(problem_spec(config));
    rec.config.alpha = problem->alpha();
    RhsSystem system = make_system(*problem);
    LoopOptions opts;
    opts.integrator = config.integrator;
    opts.scheme = config.scheme;
    opts.tol = config.tol;
    opts.t_final = problem->t_final();
    opts.jacobian = config.jacobian;
    opts.spectrum.power.seed = config.seed;
    opts.keep_trajectory = true;

    LoopResult r = adaptive_loop(system, initial_state(*problem), opts);
    rec.steps_accepted = r.stats.steps_accepted;
    rec.steps_rejected = r.stats.steps_rejected;
    rec.rhs_evals = r.stats.rhs_evals;
    rec.leja_iters = r.stats.leja_iterations;
    rec.krylov_matvecs = r.stats.krylov_matvecs;
    rec.substeps = r.stats.substeps;
    rec.wall_time_s = r.stats.wall_time_s;
    for (const StepRecord& s : r.trajectory) {
      if (s.accepted) rec.t_reached += s.dt;
    }

    const Vector u = physical_part(*problem, r.state);
    if (reference.size() != u.size()) {
      throw DimensionMismatch("run_one: reference does not match the grid");
    }
    const double diff = (u - reference).norm();
    rec.l2_error = config.relative_error ? diff / reference.norm() : diff;
    rec.ok = std::isfinite(rec.l2_error);
    if (!rec.ok) rec.error = "non-finite global error";
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.l2_error = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

std::vector<RunConfig> expand_sweep(const SweepConfig& sweep) {
  std::vector<RunConfig> out;
  for (ProblemKind problem : sweep.problems) {
    std::vector<double> alphas;
    const std::vector<double> menu = allowed_alphas(problem);
    if (menu.empty()) {
      alphas.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (sweep.alphas.empty()) {
      alphas.push_back(default_alpha(problem));
    } else {
      for (double a : sweep.alphas) {
        for (double m : menu) {
          if (std::abs(a - m) <= 1e-12 * m) alphas.push_back(m);
        }
      }
    }
    for (double alpha : alphas) {
      for (Index n : sweep.grids) {
        for (Integrator integrator : sweep.integrators) {
          for (Scheme scheme : sweep.schemes) {
            if (!supports(integrator, scheme)) continue;
            for (double tol : sweep.tols) {
              RunConfig c;
              c.problem = problem;
              c.alpha = alpha;
              c.n = n;
              c.integrator = integrator;
              c.scheme = scheme;
              c.tol = tol;
              c.t_final = sweep.t_final;
              c.seed = sweep.seed;
              c.jacobian = sweep.jacobian;
              c.brusselator_form = sweep.brusselator_form;
              c.relative_error = sweep.relative_error;
              c.ref_cache_dir = sweep.ref_cache_dir;
              out.push_back(c);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_sweep(const SweepConfig& sweep) {
  const std::vector<RunConfig> configs = expand_sweep(sweep);

  // References are built up front, one per distinct problem instance.
  std::map<std::uint64_t, std::optional<Vector>> references;
  std::map<std::uint64_t, std::string> reference_errors;
  std::vector<std::uint64_t> keys;
  for (const RunConfig& c : configs) {
    ProblemSpec spec = problem_spec(c);
    const std::uint64_t key = fnv1a(std::to_string(reference_key(spec)) +
                                    (c.relative_error ? "r" : "a"));
    keys.push_back(key);
    if (references.count(key)) continue;
    try {
      references[key] = build_reference(spec, sweep.ref_cache_dir);
    } catch (const std::exception& e) {
      references[key] = std::nullopt;
      reference_errors[key] = e.what();
    }
  }

  std::vector<RunRecord> records(configs.size());
  auto work = [&](std::size_t i) {
    const auto& ref = references.at(keys[i]);
    if (ref) {
      records[i] = run_one(configs[i], *ref);
    } else {
      records[i].config = configs[i];
      records[i].error = reference_errors.at(keys[i]);
    }
  };

  const unsigned jobs = std::max(1u, sweep.jobs);
  if (jobs == 1 || configs.size() < 2) {
    for (std::size_t i = 0; i < configs.size(); ++i) work(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<std::size_t>(jobs, configs.size()); ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return records;
}

namespace {

std::string csv_escape(const std::string& field) {
  std::string clean = field;
  for (char& c : clean) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  if (clean.find_first_of(",\"") == std::string::npos) return clean;
  std::string quoted = "\"";
  for (char c : clean) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << ",error\n";
  for (const RunRecord& r : records) {
    const RunConfig& c = r.config;
    out << to_string(c.problem) << ',' << (std::isnan(c.alpha) ? "none" : format_double(c.alpha))
        << ',' << c.n << ',' << to_string(c.integrator) << ',' << to_string(c.scheme) << ','
        << format_double(c.tol) << ',' << r.steps_accepted << ',' << r.steps_rejected << ','
        << r.rhs_evals << ',' << r.leja_iters << ',' << r.krylov_matvecs << ',' << r.substeps
        << ',' << format_double(r.wall_time_s) << ','
        << (r.ok ? format_double(r.l2_error) : "nan") << ',' << csv_escape(r.error) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  write_csv(out, records);
}

}  // namespace expint
