#include "expint/leja.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "expint/matrix_function.hpp"

namespace expint {

std::vector<double> generate_leja_points(int count, int grid_density) {
  if (count < 1) throw std::invalid_argument("generate_leja_points: count must be >= 1");
  if (grid_density < 1) throw std::invalid_argument("generate_leja_points: density must be >= 1");

  // Candidates 2 (2i - N) / N are exactly symmetric about 0.
  const long intervals = 4L * grid_density;
  std::vector<double> candidates(static_cast<std::size_t>(intervals) + 1);
  for (long i = 0; i <= intervals; ++i) {
    candidates[static_cast<std::size_t>(i)] =
        2.0 * static_cast<double>(2 * i - intervals) / static_cast<double>(intervals);
  }

  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(count));
  points.push_back(2.0);

  // Products of distances are tracked as sums of logs to avoid underflow.
  std::vector<double> log_product(candidates.size(), 0.0);
  constexpr double kTieTolerance = 1e-10;
  while (static_cast<int>(points.size()) < count) {
    const double last = points.back();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double dist = std::abs(candidates[i] - last);
      log_product[i] += dist > 0.0 ? std::log(dist) : -std::numeric_limits<double>::infinity();
    }
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (log_product[i] > best_value + kTieTolerance) {
        best_value = log_product[i];
        best = i;
      }
    }
    if (!std::isfinite(best_value)) {
      throw std::invalid_argument("generate_leja_points: candidate grid exhausted");
    }
    points.push_back(candidates[best]);
  }
  return points;
}

const std::vector<double>& default_leja_points() {
  static const std::vector<double> points = generate_leja_points(kDefaultLejaCount);
  return points;
}

void write_leja_points(const std::filesystem::path& path, std::span<const double> points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_leja_points: cannot open " + path.string());
  out << std::setprecision(17);
  for (double x : points) out << x << '\n';
}

std::vector<double> read_leja_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_leja_points: cannot open " + path.string());
  std::vector<double> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const double x = std::stod(line);
    if (!(x >= -2.0 && x <= 2.0)) {
      throw std::runtime_error("read_leja_points: point outside [-2, 2]: " + line);
    }
    points.push_back(x);
  }
  return points;
}

std::vector<double> load_or_generate_leja_points(const std::filesystem::path& path, int count) {
  if (std::filesystem::exists(path)) {
    std::vector<double> points = read_leja_points(path);
    if (static_cast<int>(points.size()) >= count) {
      points.resize(static_cast<std::size_t>(count));
      return points;
    }
  }
  std::vector<double> points = generate_leja_points(count);
  write_leja_points(path, points);
  return points;
}

Vector divided_differences(int l, double h, const SpectrumEstimate& est, std::span<const double> xi,
                           Index count) {
  if (l < 0 || l > 4) throw std::invalid_argument("divided_differences: order must be in 0..4");
  if (h < 0.0) throw std::invalid_argument("divided_differences: negative scale");
  if (count < 1 || count > static_cast<Index>(xi.size())) {
    throw std::invalid_argument("divided_differences: count out of range");
  }
  Matrix Z = Matrix::Zero(count, count);
  for (Index j = 0; j < count; ++j) {
    Z(j, j) = h * (est.c + est.gamma * xi[static_cast<std::size_t>(j)]);
    if (j + 1 < count) Z(j + 1, j) = h * est.gamma;
  }
  const Vector e1 = Vector::Unit(count, 0);
  Vector d = dense_phi_action(l, Z, e1);
  if (!d.allFinite()) {
    throw NumericalError("divided_differences: non-finite coefficients (spectral estimate invalid)");
  }
  return d;
}

LejaResult leja_interpolate(MatrixFreeOperator& J, const Vector& b, int l, double h,
                            const SpectrumEstimate& est, double tol, std::span<const double> xi) {
  const double one = 1.0;
  VerticalLejaResult v = leja_interpolate_vertical(J, b, l, std::span<const double>(&one, 1), h,
                                                   est, tol, xi);
  return {std::move(v.values.front()), v.iterations.front()};
}

VerticalLejaResult leja_interpolate_vertical(MatrixFreeOperator& J, const Vector& b, int l,
                                             std::span<const double> coeffs, double h,
                                             const SpectrumEstimate& est, double tol,
                                             std::span<const double> xi) {
  if (!(tol > 0.0)) throw std::invalid_argument("leja_interpolate: tolerance must be positive");
  if (coeffs.empty()) throw std::invalid_argument("leja_interpolate_vertical: no coefficients");
  if (b.size() != J.dim()) throw DimensionMismatch("leja_interpolate: operator/vector mismatch");
  if (xi.empty()) throw std::invalid_argument("leja_interpolate: no Leja points");
  for (double ci : coeffs) {
    if (!(ci > 0.0 && ci <= 1.0)) {
      throw std::invalid_argument("leja_interpolate_vertical: coefficients must lie in (0, 1]");
    }
  }

  const std::size_t k = coeffs.size();
  const Index max_terms = static_cast<Index>(xi.size());
  const Index n = b.size();

  VerticalLejaResult result;
  result.values.assign(k, Vector::Zero(n));
  result.iterations.assign(k, 0);
  std::vector<bool> frozen(k, false);
  std::size_t n_frozen = 0;

  std::vector<Vector> dd(k);
  Index dd_count = 0;
  auto extend_coefficients = [&](Index needed) {
    Index next = dd_count == 0 ? std::min<Index>(max_terms, 32) : std::min(max_terms, 2 * dd_count);
    next = std::max(next, std::min(needed, max_terms));
    for (std::size_t i = 0; i < k; ++i) {
      if (!frozen[i]) dd[i] = divided_differences(l, coeffs[i] * h, est, xi, next);
    }
    dd_count = next;
  };

  const double inv_gamma = 1.0 / est.gamma;
  Vector y = b;
  Vector Jy(n);
  Index m = 0;
  for (; m < max_terms; ++m) {
    if (m >= dd_count) extend_coefficients(m + 1);
    const double y_norm = y.norm();
    if (!std::isfinite(y_norm)) throw NumericalError("leja_interpolate: non-finite Newton basis");
    for (std::size_t i = 0; i < k; ++i) {
      if (frozen[i]) continue;
      const double dm = dd[i][m];
      result.values[i].noalias() += dm * y;
      if (std::abs(dm) * y_norm < tol) {
        frozen[i] = true;
        result.iterations[i] = static_cast<int>(m + 1);
        ++n_frozen;
      }
    }
    if (n_frozen == k) break;
    if (m + 1 == max_terms) break;
    J.apply(y, Jy);
    // y_{m+1} = ((J - c)/gamma - xi_m) y_m
    const double shift = est.c * inv_gamma + xi[static_cast<std::size_t>(m)];
    y = inv_gamma * Jy - shift * y;
  }

  if (n_frozen != k) {
    int stalled = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!frozen[i]) {
        stalled = static_cast<int>(i);
        break;
      }
    }
    throw NonConvergence("leja_interpolate: no convergence within " + std::to_string(max_terms) +
                             " Leja points",
                         static_cast<int>(max_terms), stalled);
  }
  result.total_iterations = *std::max_element(result.iterations.begin(), result.iterations.end());
  return result;
}

}  // namespace expint
