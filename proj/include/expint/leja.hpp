/**
 * @file leja.hpp
 * @brief Newton interpolation of phi_l(h J) b at real Leja points.
 *
 * The spectrum estimate maps J onto [-2, 2] via (J - c)/gamma. Coefficients
 * of z -> phi_l(h (c + gamma z)) are taken as the first column of phi_l of
 * the bidiagonal node matrix, which stays accurate where recursive
 * divided-difference tables lose every digit.
 */
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "expint/linalg.hpp"
#include "expint/spectrum.hpp"

namespace expint {

inline constexpr int kDefaultLejaCount = 400;
inline constexpr int kDefaultLejaDensity = 25000;

/**
 * Greedy Leja sequence on [-2, 2] starting at 2. Candidates form a uniform
 * grid with @p grid_density points per unit length (both endpoints included);
 * exact ties go to the smaller candidate.
 */
[[nodiscard]] std::vector<double> generate_leja_points(int count,
                                                       int grid_density = kDefaultLejaDensity);

/// The 400-point default sequence, generated on first use.
[[nodiscard]] const std::vector<double>& default_leja_points();

/// One value per line, 17 significant digits.
void write_leja_points(const std::filesystem::path& path, std::span<const double> points);
[[nodiscard]] std::vector<double> read_leja_points(const std::filesystem::path& path);

/// Reads @p path if it holds at least @p count points, else generates and writes it.
[[nodiscard]] std::vector<double> load_or_generate_leja_points(const std::filesystem::path& path,
                                                               int count = kDefaultLejaCount);

/**
 * Newton coefficients d_0..d_{count-1} of z -> phi_l(h (c + gamma z)) at
 * the first @p count points of @p xi.
 */
[[nodiscard]] Vector divided_differences(int l, double h, const SpectrumEstimate& est,
                                         std::span<const double> xi, Index count);

struct LejaResult {
  Vector value;
  int iterations = 0;
};

struct VerticalLejaResult {
  std::vector<Vector> values;   ///< one per coefficient, input order
  std::vector<int> iterations;  ///< terms used before each accumulator froze
  int total_iterations = 0;     ///< terms of the shared recurrence (slowest coefficient)
};

/**
 * phi_l(h J) b. Stops once |d_m| |y_m| < tol; throws NonConvergence when all
 * points in @p xi are used up.
 */
[[nodiscard]] LejaResult leja_interpolate(MatrixFreeOperator& J, const Vector& b, int l, double h,
                                          const SpectrumEstimate& est, double tol,
                                          std::span<const double> xi = default_leja_points());

/**
 * phi_l(coeffs[i] h J) b for every coefficient from one shared Newton basis
 * recurrence. Each accumulator freezes on its own criterion; the recurrence
 * runs until the last one freezes, so operator applications equal those of
 * the slowest coefficient alone.
 */
[[nodiscard]] VerticalLejaResult leja_interpolate_vertical(
    MatrixFreeOperator& J, const Vector& b, int l, std::span<const double> coeffs, double h,
    const SpectrumEstimate& est, double tol, std::span<const double> xi = default_leja_points());

}  // namespace expint
