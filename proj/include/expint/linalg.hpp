/**
 * @file linalg.hpp
 * @brief Vector kernels, counted matrix-free operators and the instrumented
 *        right-hand-side wrapper shared by every engine.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace expint {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateDirection : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised whenever a NaN or Inf shows up in a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative engine ran out of budget before meeting its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, int iterations, int stalled_index = -1)
      : std::runtime_error(what), iterations_(iterations), stalled_index_(stalled_index) {}

  [[nodiscard]] int iterations() const noexcept { return iterations_; }
  /// For vertical evaluations: position of the coefficient that stalled.
  [[nodiscard]] int stalled_index() const noexcept { return stalled_index_; }

 private:
  int iterations_;
  int stalled_index_;
};

inline void require_same_size(const Vector& x, const Vector& y, const char* where) {
  if (x.size() != y.size()) {
    throw DimensionMismatch(std::string(where) + ": length " + std::to_string(x.size()) +
                            " vs " + std::to_string(y.size()));
  }
}

/// Unnormalized Euclidean norm.
[[nodiscard]] inline double norm_l2(const Vector& v) { return v.norm(); }

[[nodiscard]] inline double dot(const Vector& x, const Vector& y) {
  require_same_size(x, y, "dot");
  return x.dot(y);
}

/// y <- a*x + y
inline void axpy(double a, const Vector& x, Vector& y) {
  require_same_size(x, y, "axpy");
  y.noalias() += a * x;
}

[[nodiscard]] inline bool all_finite(const Vector& v) { return v.allFinite(); }

/**
 * @brief Linear map known only through its action, with an application count.
 *
 * The counter is monotone; copies share nothing, so a copied operator starts
 * its own count from the value at copy time.
 */
class MatrixFreeOperator {
 public:
  using ApplyFn = std::function<void(const Vector& in, Vector& out)>;

  MatrixFreeOperator(Index dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {
    if (dim <= 0) throw std::invalid_argument("MatrixFreeOperator: dimension must be positive");
  }

  void apply(const Vector& in, Vector& out) {
    if (in.size() != dim_) {
      throw DimensionMismatch("MatrixFreeOperator::apply: expected length " +
                              std::to_string(dim_) + ", got " + std::to_string(in.size()));
    }
    out.resize(dim_);
    fn_(in, out);
    ++applications_;
  }

  [[nodiscard]] Vector operator()(const Vector& in) {
    Vector out(dim_);
    apply(in, out);
    return out;
  }

  [[nodiscard]] Index dim() const noexcept { return dim_; }
  [[nodiscard]] std::int64_t applications() const noexcept { return applications_; }

 private:
  Index dim_;
  ApplyFn fn_;
  std::int64_t applications_ = 0;
};

/// Wraps a dense matrix (tests and oracles).
[[nodiscard]] inline MatrixFreeOperator make_dense_operator(Matrix A) {
  if (A.rows() != A.cols()) throw DimensionMismatch("make_dense_operator: matrix must be square");
  const Index n = A.rows();
  return MatrixFreeOperator(n, [A = std::move(A)](const Vector& in, Vector& out) {
    out.noalias() = A * in;
  });
}

/**
 * @brief Autonomous system du/dt = f(u) with instrumented evaluation counts.
 *
 * An optional analytic Jacobian action may be attached. Every call to either
 * the right-hand side or the Jacobian action counts as one RHS-equivalent
 * evaluation in rhs_evals().
 */
class RhsSystem {
 public:
  using RhsFn = std::function<void(const Vector& u, Vector& du)>;
  using JacobianFn = std::function<void(const Vector& u, const Vector& v, Vector& jv)>;

  RhsSystem(Index dim, RhsFn rhs, JacobianFn jacobian = {})
      : dim_(dim), rhs_(std::move(rhs)), jacobian_(std::move(jacobian)) {}

  void rhs(const Vector& u, Vector& du) {
    if (u.size() != dim_) throw DimensionMismatch("RhsSystem::rhs: wrong state length");
    du.resize(dim_);
    rhs_(u, du);
    ++rhs_calls_;
  }

  [[nodiscard]] Vector rhs(const Vector& u) {
    Vector du(dim_);
    rhs(u, du);
    return du;
  }

  [[nodiscard]] bool has_jacobian() const noexcept { return static_cast<bool>(jacobian_); }

  void jacobian_action(const Vector& u, const Vector& v, Vector& jv) {
    if (!jacobian_) throw std::logic_error("RhsSystem: no analytic Jacobian attached");
    jv.resize(dim_);
    jacobian_(u, v, jv);
    ++jacobian_calls_;
  }

  [[nodiscard]] Index dim() const noexcept { return dim_; }
  [[nodiscard]] std::int64_t rhs_calls() const noexcept { return rhs_calls_; }
  [[nodiscard]] std::int64_t jacobian_calls() const noexcept { return jacobian_calls_; }
  [[nodiscard]] std::int64_t rhs_evals() const noexcept { return rhs_calls_ + jacobian_calls_; }

 private:
  Index dim_;
  RhsFn rhs_;
  JacobianFn jacobian_;
  std::int64_t rhs_calls_ = 0;
  std::int64_t jacobian_calls_ = 0;
};

/// Finite-difference increment sqrt(eps) * (1 + |u|) / |v|.
[[nodiscard]] double fd_increment(const Vector& u, const Vector& v);

/**
 * @brief Forward-difference Jacobian action (f(u + e v) - f(u)) / e.
 *
 * @p fu must hold f(u); only one new evaluation of @p f is made.
 */
[[nodiscard]] Vector fd_jacobian_apply(const std::function<Vector(const Vector&)>& f,
                                       const Vector& u, const Vector& fu, const Vector& v);

/// Convenience overload that evaluates f(u) itself (two evaluations).
[[nodiscard]] Vector fd_jacobian_apply(const std::function<Vector(const Vector&)>& f,
                                       const Vector& u, const Vector& v);

}  // namespace expint
