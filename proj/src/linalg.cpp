#include "expint/linalg.hpp"

#include <cmath>
#include <limits>

namespace expint {

double fd_increment(const Vector& u, const Vector& v) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) throw DegenerateDirection("fd_jacobian_apply: zero direction vector");
  return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + u.norm()) / vnorm;
}

Vector fd_jacobian_apply(const std::function<Vector(const Vector&)>& f, const Vector& u,
                         const Vector& fu, const Vector& v) {
  require_same_size(u, v, "fd_jacobian_apply");
  require_same_size(u, fu, "fd_jacobian_apply");
  const double eps = fd_increment(u, v);
  const Vector shifted = u + eps * v;
  Vector jv = (f(shifted) - fu) / eps;
  if (!jv.allFinite()) throw NumericalError("fd_jacobian_apply: non-finite Jacobian action");
  return jv;
}

Vector fd_jacobian_apply(const std::function<Vector(const Vector&)>& f, const Vector& u,
                         const Vector& v) {
  return fd_jacobian_apply(f, u, f(u), v);
}

}  // namespace expint
