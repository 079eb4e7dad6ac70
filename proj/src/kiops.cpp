#include "expint/kiops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "expint/matrix_function.hpp"

namespace expint {

Vector augmented_apply(AugmentedSystem& sys, const Vector& w) {
  const Index n = sys.n();
  const Index p = sys.p();
  if (sys.A == nullptr || sys.A->dim() != n) {
    throw DimensionMismatch("augmented_apply: base operator does not match B");
  }
  if (w.size() != n + p) throw DimensionMismatch("augmented_apply: expected length n + p");
  Vector out(n + p);
  Vector top(n);
  sys.A->apply(w.head(n), top);
  out.head(n) = sys.scale * top;
  if (p > 0) {
    out.head(n).noalias() += sys.B * w.tail(p);
    out.segment(n, p - 1) = w.segment(n + 1, p - 1);
    out[n + p - 1] = 0.0;
  }
  return out;
}

namespace {

/// Incremental IOP-Arnoldi over a preallocated basis.
class IopArnoldi {
 public:
  IopArnoldi(Index dim, int m_max, int iop_len, double breakdown_tol)
      : V(dim, m_max + 1), H(Matrix::Zero(m_max + 1, m_max + 1)), iop_len_(iop_len),
        breakdown_tol_(breakdown_tol) {}

  /// Sets the (unnormalized) start vector and clears the factorization.
  double restart(const Vector& start) {
    H.setZero();
    j = 0;
    happy = false;
    const double beta = start.norm();
    V.col(0) = start / beta;
    return beta;
  }

  /// Grows the basis until it has @p m columns or breaks down.
  template <typename Op>
  void extend(Op&& op, int m) {
    Vector w(V.rows());
    while (j < m && !happy) {
      op(V.col(j), w);
      for (int i = std::max(0, j - iop_len_ + 1); i <= j; ++i) {
        const double hij = V.col(i).dot(w);
        H(i, j) = hij;
        w.noalias() -= hij * V.col(i);
      }
      const double nrm = w.norm();
      if (!std::isfinite(nrm)) throw NumericalError("arnoldi: non-finite Krylov vector");
      const double h_scale = H.topLeftCorner(j + 1, j + 1).norm();
      if (nrm <= breakdown_tol_ * std::max(h_scale, std::numeric_limits<double>::min())) {
        happy = true;
        ++j;
        return;
      }
      H(j + 1, j) = nrm;
      V.col(j + 1) = w / nrm;
      ++j;
    }
  }

  Matrix V;
  Matrix H;
  int j = 0;
  bool happy = false;

 private:
  int iop_len_;
  double breakdown_tol_;
};

}  // namespace

KrylovState arnoldi_iop(MatrixFreeOperator& op, const Vector& start, int m, int iop_len) {
  if (m < 1) throw std::invalid_argument("arnoldi_iop: dimension must be >= 1");
  if (iop_len < 1) throw std::invalid_argument("arnoldi_iop: window must be >= 1");
  if (start.size() != op.dim()) throw DimensionMismatch("arnoldi_iop: start vector length");
  if (start.norm() == 0.0) throw DegenerateDirection("arnoldi_iop: zero start vector");

  IopArnoldi arnoldi(op.dim(), m, iop_len, 1e-14);
  KrylovState state;
  state.iop_len = iop_len;
  state.beta = arnoldi.restart(start);
  Vector tmp(op.dim());
  arnoldi.extend(
      [&](const auto& in, Vector& out) {
        tmp = in;
        op.apply(tmp, out);
      },
      m);
  state.m = arnoldi.j;
  state.happy_breakdown = arnoldi.happy;
  state.V = arnoldi.V.leftCols(state.m + (arnoldi.happy ? 0 : 1));
  state.H = arnoldi.H.topLeftCorner(state.m + 1, state.m);
  return state;
}

KiopsResult kiops_eval(MatrixFreeOperator& A, std::span<const Vector> v, double dt, double tol,
                       std::span<const double> taus, const KiopsOptions& opts) {
  if (v.empty()) throw std::invalid_argument("kiops_eval: need at least v_0");
  if (v.size() > 5) throw std::invalid_argument("kiops_eval: at most phi_4 supported");
  if (!(tol > 0.0)) throw std::invalid_argument("kiops_eval: tolerance must be positive");
  if (taus.empty()) throw std::invalid_argument("kiops_eval: no output times");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0.0 && taus[k] <= 1.0) || (k > 0 && taus[k] <= taus[k - 1])) {
      throw std::invalid_argument("kiops_eval: output times must be ascending in (0, 1]");
    }
  }
  const Index n = A.dim();
  for (const Vector& vj : v) {
    if (vj.size() != n) throw DimensionMismatch("kiops_eval: vector length mismatch");
  }

  KiopsResult result;
  result.outputs.assign(taus.size(), Vector());
  if (dt == 0.0) {
    for (auto& out : result.outputs) out = v[0];
    return result;
  }

  // With p = 0 a zero phi_1 column keeps the augmented form uniform.
  const int p = std::max<int>(1, static_cast<int>(v.size()) - 1);
  auto vec_at = [&](int j) -> Vector {
    return j < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(j)] : Vector::Zero(n);
  };

  // Power-of-two normalization of the b_j columns against the e_p block.
  double norm_u = 0.0;
  {
    Vector colsum = Vector::Zero(n);
    for (int j = 1; j <= p; ++j) colsum += vec_at(j).cwiseAbs();
    norm_u = colsum.size() > 0 ? colsum.maxCoeff() : 0.0;
  }
  double nu = 1.0;
  double mu = 1.0;
  if (v.size() > 1 && norm_u > 0.0) {
    const int ex = static_cast<int>(std::ceil(std::log2(norm_u)));
    nu = std::ldexp(1.0, -ex);
    mu = std::ldexp(1.0, ex);
  }

  AugmentedSystem sys;
  sys.A = &A;
  sys.scale = dt;
  sys.B.resize(n, p);
  for (int col = 0; col < p; ++col) sys.B.col(col) = nu * vec_at(p - col);

  const Index dim = n + p;
  const int m_max = opts.m_max;
  const int m_min = opts.m_min;
  IopArnoldi arnoldi(dim, m_max, opts.iop_len, opts.breakdown_tol);
  const std::int64_t applications_before = A.applications();

  const double tau_end = taus.back();
  const double gamma = 0.9;
  const double gamma_mmax = 0.6;
  const double delta = 1.4;

  double tau_now = 0.0;
  double tau = tau_end;
  int m = std::clamp(opts.m_init, m_min, m_max);
  int oldm = -1;
  double oldtau = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  double order = 1.0;
  double kest = 2.0;
  bool orderold = true;
  bool kestold = true;
  int ireject = 0;
  double beta = 0.0;
  std::size_t next_out = 0;

  Vector w = v[0];
  Vector tmp(dim);
  auto op = [&](const auto& in, Vector& out) {
    tmp = in;
    out = augmented_apply(sys, tmp);
  };

  bool fresh = true;
  while (tau_now < tau_end) {
    if (fresh) {
      Vector start(dim);
      start.head(n) = w;
      for (int k = 1; k <= p - 1; ++k) {
        const int i = p - k;
        start[n + k - 1] = std::pow(tau_now, i) / std::tgamma(i + 1.0) * mu;
      }
      start[n + p - 1] = mu;
      beta = arnoldi.restart(start);
      fresh = false;
    }

    arnoldi.extend(op, m);
    const int j = arnoldi.j;
    const bool happy = arnoldi.happy;

    // Column j carries the phi_1 entry used by the error estimate.
    Matrix Hs = arnoldi.H.topLeftCorner(j + 1, j + 1);
    Hs(0, j) = 1.0;
    const double h_next = happy ? 0.0 : arnoldi.H(j, j - 1);
    Hs(j, j - 1) = 0.0;
    const Matrix F = dense_expm(tau * Hs);

    double tau_new = tau;
    int m_new = m;
    double err = 0.0;
    if (happy) {
      omega = 0.0;
      m_new = m;
      tau_new = std::min(tau_end - (tau_now + tau), tau);
    } else {
      err = std::abs(beta * h_next * F(j - 1, j));
      const double oldomega = omega;
      omega = tau_end * err / (tau * tol);

      if (m == oldm && tau != oldtau && ireject >= 1 && omega > 0.0 && oldomega > 0.0) {
        order = std::max(1.0, std::log(omega / oldomega) / std::log(tau / oldtau));
        orderold = false;
      } else if (orderold || ireject == 0) {
        orderold = true;
        order = j / 4.0;
      } else {
        orderold = true;
      }
      if (m != oldm && tau == oldtau && ireject >= 1 && omega > 0.0 && oldomega > 0.0) {
        kest = std::max(1.1, std::pow(omega / oldomega, 1.0 / (oldm - m)));
        kestold = false;
      } else if (kestold || ireject == 0) {
        kestold = true;
        kest = 2.0;
      } else {
        kestold = true;
      }

      const double remaining = omega > delta ? tau_end - tau_now : tau_end - (tau_now + tau);
      const double same_tau = std::min(remaining, tau);
      double tau_opt = omega > 0.0 ? tau * std::pow(gamma / omega, 1.0 / order) : 5.0 * tau;
      tau_opt = std::min(remaining, std::max(tau / 5.0, std::min(5.0 * tau, tau_opt)));

      int m_opt = m_max;
      if (omega > 0.0) {
        const double raw = std::ceil(j + std::log(omega / gamma) / std::log(kest));
        m_opt = static_cast<int>(std::clamp(raw, -1e9, 1e9));
      } else {
        m_opt = m_min;
      }
      m_opt = std::max(static_cast<int>(std::floor(0.75 * m)),
                       std::min(m_opt, static_cast<int>(std::ceil(4.0 / 3.0 * m))));
      m_opt = std::max(m_min, std::min(m_max, m_opt));

      if (j == m_max) {
        if (omega > delta) {
          m_new = j;
          tau_new = tau * std::pow(gamma_mmax / omega, 1.0 / order);
          tau_new = std::min(tau_end - tau_now, std::max(tau / 5.0, tau_new));
        } else {
          tau_new = tau_opt;
          m_new = m;
        }
      } else {
        m_new = m_opt;
        tau_new = same_tau;
      }
    }

    if (omega <= delta) {
      const double next_t = tau_now + tau;
      const Matrix Vtop = arnoldi.V.topLeftCorner(n, j);
      // Outputs strictly inside this substep come from the same basis.
      while (next_out < taus.size() && taus[next_out] < next_t &&
             taus[next_out] < tau_end) {
        const double phantom = taus[next_out] - tau_now;
        const Matrix F2 = dense_expm(phantom * arnoldi.H.topLeftCorner(j, j));
        result.outputs[next_out] = beta * (Vtop * F2.col(0));
        ++next_out;
      }
      w = beta * (Vtop * F.col(0).head(j));
      result.stats.substep_lengths.push_back(tau * dt);
      result.stats.substep_errors.push_back(err);
      ++result.stats.substeps;
      tau_now = next_t;
      if (tau_end - tau_now <= 1e-14 * tau_end) tau_now = tau_end;
      while (next_out < taus.size() && taus[next_out] <= tau_now) {
        result.outputs[next_out] = w;
        ++next_out;
      }
      fresh = true;
      ireject = 0;
    } else {
      ++ireject;
      ++result.stats.rejections;
    }

    oldtau = tau;
    tau = tau_new;
    oldm = m;
    m = m_new;
    if (tau_now < tau_end && tau < opts.tau_min) {
      throw NonConvergence("kiops_eval: substep fell below tau_min", result.stats.substeps);
    }
  }
  for (auto& out : result.outputs) {
    if (out.size() != n) out = w;
    if (!out.allFinite()) throw NumericalError("kiops_eval: non-finite result");
  }
  result.stats.matvecs = static_cast<int>(A.applications() - applications_before);
  return result;
}

Vector kiops_eval(MatrixFreeOperator& A, std::span<const Vector> v, double dt, double tol,
                  KiopsStats* stats, const KiopsOptions& opts) {
  const double one = 1.0;
  KiopsResult r = kiops_eval(A, v, dt, tol, std::span<const double>(&one, 1), opts);
  if (stats != nullptr) *stats = std::move(r.stats);
  return std::move(r.outputs.front());
}

}  // namespace expint
