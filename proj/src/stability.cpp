#include "randlr/stability.hpp"

#include <algorithm>
#include <cmath>

namespace randlr::stability {

const char* path_name(CorePath p) {
  switch (p) {
    case CorePath::PlainQr: return "PlainQR";
    case CorePath::SvdTruncate: return "SVDTruncate";
    case CorePath::RrqrTruncate: return "RRQRTruncate";
    case CorePath::DiagPerturb: return "DiagPerturb";
  }
  return "?";
}

CorePath path_from_name(const std::string& s) {
  if (s == "PlainQR") return CorePath::PlainQr;
  if (s == "SVDTruncate") return CorePath::SvdTruncate;
  if (s == "RRQRTruncate") return CorePath::RrqrTruncate;
  if (s == "DiagPerturb") return CorePath::DiagPerturb;
  throw DimensionError("unknown core path: " + s);
}

DenseMatrix CoreFactor::project(const DenseMatrix& t) const {
  return kernels::matmul(q1, t, /*transpose_a=*/true);
}

namespace {

// out = Pi * y, where column t of M*Pi is M(:, perm[t]); empty perm = identity.
DenseMatrix permute_rows_out(const std::vector<Index>& perm, const DenseMatrix& y) {
  if (perm.empty()) return y;
  DenseMatrix out(y.rows(), y.cols());
  for (Index t = 0; t < y.rows(); ++t)
    for (Index j = 0; j < y.cols(); ++j) out(perm[t], j) = y(t, j);
  return out;
}

// out = Z * Pi.
DenseMatrix permute_cols_in(const std::vector<Index>& perm, const DenseMatrix& z) {
  if (perm.empty()) return z;
  DenseMatrix out(z.rows(), static_cast<Index>(perm.size()));
  for (std::size_t t = 0; t < perm.size(); ++t) {
    const double* src = z.col(perm[t]);
    double* dst = out.col(static_cast<Index>(t));
    for (Index i = 0; i < z.rows(); ++i) dst[i] = src[i];
  }
  return out;
}

}  // namespace

DenseMatrix CoreFactor::left_factor_times(const DenseMatrix& z) const {
  switch (path) {
    case CorePath::PlainQr:
    case CorePath::DiagPerturb:
      return permute_rows_out(perm, kernels::tri_solve_left(r_upper, z));
    case CorePath::SvdTruncate:
      return kernels::matmul(v_sigma_inv, z);
    case CorePath::RrqrTruncate: {
      DenseMatrix w = kernels::tri_solve_left_transposed(r2, z);
      return permute_rows_out(perm, kernels::matmul(q2, w));
    }
  }
  throw NumericalError("left_factor_times: unreachable");
}

DenseMatrix CoreFactor::times_left_factor(const DenseMatrix& z) const {
  if (z.cols() != cols) throw DimensionError("times_left_factor: dimension mismatch");
  switch (path) {
    case CorePath::PlainQr:
    case CorePath::DiagPerturb:
      return kernels::tri_solve_right(permute_cols_in(perm, z), r_upper);
    case CorePath::SvdTruncate:
      return kernels::matmul(z, v_sigma_inv);
    case CorePath::RrqrTruncate: {
      DenseMatrix w = kernels::matmul(permute_cols_in(perm, z), q2);
      return kernels::tri_solve_right_transposed(w, r2);
    }
  }
  throw NumericalError("times_left_factor: unreachable");
}

DenseMatrix CoreFactor::pinv_times(const DenseMatrix& t) const {
  return left_factor_times(project(t));
}

DenseMatrix CoreFactor::materialize_pinv() const {
  return pinv_times(DenseMatrix::identity(rows));
}

CoreFactor build_core_plain(const DenseMatrix& m) {
  if (m.rows() < m.cols()) throw DimensionError("build_core_plain: rows < cols");
  kernels::QRFactors qr = kernels::thin_qr(m);
  for (Index i = 0; i < qr.r.rows(); ++i)
    if (qr.r(i, i) == 0.0)
      throw NumericalError("build_core_plain: exact zero diagonal in R; use the stabilized path");
  CoreFactor core;
  core.path = CorePath::PlainQr;
  core.rows = m.rows();
  core.cols = m.cols();
  core.rank = m.cols();
  core.q1 = std::move(qr.q);
  core.r_upper = std::move(qr.r);
  return core;
}

namespace {

CoreFactor build_svd_truncate(const DenseMatrix& m, double epsilon) {
  kernels::SVDFactors f = kernels::svd(m);
  Index k = 0;
  while (k < static_cast<Index>(f.sigma.size()) && f.sigma[k] > epsilon) ++k;
  CoreFactor core;
  core.path = CorePath::SvdTruncate;
  core.rows = m.rows();
  core.cols = m.cols();
  core.rank = k;
  core.epsilon_used = epsilon;
  core.q1 = slice_cols(f.u, 0, k);
  core.v_sigma_inv = DenseMatrix(m.cols(), k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < m.cols(); ++i) core.v_sigma_inv(i, j) = f.v(i, j) / f.sigma[j];
  return core;
}

CoreFactor build_rrqr_truncate(const DenseMatrix& m, double epsilon) {
  kernels::PivotedQRFactors pqr = kernels::pivoted_qr(m);
  Index k = 0;
  while (k < m.cols() && std::abs(pqr.r(k, k)) >= epsilon) ++k;
  CoreFactor core;
  core.path = CorePath::RrqrTruncate;
  core.rows = m.rows();
  core.cols = m.cols();
  core.rank = k;
  core.epsilon_used = epsilon;
  core.q1 = slice_cols(pqr.q, 0, k);
  core.perm = std::move(pqr.perm);
  // R1 = leading k rows of R (k x cols, fat); factor R1^T = Q2 R2.
  DenseMatrix r1t(m.cols(), k);
  for (Index i = 0; i < k; ++i)
    for (Index j = i; j < m.cols(); ++j) r1t(j, i) = pqr.r(i, j);
  kernels::QRFactors qr2 = kernels::thin_qr(r1t);
  core.q2 = std::move(qr2.q);
  core.r2 = std::move(qr2.r);
  return core;
}

CoreFactor build_diag_perturb(const DenseMatrix& m, double epsilon) {
  // Column pivoting keeps the perturbed inverse bounded by O(1)/epsilon;
  // without it the off-diagonal coupling can exceed the contract.
  kernels::PivotedQRFactors qr = kernels::pivoted_qr(m);
  for (Index i = 0; i < qr.r.rows(); ++i) {
    const double d = qr.r(i, i);
    if (std::abs(d) < epsilon) qr.r(i, i) = (d < 0.0 ? -epsilon : epsilon);
  }
  CoreFactor core;
  core.path = CorePath::DiagPerturb;
  core.rows = m.rows();
  core.cols = m.cols();
  core.rank = m.cols();
  core.epsilon_used = epsilon;
  core.q1 = std::move(qr.q);
  core.r_upper = std::move(qr.r);
  core.perm = std::move(qr.perm);
  return core;
}

}  // namespace

CoreFactor build_core_truncated(const DenseMatrix& m, double epsilon, CorePath path) {
  if (m.rows() < m.cols()) throw DimensionError("build_core_truncated: rows < cols");
  if (!(epsilon > 0.0)) throw DimensionError("build_core_truncated: epsilon must be > 0");
  switch (path) {
    case CorePath::SvdTruncate: return build_svd_truncate(m, epsilon);
    case CorePath::RrqrTruncate: return build_rrqr_truncate(m, epsilon);
    case CorePath::DiagPerturb: return build_diag_perturb(m, epsilon);
    case CorePath::PlainQr: break;
  }
  throw DimensionError("build_core_truncated: path must be a truncating path");
}

InstabilityReport detect(const DenseMatrix& r, double threshold, int iters) {
  if (r.rows() != r.cols()) throw DimensionError("detect: R must be square");
  InstabilityReport rep;
  rep.threshold = threshold;
  kernels::NormEstimates est = kernels::estimate_norms(r, iters);
  rep.norm_r = est.norm_r;
  rep.norm_r_inv = est.norm_r_inv;
  rep.condition_estimate = est.norm_r * est.norm_r_inv;
  rep.flagged = rep.condition_estimate * kUnitRoundoff > threshold;
  if (std::isinf(est.norm_r_inv)) rep.flagged = true;
  return rep;
}

FallbackResult core_with_fallback(const DenseMatrix& m, const EpsilonPolicy& policy,
                                  double threshold) {
  if (m.rows() < m.cols()) throw DimensionError("core_with_fallback: rows < cols");
  kernels::QRFactors qr = kernels::thin_qr(m);
  FallbackResult out;
  out.report = detect(qr.r, threshold);
  bool zero_diag = false;
  for (Index i = 0; i < qr.r.rows(); ++i)
    if (qr.r(i, i) == 0.0) zero_diag = true;
  if (!out.report.flagged && !zero_diag) {
    out.core.path = CorePath::PlainQr;
    out.core.rows = m.rows();
    out.core.cols = m.cols();
    out.core.rank = m.cols();
    out.core.q1 = std::move(qr.q);
    out.core.r_upper = std::move(qr.r);
    return out;
  }
  // ||R||_2 = ||M||_2 up to roundoff, so the estimate doubles as the core
  // norm for the relative epsilon.
  const double eps = policy.resolve(out.report.norm_r);
  out.core = build_core_truncated(m, eps > 0.0 ? eps : policy.resolve(1.0), CorePath::RrqrTruncate);
  out.switched = true;
  return out;
}

}  // namespace randlr::stability
