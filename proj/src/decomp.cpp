#include "randlr/decomp.hpp"

#include <algorithm>
#include <cmath>

namespace randlr::decomp {

const char* method_name(Method m) {
  switch (m) {
    case Method::Hmt: return "hmt";
    case Method::Nystrom: return "nystrom";
    case Method::NystromHmt: return "nystrom-hmt";
    case Method::SubspaceIter: return "subspace";
    case Method::GnPlain: return "gn";
    case Method::GnStabilized: return "sgn";
  }
  return "?";
}

Method method_from_name(const std::string& s) {
  if (s == "hmt") return Method::Hmt;
  if (s == "nystrom") return Method::Nystrom;
  if (s == "nystrom-hmt") return Method::NystromHmt;
  if (s == "subspace") return Method::SubspaceIter;
  if (s == "gn") return Method::GnPlain;
  if (s == "sgn") return Method::GnStabilized;
  throw DimensionError("unknown method: " + s);
}

DenseMatrix MatrixHandle::times(const DenseMatrix& b) const {
  return dense_ ? kernels::matmul(*dense_, b) : kernels::matmul(*sparse_, b);
}

DenseMatrix MatrixHandle::transpose_times(const DenseMatrix& b) const {
  return dense_ ? kernels::matmul(*dense_, b, true) : kernels::matmul(*sparse_, b, true);
}

DenseMatrix MatrixHandle::sketch_right(const sketch::SketchOperator& op) const {
  return dense_ ? sketch::apply_right(*dense_, op) : sketch::apply_right(*sparse_, op);
}

DenseMatrix MatrixHandle::sketch_left(const sketch::SketchOperator& op) const {
  return dense_ ? sketch::apply_left(op, *dense_) : sketch::apply_left(op, *sparse_);
}

double MatrixHandle::frobenius() const {
  return dense_ ? frobenius_norm(*dense_) : frobenius_norm(*sparse_);
}

double MatrixHandle::symmetry_gap() const {
  if (rows() != cols()) throw DimensionError("symmetry_gap: matrix not square");
  if (dense_) {
    double s = 0.0;
    for (Index j = 0; j < cols(); ++j)
      for (Index i = 0; i < rows(); ++i) {
        const double d = (*dense_)(i, j) - (*dense_)(j, i);
        s += d * d;
      }
    return std::sqrt(s);
  }
  SparseMatrix t = sparse_->transposed();
  // both CSR with sorted columns: merge rows
  double s = 0.0;
  for (Index i = 0; i < rows(); ++i) {
    Index ka = sparse_->row_ptr()[i], ea = sparse_->row_ptr()[i + 1];
    Index kb = t.row_ptr()[i], eb = t.row_ptr()[i + 1];
    while (ka < ea || kb < eb) {
      const Index ja = ka < ea ? sparse_->col_idx()[ka] : cols();
      const Index jb = kb < eb ? t.col_idx()[kb] : cols();
      double d = 0.0;
      if (ja == jb) {
        d = sparse_->values()[ka++] - t.values()[kb++];
      } else if (ja < jb) {
        d = sparse_->values()[ka++];
      } else {
        d = -t.values()[kb++];
      }
      s += d * d;
    }
  }
  return std::sqrt(s);
}

DenseMatrix MatrixHandle::to_dense() const { return dense_ ? *dense_ : sparse_->to_dense(); }

Index Approximant::memory_entries() const {
  if (is_gn()) {
    const GnForm& g = gn();
    return g.f.size() + g.g.size() + g.core.memory_entries();
  }
  const RangeForm& rf = range();
  return rf.q.size() + rf.u0.size() + static_cast<Index>(rf.sigma0.size()) + rf.v0t.size();
}

namespace {

void check_rank(const MatrixHandle& a, Index r, Index ell) {
  if (r < 1) throw DimensionError("rank must be >= 1");
  if (r + ell > std::min(a.rows(), a.cols()))
    throw DimensionError("r + oversampling exceeds min(m, n)");
}

sketch::SketchOperator make_op(SketchKind kind, Index ambient, Index dim, std::uint64_t seed,
                               std::uint64_t stream) {
  return sketch::generate({kind, ambient, dim, seed, stream});
}

// Q^T A without forming A^T: (A^T Q)^T.
DenseMatrix left_project(const MatrixHandle& a, const DenseMatrix& q) {
  if (a.is_dense()) return kernels::matmul(q, a.dense(), /*transpose_a=*/true);
  return transpose(a.transpose_times(q));
}

}  // namespace

Approximant hmt(const MatrixHandle& a, Index r, int power, std::uint64_t seed, SketchKind kind) {
  check_rank(a, r, 0);
  if (power < 0) throw DimensionError("hmt: power must be >= 0");
  sketch::SketchOperator omega = make_op(kind, a.cols(), r, seed, 0);
  DenseMatrix q = kernels::thin_qr(a.sketch_right(omega)).q;
  for (int p = 0; p < power; ++p) {
    DenseMatrix w = kernels::thin_qr(a.transpose_times(q)).q;
    q = kernels::thin_qr(a.times(w)).q;
  }
  DenseMatrix b = left_project(a, q);  // r x n
  kernels::SVDFactors f = kernels::svd(b);

  Approximant out;
  out.method = power == 0 ? Method::Hmt : Method::SubspaceIter;
  out.m = a.rows();
  out.n = a.cols();
  out.r = r;
  out.ell = 0;
  out.seed = seed;
  out.kind = kind;
  RangeForm rf;
  rf.q = std::move(q);
  rf.u0 = std::move(f.u);
  rf.sigma0 = std::move(f.sigma);
  rf.v0t = transpose(f.v);
  out.form = std::move(rf);
  return out;
}

namespace {

Approximant nystrom_common(const MatrixHandle& a, Index r, std::uint64_t seed, SketchKind kind,
                           const EpsilonPolicy& policy, bool orthogonalized) {
  if (a.rows() != a.cols()) throw DimensionError("nystrom: input must be square");
  check_rank(a, r, 0);
  const double gap = a.symmetry_gap();
  if (gap > 1e-8 * a.frobenius())
    throw DimensionError("nystrom: input is not symmetric (gap " + std::to_string(gap) + ")");

  sketch::SketchOperator omega = make_op(kind, a.cols(), r, seed, 0);
  DenseMatrix f;         // A x
  DenseMatrix core_raw;  // X^T A X, r x r
  if (!orthogonalized) {
    f = a.sketch_right(omega);
    core_raw = sketch::apply_left(omega, f);
  } else {
    DenseMatrix x = kernels::thin_qr(a.sketch_right(omega)).q;
    f = a.times(x);
    core_raw = kernels::matmul(x, f, /*transpose_a=*/true);
  }

  Approximant out;
  out.method = orthogonalized ? Method::NystromHmt : Method::Nystrom;
  out.m = a.rows();
  out.n = a.cols();
  out.r = r;
  out.ell = 0;
  out.seed = seed;
  out.kind = kind;
  double mindiag = 0.0, maxdiag = 0.0;
  for (Index i = 0; i < r; ++i) {
    mindiag = std::min(mindiag, core_raw(i, i));
    maxdiag = std::max(maxdiag, std::abs(core_raw(i, i)));
  }
  out.psd_warning = mindiag < -1e-10 * std::max(maxdiag, 1e-300);

  stability::FallbackResult fb = stability::core_with_fallback(core_raw, policy);
  out.instability = fb.report;
  GnForm gf;
  gf.g = transpose(f);  // (AX)^T per the defining formula
  gf.f = std::move(f);
  gf.core = std::move(fb.core);
  out.form = std::move(gf);
  return out;
}

struct GnParts {
  DenseMatrix f, g, core_raw;
};

GnParts gn_sketches(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                    SketchKind kind) {
  sketch::SketchOperator x = make_op(kind, a.cols(), r, seed, 0);
  sketch::SketchOperator y = make_op(kind, a.rows(), r + ell, seed, 1);
  GnParts p;
  p.f = a.sketch_right(x);
  p.g = a.sketch_left(y);
  // (Y^T A) X reuses the fast right-apply path of X.
  p.core_raw = sketch::apply_right(p.g, x);
  return p;
}

Approximant gn_assemble(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                        SketchKind kind, GnParts parts, CoreFactor core,
                        std::optional<InstabilityReport> rep, Method method) {
  Approximant out;
  out.method = method;
  out.m = a.rows();
  out.n = a.cols();
  out.r = r;
  out.ell = ell;
  out.seed = seed;
  out.kind = kind;
  out.instability = std::move(rep);
  GnForm gf;
  gf.f = std::move(parts.f);
  gf.g = std::move(parts.g);
  gf.core = std::move(core);
  out.form = std::move(gf);
  return out;
}

}  // namespace

Approximant nystrom_psd(const MatrixHandle& a, Index r, std::uint64_t seed, SketchKind kind,
                        const EpsilonPolicy& policy) {
  return nystrom_common(a, r, seed, kind, policy, false);
}

Approximant nystrom_hmt(const MatrixHandle& a, Index r, std::uint64_t seed, SketchKind kind,
                        const EpsilonPolicy& policy) {
  return nystrom_common(a, r, seed, kind, policy, true);
}

Approximant gn_plain(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                     SketchKind kind) {
  if (ell < 1) throw DimensionError("gn: oversampling must satisfy 0 < ell (ceil(r/2) suggested)");
  check_rank(a, r, ell);
  GnParts parts = gn_sketches(a, r, ell, seed, kind);
  kernels::QRFactors qr = kernels::thin_qr(parts.core_raw);
  InstabilityReport rep = stability::detect(qr.r);
  for (Index i = 0; i < qr.r.rows(); ++i)
    if (qr.r(i, i) == 0.0)
      throw NumericalError("gn_plain: exact zero diagonal in the core R; use gn_stabilized");
  CoreFactor core;
  core.path = CorePath::PlainQr;
  core.rows = parts.core_raw.rows();
  core.cols = parts.core_raw.cols();
  core.rank = core.cols;
  core.q1 = std::move(qr.q);
  core.r_upper = std::move(qr.r);
  return gn_assemble(a, r, ell, seed, kind, std::move(parts), std::move(core), rep,
                     Method::GnPlain);
}

Approximant gn_stabilized(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                          SketchKind kind, const EpsilonPolicy& policy, CorePath path) {
  if (ell < 1) throw DimensionError("sgn: oversampling must satisfy 0 < ell (ceil(r/2) suggested)");
  check_rank(a, r, ell);
  GnParts parts = gn_sketches(a, r, ell, seed, kind);
  double norm_est = kernels::estimate_spectral_norm(parts.core_raw, stability::kDetectIters);
  double eps = policy.resolve(norm_est);
  if (!(eps > 0.0)) eps = policy.resolve(1.0);
  if (!(eps > 0.0)) eps = 10.0 * kUnitRoundoff;
  CoreFactor core = stability::build_core_truncated(parts.core_raw, eps, path);
  // Detection report kept for the record; SGN never switches on it.
  std::optional<InstabilityReport> rep;
  {
    kernels::QRFactors qr = kernels::thin_qr(parts.core_raw);
    rep = stability::detect(qr.r);
  }
  return gn_assemble(a, r, ell, seed, kind, std::move(parts), std::move(core), rep,
                     Method::GnStabilized);
}

Approximant gn_with_fallback(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                             SketchKind kind, const EpsilonPolicy& policy) {
  if (ell < 1) throw DimensionError("gn: oversampling must satisfy 0 < ell (ceil(r/2) suggested)");
  check_rank(a, r, ell);
  GnParts parts = gn_sketches(a, r, ell, seed, kind);
  stability::FallbackResult fb = stability::core_with_fallback(parts.core_raw, policy);
  return gn_assemble(a, r, ell, seed, kind, std::move(parts), std::move(fb.core), fb.report,
                     fb.switched ? Method::GnStabilized : Method::GnPlain);
}

DenseMatrix apply(const Approximant& approx, const DenseMatrix& w, Side side) {
  if (approx.is_gn()) {
    const GnForm& g = approx.gn();
    if (side == Side::Right) {
      if (w.rows() != approx.n) throw DimensionError("apply: W.rows must equal n");
      // F * (Lp * (Q1^T * (G W))), in this order.
      DenseMatrix t = kernels::matmul(g.g, w);
      return kernels::matmul(g.f, g.core.pinv_times(t));
    }
    if (w.cols() != approx.m) throw DimensionError("apply: W.cols must equal m");
    DenseMatrix t = g.core.times_left_factor(kernels::matmul(w, g.f));  // (W F) Lp
    DenseMatrix tq = transpose(kernels::matmul(g.core.q1, transpose(t)));  // t * Q1^T
    return kernels::matmul(tq, g.g);
  }
  const RangeForm& rf = approx.range();
  if (side == Side::Right) {
    if (w.rows() != approx.n) throw DimensionError("apply: W.rows must equal n");
    DenseMatrix t = kernels::matmul(rf.v0t, w);
    for (Index j = 0; j < t.cols(); ++j)
      for (Index i = 0; i < t.rows(); ++i) t(i, j) *= rf.sigma0[i];
    return kernels::matmul(rf.q, kernels::matmul(rf.u0, t));
  }
  if (w.cols() != approx.m) throw DimensionError("apply: W.cols must equal m");
  DenseMatrix t = kernels::matmul(kernels::matmul(w, rf.q), rf.u0);
  for (Index j = 0; j < t.cols(); ++j)
    for (Index i = 0; i < t.rows(); ++i) t(i, j) *= rf.sigma0[j];
  return kernels::matmul(t, rf.v0t);
}

DenseMatrix materialize(const Approximant& approx, Index entry_cap) {
  if (approx.m * approx.n > entry_cap)
    throw DimensionError("materialize: m*n exceeds the entry cap");
  if (approx.is_gn()) {
    const GnForm& g = approx.gn();
    // (F Lp) (Q1^T G): the stable order.
    return kernels::matmul(g.core.times_left_factor(g.f), g.core.project(g.g));
  }
  const RangeForm& rf = approx.range();
  DenseMatrix qs = kernels::matmul(rf.q, rf.u0);
  for (Index j = 0; j < qs.cols(); ++j)
    for (Index i = 0; i < qs.rows(); ++i) qs(i, j) *= rf.sigma0[j];
  return kernels::matmul(qs, rf.v0t);
}

}  // namespace randlr::decomp
