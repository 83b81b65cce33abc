#include "randlr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "randlr/rng.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace randlr::kernels {

namespace {

constexpr Index kColBlock = 16;  // fixed block size: results are reproducible run-to-run

void check_matmul_dims(Index a_rows, Index a_cols, Index b_rows, bool transpose_a) {
  const Index inner = transpose_a ? a_rows : a_cols;
  if (inner != b_rows) throw DimensionError("matmul: inner dimensions disagree");
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a) {
  check_matmul_dims(a.rows(), a.cols(), b.rows(), transpose_a);
  const Index m = transpose_a ? a.cols() : a.rows();
  const Index p = b.rows();
  const Index q = b.cols();
  DenseMatrix c(m, q);
  if (m == 0 || q == 0) return c;

  if (!transpose_a) {
    // c[:,j] accumulated by axpy over A's columns in fixed k order.
#pragma omp parallel for schedule(static)
    for (Index jb = 0; jb < (q + kColBlock - 1) / kColBlock; ++jb) {
      const Index j0 = jb * kColBlock, j1 = std::min(q, j0 + kColBlock);
      for (Index j = j0; j < j1; ++j) {
        double* cj = c.col(j);
        const double* bj = b.col(j);
        for (Index k = 0; k < p; ++k) {
          const double s = bj[k];
          if (s == 0.0) continue;
          const double* ak = a.col(k);
          for (Index i = 0; i < m; ++i) cj[i] += s * ak[i];
        }
      }
    }
  } else {
    // c(i,j) = dot(a[:,i], b[:,j]); contiguous column dots.
#pragma omp parallel for schedule(static)
    for (Index jb = 0; jb < (q + kColBlock - 1) / kColBlock; ++jb) {
      const Index j0 = jb * kColBlock, j1 = std::min(q, j0 + kColBlock);
      const Index len = a.rows();
      for (Index i = 0; i < m; ++i) {
        const double* ai = a.col(i);
        for (Index j = j0; j < j1; ++j) {
          const double* bj = b.col(j);
          double s = 0.0;
          for (Index k = 0; k < len; ++k) s += ai[k] * bj[k];
          c(i, j) = s;
        }
      }
    }
  }
  return c;
}

DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b, bool transpose_a) {
  check_matmul_dims(a.rows(), a.cols(), b.rows(), transpose_a);
  const Index m = transpose_a ? a.cols() : a.rows();
  const Index q = b.cols();
  DenseMatrix c(m, q);
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& vals = a.values();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < q; ++j) {
    double* cj = c.col(j);
    const double* bj = b.col(j);
    if (!transpose_a) {
      for (Index i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (Index k = rp[i]; k < rp[i + 1]; ++k) s += vals[k] * bj[ci[k]];
        cj[i] = s;
      }
    } else {
      for (Index i = 0; i < a.rows(); ++i) {
        const double bij = bj[i];
        if (bij == 0.0) continue;
        for (Index k = rp[i]; k < rp[i + 1]; ++k) cj[ci[k]] += vals[k] * bij;
      }
    }
  }
  return c;
}

namespace reference {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a) {
  check_matmul_dims(a.rows(), a.cols(), b.rows(), transpose_a);
  const Index m = transpose_a ? a.cols() : a.rows();
  const Index p = b.rows();
  DenseMatrix c(m, b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < m; ++i) {
      double s = 0.0;
      for (Index k = 0; k < p; ++k) s += (transpose_a ? a(k, i) : a(i, k)) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace reference

namespace {

// Householder vector for x: returns beta and overwrites x with v (v[0] = 1
// implied). After reflection, x maps to (alpha, 0, ..., 0).
double make_householder(double* x, Index len, double& alpha) {
  double sigma = 0.0;
  for (Index i = 1; i < len; ++i) sigma += x[i] * x[i];
  if (sigma == 0.0) {
    alpha = x[0];
    return 0.0;  // already zero below; no reflection
  }
  const double mu = std::sqrt(x[0] * x[0] + sigma);
  // alpha = -sign(x0)*mu so v0 = x0 - alpha is free of cancellation.
  double v0;
  if (x[0] <= 0.0) {
    v0 = x[0] - mu;
    alpha = mu;
  } else {
    v0 = x[0] + mu;
    alpha = -mu;
  }
  const double beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
  for (Index i = 1; i < len; ++i) x[i] /= v0;
  x[0] = 1.0;
  return beta;
}

}  // namespace

QRFactors thin_qr(const DenseMatrix& m_in) {
  const Index m = m_in.rows(), k = m_in.cols();
  if (m < k) throw DimensionError("thin_qr: rows < cols");
  DenseMatrix work = m_in;
  std::vector<double> betas(k, 0.0);
  for (Index j = 0; j < k; ++j) {
    double alpha;
    betas[j] = make_householder(work.col(j) + j, m - j, alpha);
    // Apply to trailing columns; the v vector sits in work(j:, j).
    if (betas[j] != 0.0) {
      for (Index c = j + 1; c < k; ++c) {
        double* col = work.col(c);
        const double* v = work.col(j);
        double s = col[j];
        for (Index i = j + 1; i < m; ++i) s += v[i] * col[i];
        s *= betas[j];
        col[j] -= s;
        for (Index i = j + 1; i < m; ++i) col[i] -= s * v[i];
      }
    }
    work(j, j) = alpha;  // diag of R; v[0]=1 is implicit
  }

  QRFactors out;
  out.r = DenseMatrix(k, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i <= j && i < k; ++i) out.r(i, j) = work(i, j);

  // Backward accumulation of the thin Q.
  DenseMatrix q(m, k);
  for (Index j = 0; j < k; ++j) q(j, j) = 1.0;
  for (Index j = k - 1; j >= 0; --j) {
    if (betas[j] == 0.0) continue;
    const double* v = work.col(j);
    for (Index c = j; c < k; ++c) {
      double* col = q.col(c);
      double s = col[j];
      for (Index i = j + 1; i < m; ++i) s += v[i] * col[i];
      s *= betas[j];
      col[j] -= s;
      for (Index i = j + 1; i < m; ++i) col[i] -= s * v[i];
    }
  }
  out.q = std::move(q);
  return out;
}

PivotedQRFactors pivoted_qr(const DenseMatrix& m_in) {
  const Index m = m_in.rows(), k = m_in.cols();
  if (m < k) throw DimensionError("pivoted_qr: rows < cols");
  DenseMatrix work = m_in;
  std::vector<double> betas(k, 0.0);
  std::vector<Index> perm(k);
  for (Index j = 0; j < k; ++j) perm[j] = j;

  std::vector<double> colnorm2(k);
  auto recompute_norm = [&](Index c, Index from) {
    double s = 0.0;
    const double* col = work.col(c);
    for (Index i = from; i < m; ++i) s += col[i] * col[i];
    return s;
  };
  for (Index c = 0; c < k; ++c) colnorm2[c] = recompute_norm(c, 0);
  std::vector<double> colnorm2_ref = colnorm2;

  for (Index j = 0; j < k; ++j) {
    Index piv = j;
    for (Index c = j + 1; c < k; ++c)
      if (colnorm2[c] > colnorm2[piv]) piv = c;
    if (piv != j) {
      for (Index i = 0; i < m; ++i) std::swap(work(i, j), work(i, piv));
      std::swap(colnorm2[j], colnorm2[piv]);
      std::swap(colnorm2_ref[j], colnorm2_ref[piv]);
      std::swap(perm[j], perm[piv]);
    }
    double alpha;
    betas[j] = make_householder(work.col(j) + j, m - j, alpha);
    if (betas[j] != 0.0) {
      for (Index c = j + 1; c < k; ++c) {
        double* col = work.col(c);
        const double* v = work.col(j);
        double s = col[j];
        for (Index i = j + 1; i < m; ++i) s += v[i] * col[i];
        s *= betas[j];
        col[j] -= s;
        for (Index i = j + 1; i < m; ++i) col[i] -= s * v[i];
      }
    }
    work(j, j) = alpha;
    // Downdate trailing column norms; recompute on severe cancellation.
    for (Index c = j + 1; c < k; ++c) {
      colnorm2[c] -= work(j, c) * work(j, c);
      if (colnorm2[c] < 1e-8 * colnorm2_ref[c] || colnorm2[c] < 0.0) {
        colnorm2[c] = recompute_norm(c, j + 1);
        colnorm2_ref[c] = colnorm2[c];
      }
    }
  }

  PivotedQRFactors out;
  out.perm = std::move(perm);
  out.r = DenseMatrix(k, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i <= j && i < k; ++i) out.r(i, j) = work(i, j);
  DenseMatrix q(m, k);
  for (Index j = 0; j < k; ++j) q(j, j) = 1.0;
  for (Index j = k - 1; j >= 0; --j) {
    if (betas[j] == 0.0) continue;
    const double* v = work.col(j);
    for (Index c = j; c < k; ++c) {
      double* col = q.col(c);
      double s = col[j];
      for (Index i = j + 1; i < m; ++i) s += v[i] * col[i];
      s *= betas[j];
      col[j] -= s;
      for (Index i = j + 1; i < m; ++i) col[i] -= s * v[i];
    }
  }
  out.q = std::move(q);
  return out;
}

namespace {

void check_square_upper(const DenseMatrix& r) {
  if (r.rows() != r.cols()) throw DimensionError("triangular solve: R must be square");
}

void check_nonzero_diag(const DenseMatrix& r) {
  for (Index i = 0; i < r.rows(); ++i)
    if (r(i, i) == 0.0) throw NumericalError("triangular solve: exact zero diagonal");
}

}  // namespace

DenseMatrix tri_solve_right(const DenseMatrix& b, const DenseMatrix& r) {
  check_square_upper(r);
  if (b.cols() != r.rows()) throw DimensionError("tri_solve_right: dimension mismatch");
  check_nonzero_diag(r);
  const Index m = b.rows(), k = r.rows();
  DenseMatrix x = b;
  for (Index j = 0; j < k; ++j) {
    double* xj = x.col(j);
    for (Index i = 0; i < j; ++i) {
      const double rij = r(i, j);
      if (rij == 0.0) continue;
      const double* xi = x.col(i);
      for (Index t = 0; t < m; ++t) xj[t] -= xi[t] * rij;
    }
    const double d = r(j, j);
    for (Index t = 0; t < m; ++t) xj[t] /= d;
  }
  return x;
}

DenseMatrix tri_solve_left(const DenseMatrix& r, const DenseMatrix& b) {
  check_square_upper(r);
  if (r.cols() != b.rows()) throw DimensionError("tri_solve_left: dimension mismatch");
  check_nonzero_diag(r);
  const Index k = r.rows();
  DenseMatrix x = b;
  for (Index j = 0; j < b.cols(); ++j) {
    double* xj = x.col(j);
    for (Index i = k - 1; i >= 0; --i) {
      double s = xj[i];
      for (Index t = i + 1; t < k; ++t) s -= r(i, t) * xj[t];
      xj[i] = s / r(i, i);
    }
  }
  return x;
}

DenseMatrix tri_solve_left_transposed(const DenseMatrix& r, const DenseMatrix& b) {
  check_square_upper(r);
  if (r.rows() != b.rows()) throw DimensionError("tri_solve_left_transposed: dimension mismatch");
  check_nonzero_diag(r);
  const Index k = r.rows();
  DenseMatrix x = b;
  for (Index j = 0; j < b.cols(); ++j) {
    double* xj = x.col(j);
    for (Index i = 0; i < k; ++i) {
      double s = xj[i];
      for (Index t = 0; t < i; ++t) s -= r(t, i) * xj[t];
      xj[i] = s / r(i, i);
    }
  }
  return x;
}

DenseMatrix tri_solve_right_transposed(const DenseMatrix& b, const DenseMatrix& r) {
  check_square_upper(r);
  if (b.cols() != r.rows()) throw DimensionError("tri_solve_right_transposed: dimension mismatch");
  check_nonzero_diag(r);
  const Index m = b.rows(), k = r.rows();
  DenseMatrix x = b;
  for (Index j = k - 1; j >= 0; --j) {
    double* xj = x.col(j);
    for (Index t = j + 1; t < k; ++t) {
      const double rjt = r(j, t);
      if (rjt == 0.0) continue;
      const double* xt = x.col(t);
      for (Index i = 0; i < m; ++i) xj[i] -= xt[i] * rjt;
    }
    const double d = r(j, j);
    for (Index i = 0; i < m; ++i) xj[i] /= d;
  }
  return x;
}

namespace {

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Deterministic unit start vector.
std::vector<double> start_vector(Index n) {
  rng::Counter gen(0xb0075742u, 0);
  std::vector<double> z(n);
  for (Index i = 0; i < n; ++i) z[i] = gen.gaussian_at(static_cast<std::uint64_t>(i));
  const double s = vec_norm(z);
  for (double& x : z) x /= s;
  return z;
}

}  // namespace

NormEstimates estimate_norms(const DenseMatrix& r, int iters) {
  check_square_upper(r);
  if (iters < 2) throw DimensionError("estimate_norms: iters must be >= 2");
  const Index n = r.rows();
  NormEstimates out{0.0, 0.0};
  if (n == 0) return out;

  // ||R||_2 via power iteration on R^T R; the Rayleigh-style estimate
  // ||R z|| / ||z|| never exceeds sigma_max.
  std::vector<double> z = start_vector(n), w(n), z2(n);
  for (int it = 0; it < iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index j = i; j < n; ++j) s += r(i, j) * z[j];
      w[i] = s;
    }
    out.norm_r = std::max(out.norm_r, vec_norm(w) / vec_norm(z));
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index i = 0; i <= j; ++i) s += r(i, j) * w[i];
      z2[j] = s;
    }
    const double nz = vec_norm(z2);
    if (nz == 0.0) break;
    for (Index i = 0; i < n; ++i) z[i] = z2[i] / nz;
  }

  // ||R^-1||_2 via power iteration on (R^T R)^-1; two triangular solves per
  // step. Overflow reports +inf, which is a valid "very ill-conditioned"
  // signal rather than a failure.
  for (Index i = 0; i < n; ++i) {
    if (r(i, i) == 0.0) {
      out.norm_r_inv = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  z = start_vector(n);
  for (int it = 0; it < iters; ++it) {
    // w = R^-T z (forward), z2 = R^-1 w (backward)
    for (Index i = 0; i < n; ++i) {
      double s = z[i];
      for (Index t = 0; t < i; ++t) s -= r(t, i) * w[t];
      w[i] = s / r(i, i);
    }
    if (!all_finite(w)) {
      out.norm_r_inv = std::numeric_limits<double>::infinity();
      return out;
    }
    out.norm_r_inv = std::max(out.norm_r_inv, vec_norm(w) / vec_norm(z));
    for (Index i = n - 1; i >= 0; --i) {
      double s = w[i];
      for (Index t = i + 1; t < n; ++t) s -= r(i, t) * z2[t];
      z2[i] = s / r(i, i);
    }
    if (!all_finite(z2)) {
      out.norm_r_inv = std::numeric_limits<double>::infinity();
      return out;
    }
    const double nz = vec_norm(z2);
    out.norm_r_inv = std::max(out.norm_r_inv, std::sqrt(nz / vec_norm(z)));
    if (nz == 0.0) break;
    for (Index i = 0; i < n; ++i) z[i] = z2[i] / nz;
  }
  return out;
}

double estimate_spectral_norm(const DenseMatrix& m, int iters) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  std::vector<double> z = start_vector(m.cols());
  double best = 0.0;
  DenseMatrix zv(m.cols(), 1), wv(m.rows(), 1);
  for (int it = 0; it < iters; ++it) {
    std::memcpy(zv.data(), z.data(), sizeof(double) * z.size());
    DenseMatrix w = matmul(m, zv);
    double nw = 0.0;
    for (Index i = 0; i < w.rows(); ++i) nw += w(i, 0) * w(i, 0);
    nw = std::sqrt(nw);
    best = std::max(best, nw);  // z stays unit
    DenseMatrix z2 = matmul(m, w, /*transpose_a=*/true);
    double nz = 0.0;
    for (Index i = 0; i < z2.rows(); ++i) nz += z2(i, 0) * z2(i, 0);
    nz = std::sqrt(nz);
    if (nz == 0.0) break;
    for (Index i = 0; i < m.cols(); ++i) z[i] = z2(i, 0) / nz;
  }
  return best;
}

}  // namespace randlr::kernels
