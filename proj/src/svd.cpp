#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "randlr/kernels.hpp"

namespace randlr::kernels {

namespace {

constexpr int kMaxSweeps = 60;

// One-sided Jacobi on a square matrix W (overwritten with U*Sigma). V
// accumulates the right rotations when non-null. Returns singular values,
// unsorted. The stopping tolerance scales with sqrt(m): cosines below that
// are dominated by roundoff in the dot products and rotating on them would
// chatter forever on rank-deficient inputs.
std::vector<double> jacobi_sweeps(DenseMatrix& w, DenseMatrix* v) {
  const Index n = w.cols();
  const Index m = w.rows();
  const double tol = 8.0 * std::sqrt(double(m)) * kUnitRoundoff;
  std::vector<double> norm2(n);
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      const double* cj = w.col(j);
      for (Index i = 0; i < m; ++i) s += cj[i] * cj[i];
      norm2[j] = s;
    }
    bool rotated = false;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double app = norm2[p], aqq = norm2[q];
        if (app == 0.0 || aqq == 0.0) continue;
        double* cp = w.col(p);
        double* cq = w.col(q);
        double apq = 0.0;
        for (Index i = 0; i < m; ++i) apq += cp[i] * cq[i];
        if (std::abs(apq) <= tol * std::sqrt(app) * std::sqrt(aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < m; ++i) {
          const double wp = cp[i], wq = cq[i];
          cp[i] = c * wp - s * wq;
          cq[i] = s * wp + c * wq;
        }
        norm2[p] = app - t * apq;
        norm2[q] = aqq + t * apq;
        if (v != nullptr) {
          double* vp = v->col(p);
          double* vq = v->col(q);
          for (Index i = 0; i < v->rows(); ++i) {
            const double xp = vp[i], xq = vq[i];
            vp[i] = c * xp - s * xq;
            vq[i] = s * xp + c * xq;
          }
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps)
    throw NumericalError("svd: one-sided Jacobi failed to converge (kernel bug)");
  std::vector<double> sigma(n);
  for (Index j = 0; j < n; ++j) {
    double s = 0.0;
    const double* cj = w.col(j);
    for (Index i = 0; i < m; ++i) s += cj[i] * cj[i];
    sigma[j] = std::sqrt(s);
  }
  return sigma;
}

// Fills exactly-zero columns of U with deterministic orthonormal vectors.
void complete_orthonormal(DenseMatrix& u, const std::vector<double>& sigma) {
  const Index m = u.rows(), n = u.cols();
  for (Index j = 0; j < n; ++j) {
    if (sigma[j] != 0.0) continue;
    for (Index cand = 0; cand < m; ++cand) {
      for (Index i = 0; i < m; ++i) u(i, j) = (i == cand) ? 1.0 : 0.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < n; ++c) {
          if (c == j || (sigma[c] == 0.0 && c > j)) continue;
          double dot = 0.0;
          for (Index i = 0; i < m; ++i) dot += u(i, c) * u(i, j);
          for (Index i = 0; i < m; ++i) u(i, j) -= dot * u(i, c);
        }
      }
      double norm = 0.0;
      for (Index i = 0; i < m; ++i) norm += u(i, j) * u(i, j);
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        for (Index i = 0; i < m; ++i) u(i, j) /= norm;
        break;
      }
    }
  }
}

}  // namespace

SVDFactors svd(const DenseMatrix& m_in) {
  for (Index k = 0; k < m_in.size(); ++k)
    if (!std::isfinite(m_in.data()[k])) throw NumericalError("svd: non-finite entry");
  if (m_in.rows() < m_in.cols()) {
    SVDFactors t = svd(transpose(m_in));
    return SVDFactors{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const Index m = m_in.rows(), n = m_in.cols();
  SVDFactors out;
  if (n == 0) {
    out.u = DenseMatrix(m, 0);
    out.v = DenseMatrix(0, 0);
    return out;
  }

  // Thin QR first (dgejsv-style preconditioning), then Jacobi on R.
  QRFactors qr = thin_qr(m_in);
  DenseMatrix w = std::move(qr.r);
  DenseMatrix v = DenseMatrix::identity(n);
  std::vector<double> sigma = jacobi_sweeps(w, &v);

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sigma[a] > sigma[b]; });

  DenseMatrix uw(n, n), vs(n, n);
  std::vector<double> sorted(n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[j];
    sorted[j] = sigma[src];
    for (Index i = 0; i < n; ++i) {
      uw(i, j) = sigma[src] == 0.0 ? 0.0 : w(i, src) / sigma[src];
      vs(i, j) = v(i, src);
    }
  }
  complete_orthonormal(uw, sorted);
  out.u = matmul(qr.q, uw);
  out.sigma = std::move(sorted);
  out.v = std::move(vs);
  return out;
}

std::vector<double> svd_values(const DenseMatrix& m_in) {
  if (m_in.rows() < m_in.cols()) return svd_values(transpose(m_in));
  const Index n = m_in.cols();
  if (n == 0) return {};
  QRFactors qr = thin_qr(m_in);
  DenseMatrix w = std::move(qr.r);
  std::vector<double> sigma = jacobi_sweeps(w, nullptr);
  std::sort(sigma.begin(), sigma.end(), std::greater<double>());
  return sigma;
}

}  // namespace randlr::kernels
