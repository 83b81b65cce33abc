#pragma once

#include <vector>

#include "randlr/matrix.hpp"

namespace randlr::kernels {

struct QRFactors {
  DenseMatrix q;  // thin, orthonormal columns
  DenseMatrix r;  // square upper triangular, exact zeros below the diagonal
};

struct PivotedQRFactors {
  DenseMatrix q;
  DenseMatrix r;
  std::vector<Index> perm;  // M(:, perm[t]) is column t of M*Pi
};

struct SVDFactors {
  DenseMatrix u;
  std::vector<double> sigma;  // non-increasing, non-negative
  DenseMatrix v;
};

struct NormEstimates {
  double norm_r;      // lower bound on ||R||_2
  double norm_r_inv;  // lower bound on ||R^-1||_2; +inf when solves overflow
};

// C = op(A) * B, blocked; bitwise deterministic and independent of the
// OpenMP thread count (each output column is produced by one thread with a
// fixed summation order).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a = false);
DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b, bool transpose_a = false);

// Householder QR, rows >= cols; Q formed explicitly by backward accumulation.
QRFactors thin_qr(const DenseMatrix& m);

// Businger-Golub column-pivoted QR, rows >= cols.
PivotedQRFactors pivoted_qr(const DenseMatrix& m);

// Solves X * R = B for X (R upper triangular). Throws on an exact zero diagonal.
DenseMatrix tri_solve_right(const DenseMatrix& b, const DenseMatrix& r);
// Solves R * X = B (back substitution).
DenseMatrix tri_solve_left(const DenseMatrix& r, const DenseMatrix& b);
// Solves R^T * X = B (forward substitution; R upper triangular).
DenseMatrix tri_solve_left_transposed(const DenseMatrix& r, const DenseMatrix& b);
// Solves X * R^T = B.
DenseMatrix tri_solve_right_transposed(const DenseMatrix& b, const DenseMatrix& r);

// Thin SVD with singular values sorted non-increasing. One-sided Jacobi with
// thin-QR preconditioning; intended for matrices up to a few thousand on a
// side (core matrices and test oracles).
SVDFactors svd(const DenseMatrix& m);
// Singular values only (skips accumulation of U and V).
std::vector<double> svd_values(const DenseMatrix& m);

// Orthonormal DCT-II along each row / column. O(n log n) for any length via
// a radix-2 FFT plus Bluestein; parallelized over row/column blocks with
// results independent of the thread count.
DenseMatrix dct2_rows(const DenseMatrix& m);
DenseMatrix dct2_cols(const DenseMatrix& m);
// Inverse transforms (orthonormal DCT-III).
DenseMatrix idct2_rows(const DenseMatrix& m);

// Power-method estimates of ||R||_2 and ||R^-1||_2 for upper-triangular R;
// each step is O(r^2) and both estimates never exceed the true norms.
NormEstimates estimate_norms(const DenseMatrix& r, int iters);

// Power-method lower bound on ||M||_2 for a general matrix.
double estimate_spectral_norm(const DenseMatrix& m, int iters);

// Single entry of the orthonormal DCT-II matrix: row k, column j, size n.
double dct2_entry(Index k, Index j, Index n);

// Serial reference implementations kept as test oracles and for the
// kernel benchmark.
namespace reference {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a = false);
DenseMatrix dct2_rows(const DenseMatrix& m);  // O(n^2) direct cosine sums
DenseMatrix dct2_cols(const DenseMatrix& m);
}  // namespace reference

}  // namespace randlr::kernels
