#pragma once

#include <cmath>
#include <vector>

#include "randlr/kernels.hpp"
#include "randlr/matrix.hpp"
#include "randlr/rng.hpp"

namespace testutil {

using randlr::DenseMatrix;
using randlr::Index;
using randlr::SparseMatrix;

inline DenseMatrix random_matrix(Index m, Index n, std::uint64_t seed,
                                 std::uint64_t stream = 900) {
  randlr::rng::Counter gen(seed, stream);
  DenseMatrix a(m, n);
  for (Index k = 0; k < m * n; ++k) a.data()[k] = gen.gaussian_at(k);
  return a;
}

// Exact-rank-k product of two Gaussian factors.
inline DenseMatrix random_low_rank(Index m, Index n, Index k, std::uint64_t seed) {
  DenseMatrix b = random_matrix(m, k, seed, 901);
  DenseMatrix c = random_matrix(n, k, seed, 902);
  return randlr::kernels::matmul(b, transpose(c));
}

// Random matrix with the given singular values (Haar factors).
inline DenseMatrix with_spectrum(Index m, Index n, const std::vector<double>& sv,
                                 std::uint64_t seed, bool psd = false) {
  const Index k = std::min(m, n);
  DenseMatrix u = randlr::kernels::thin_qr(random_matrix(m, k, seed, 903)).q;
  DenseMatrix v = psd ? u : randlr::kernels::thin_qr(random_matrix(n, k, seed, 904)).q;
  DenseMatrix us = u;
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < m; ++i) us(i, j) *= (j < static_cast<Index>(sv.size()) ? sv[j] : 0.0);
  return randlr::kernels::matmul(us, transpose(v));
}

inline double rel_err(const DenseMatrix& got, const DenseMatrix& want) {
  const double denom = frobenius_norm(want);
  return frobenius_norm(got - want) / (denom > 0 ? denom : 1.0);
}

// Dense pseudoinverse via the SVD, with epsilon truncation; independent
// oracle for the stability module.
inline DenseMatrix pinv_oracle(const DenseMatrix& m, double eps = 0.0) {
  randlr::kernels::SVDFactors f = randlr::kernels::svd(m);
  DenseMatrix vs(m.cols(), m.cols());
  Index k = 0;
  while (k < static_cast<Index>(f.sigma.size()) && f.sigma[k] > eps) ++k;
  DenseMatrix v1(m.cols(), k), u1(m.rows(), k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < m.cols(); ++i) v1(i, j) = f.v(i, j) / f.sigma[j];
    for (Index i = 0; i < m.rows(); ++i) u1(i, j) = f.u(i, j);
  }
  return randlr::kernels::matmul(v1, transpose(u1));
}

}  // namespace testutil
