// Compares the OpenMP kernels against their serial reference
// implementations: throughput and max deviation side by side.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "randlr/kernels.hpp"
#include "randlr/rng.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

using namespace randlr;
using clock_type = std::chrono::steady_clock;

namespace {

DenseMatrix random_matrix(Index m, Index n, std::uint64_t seed) {
  rng::Counter gen(seed, 0);
  DenseMatrix a(m, n);
  for (Index k = 0; k < m * n; ++k) a.data()[k] = gen.gaussian_at(k);
  return a;
}

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double d = 0.0;
  for (Index k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.data()[k] - b.data()[k]));
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  Index n = argc > 1 ? std::stoll(argv[1]) : 768;
  int threads = 0;
#if defined(_OPENMP)
  threads = omp_get_max_threads();
#endif
  std::printf("kernel benchmark, n = %lld, omp threads = %d\n", static_cast<long long>(n),
              threads);
  std::printf("%-18s %12s %12s %8s %12s\n", "kernel", "parallel ms", "serial ms", "speedup",
              "max |diff|");

  {
    DenseMatrix a = random_matrix(n, n, 1), b = random_matrix(n, 256, 2);
    auto t0 = clock_type::now();
    DenseMatrix c1 = kernels::matmul(a, b);
    const double tp = ms_since(t0);
    t0 = clock_type::now();
    DenseMatrix c2 = kernels::reference::matmul(a, b);
    const double ts = ms_since(t0);
    std::printf("%-18s %12.1f %12.1f %7.2fx %12.3e\n", "matmul", tp, ts, ts / tp,
                max_abs_diff(c1, c2));
  }
  {
    DenseMatrix a = random_matrix(n, n, 3), b = random_matrix(n, 256, 4);
    auto t0 = clock_type::now();
    DenseMatrix c1 = kernels::matmul(a, b, true);
    const double tp = ms_since(t0);
    t0 = clock_type::now();
    DenseMatrix c2 = kernels::reference::matmul(a, b, true);
    const double ts = ms_since(t0);
    std::printf("%-18s %12.1f %12.1f %7.2fx %12.3e\n", "matmul^T", tp, ts, ts / tp,
                max_abs_diff(c1, c2));
  }
  {
    const Index rows = std::max<Index>(64, n / 4);
    DenseMatrix a = random_matrix(rows, n, 5);
    auto t0 = clock_type::now();
    DenseMatrix c1 = kernels::dct2_rows(a);
    const double tp = ms_since(t0);
    t0 = clock_type::now();
    DenseMatrix c2 = kernels::reference::dct2_rows(a);
    const double ts = ms_since(t0);
    std::printf("%-18s %12.1f %12.1f %7.2fx %12.3e\n", "dct2_rows", tp, ts, ts / tp,
                max_abs_diff(c1, c2));
  }
  {
    const Index cols = std::max<Index>(64, n / 4);
    DenseMatrix a = random_matrix(n, cols, 6);
    auto t0 = clock_type::now();
    DenseMatrix c1 = kernels::dct2_cols(a);
    const double tp = ms_since(t0);
    t0 = clock_type::now();
    DenseMatrix c2 = kernels::reference::dct2_cols(a);
    const double ts = ms_since(t0);
    std::printf("%-18s %12.1f %12.1f %7.2fx %12.3e\n", "dct2_cols", tp, ts, ts / tp,
                max_abs_diff(c1, c2));
  }
  return 0;
}
