#include "randlr/sketch.hpp"

#include <algorithm>
#include <cmath>

#include "randlr/kernels.hpp"
#include "randlr/rng.hpp"

namespace randlr::sketch {

const char* kind_name(SketchKind k) {
  switch (k) {
    case SketchKind::Gaussian: return "gaussian";
    case SketchKind::SubsampledDct: return "dct";
    case SketchKind::CountSketch: return "countsketch";
  }
  return "?";
}

SketchKind kind_from_name(const std::string& s) {
  if (s == "gaussian") return SketchKind::Gaussian;
  if (s == "dct") return SketchKind::SubsampledDct;
  if (s == "countsketch") return SketchKind::CountSketch;
  throw DimensionError("unknown sketch kind: " + s);
}

SketchOperator generate(const SketchSpec& spec) {
  if (spec.sketch_dim <= 0 || spec.ambient_dim <= 0)
    throw DimensionError("generate: dimensions must be positive");
  // Subsampling without replacement needs sketch_dim <= ambient_dim; wide
  // Gaussian/CountSketch blocks are legitimate (they arise when appended
  // data is shorter than the sketch width).
  if (spec.kind == SketchKind::SubsampledDct && spec.sketch_dim > spec.ambient_dim)
    throw DimensionError("generate: sketch_dim > ambient_dim for a subsampled operator");
  SketchOperator op;
  op.spec = spec;
  const Index n = spec.ambient_dim, k = spec.sketch_dim;
  rng::Counter gen(spec.seed, spec.stream);

  switch (spec.kind) {
    case SketchKind::Gaussian: {
      op.gaussian = DenseMatrix(n, k);
      double* d = op.gaussian.data();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
      for (Index c = 0; c < n * k; ++c) d[c] = gen.gaussian_at(static_cast<std::uint64_t>(c));
      break;
    }
    case SketchKind::SubsampledDct: {
      op.signs.resize(n);
      for (Index i = 0; i < n; ++i) op.signs[i] = (gen.u64_at(i) & 1) ? 1.0 : -1.0;
      // Partial Fisher-Yates over a fresh draw range, without replacement.
      std::vector<Index> pool(n);
      for (Index i = 0; i < n; ++i) pool[i] = i;
      for (Index i = 0; i < k; ++i) {
        const std::uint64_t j =
            gen.bounded_at(static_cast<std::uint64_t>(n + i), static_cast<std::uint64_t>(n - i));
        std::swap(pool[i], pool[i + static_cast<Index>(j)]);
      }
      op.selected.assign(pool.begin(), pool.begin() + k);
      std::sort(op.selected.begin(), op.selected.end());
      op.scale = std::sqrt(double(n) / double(k));
      break;
    }
    case SketchKind::CountSketch: {
      op.bucket.resize(n);
      op.cs_sign.resize(n);
      for (Index i = 0; i < n; ++i) {
        op.bucket[i] = static_cast<Index>(
            gen.bounded_at(static_cast<std::uint64_t>(2 * i), static_cast<std::uint64_t>(k)));
        op.cs_sign[i] = (gen.u64_at(2 * i + 1) & 1) ? 1.0 : -1.0;
      }
      break;
    }
  }
  return op;
}

namespace {

void check_right(Index a_cols, const SketchOperator& op) {
  if (a_cols != op.spec.ambient_dim)
    throw DimensionError("apply_right: A.cols must equal the operator's ambient dimension");
}

void check_left(Index a_rows, const SketchOperator& op) {
  if (a_rows != op.spec.ambient_dim)
    throw DimensionError("apply_left: A.rows must equal the operator's ambient dimension");
}

}  // namespace

DenseMatrix apply_right(const DenseMatrix& a, const SketchOperator& op) {
  check_right(a.cols(), op);
  const Index m = a.rows(), n = op.spec.ambient_dim, k = op.spec.sketch_dim;
  switch (op.spec.kind) {
    case SketchKind::Gaussian:
      return kernels::matmul(a, op.gaussian);
    case SketchKind::SubsampledDct: {
      // Row blocks keep the scratch at O(block * n); no m x n buffer.
      constexpr Index kRowBlock = 128;
      DenseMatrix out(m, k);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
      for (Index blk = 0; blk < (m + kRowBlock - 1) / kRowBlock; ++blk) {
        const Index i0 = blk * kRowBlock;
        const Index rows = std::min(kRowBlock, m - i0);
        DenseMatrix b(rows, n);
        for (Index j = 0; j < n; ++j) {
          const double s = op.signs[j];
          const double* aj = a.col(j) + i0;
          double* bj = b.col(j);
          for (Index i = 0; i < rows; ++i) bj[i] = s * aj[i];
        }
        DenseMatrix t = kernels::dct2_rows(b);
        for (Index c = 0; c < k; ++c) {
          const double* tc = t.col(op.selected[c]);
          double* oc = out.col(c) + i0;
          for (Index i = 0; i < rows; ++i) oc[i] = op.scale * tc[i];
        }
      }
      return out;
    }
    case SketchKind::CountSketch: {
      DenseMatrix out(m, k);
      for (Index j = 0; j < n; ++j) {
        const double s = op.cs_sign[j];
        const double* aj = a.col(j);
        double* oc = out.col(op.bucket[j]);
        for (Index i = 0; i < m; ++i) oc[i] += s * aj[i];
      }
      return out;
    }
  }
  throw NumericalError("apply_right: unreachable");
}

DenseMatrix apply_right(const SparseMatrix& a, const SketchOperator& op) {
  check_right(a.cols(), op);
  const Index m = a.rows(), n = op.spec.ambient_dim, k = op.spec.sketch_dim;
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& vals = a.values();
  DenseMatrix out(m, k);
  switch (op.spec.kind) {
    case SketchKind::Gaussian:
      return kernels::matmul(a, op.gaussian);
    case SketchKind::SubsampledDct: {
      // O(nnz * k) entrywise evaluation; the n log n path has no advantage
      // once A is sparse.
      for (Index i = 0; i < m; ++i)
        for (Index t = rp[i]; t < rp[i + 1]; ++t) {
          const Index j = ci[t];
          const double v = vals[t] * op.signs[j];
          for (Index c = 0; c < k; ++c)
            out(i, c) += v * op.scale * kernels::dct2_entry(op.selected[c], j, n);
        }
      return out;
    }
    case SketchKind::CountSketch: {
      for (Index i = 0; i < m; ++i)
        for (Index t = rp[i]; t < rp[i + 1]; ++t) {
          const Index j = ci[t];
          out(i, op.bucket[j]) += op.cs_sign[j] * vals[t];
        }
      return out;
    }
  }
  throw NumericalError("apply_right: unreachable");
}

DenseMatrix apply_left(const SketchOperator& op, const DenseMatrix& a) {
  check_left(a.rows(), op);
  const Index m = op.spec.ambient_dim, n = a.cols(), k = op.spec.sketch_dim;
  switch (op.spec.kind) {
    case SketchKind::Gaussian:
      return kernels::matmul(op.gaussian, a, /*transpose_a=*/true);
    case SketchKind::SubsampledDct: {
      constexpr Index kColBlock = 128;
      DenseMatrix out(k, n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
      for (Index blk = 0; blk < (n + kColBlock - 1) / kColBlock; ++blk) {
        const Index j0 = blk * kColBlock;
        const Index cols = std::min(kColBlock, n - j0);
        DenseMatrix b(m, cols);
        for (Index j = 0; j < cols; ++j) {
          const double* aj = a.col(j0 + j);
          double* bj = b.col(j);
          for (Index i = 0; i < m; ++i) bj[i] = op.signs[i] * aj[i];
        }
        DenseMatrix t = kernels::dct2_cols(b);
        for (Index j = 0; j < cols; ++j) {
          const double* tj = t.col(j);
          double* oj = out.col(j0 + j);
          for (Index c = 0; c < k; ++c) oj[c] = op.scale * tj[op.selected[c]];
        }
      }
      return out;
    }
    case SketchKind::CountSketch: {
      DenseMatrix out(k, n);
      for (Index j = 0; j < n; ++j) {
        const double* aj = a.col(j);
        double* oj = out.col(j);
        for (Index i = 0; i < m; ++i) oj[op.bucket[i]] += op.cs_sign[i] * aj[i];
      }
      return out;
    }
  }
  throw NumericalError("apply_left: unreachable");
}

DenseMatrix apply_left(const SketchOperator& op, const SparseMatrix& a) {
  check_left(a.rows(), op);
  const Index m = op.spec.ambient_dim, n = a.cols(), k = op.spec.sketch_dim;
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& vals = a.values();
  DenseMatrix out(k, n);
  switch (op.spec.kind) {
    case SketchKind::Gaussian: {
      for (Index i = 0; i < m; ++i)
        for (Index t = rp[i]; t < rp[i + 1]; ++t) {
          const double v = vals[t];
          const Index j = ci[t];
          const double* gi = op.gaussian.data() + i;  // row i, stride = ambient
          double* oj = out.col(j);
          for (Index c = 0; c < k; ++c) oj[c] += v * gi[c * m];
        }
      return out;
    }
    case SketchKind::SubsampledDct: {
      for (Index i = 0; i < m; ++i)
        for (Index t = rp[i]; t < rp[i + 1]; ++t) {
          const double v = vals[t] * op.signs[i];
          double* oj = out.col(ci[t]);
          for (Index c = 0; c < k; ++c)
            oj[c] += v * op.scale * kernels::dct2_entry(op.selected[c], i, m);
        }
      return out;
    }
    case SketchKind::CountSketch: {
      for (Index i = 0; i < m; ++i)
        for (Index t = rp[i]; t < rp[i + 1]; ++t)
          out(op.bucket[i], ci[t]) += op.cs_sign[i] * vals[t];
      return out;
    }
  }
  throw NumericalError("apply_left: unreachable");
}

DenseMatrix materialize(const SketchOperator& op) {
  const Index n = op.spec.ambient_dim, k = op.spec.sketch_dim;
  DenseMatrix x(n, k);
  switch (op.spec.kind) {
    case SketchKind::Gaussian:
      return op.gaussian;
    case SketchKind::SubsampledDct:
      for (Index c = 0; c < k; ++c)
        for (Index j = 0; j < n; ++j)
          x(j, c) = op.scale * op.signs[j] * kernels::dct2_entry(op.selected[c], j, n);
      return x;
    case SketchKind::CountSketch:
      for (Index j = 0; j < n; ++j) x(j, op.bucket[j]) = op.cs_sign[j];
      return x;
  }
  throw NumericalError("materialize: unreachable");
}

}  // namespace randlr::sketch
