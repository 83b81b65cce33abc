#pragma once

#include <cstdint>
#include <vector>

#include "randlr/matrix.hpp"

namespace randlr::sketch {

enum class SketchKind { Gaussian, SubsampledDct, CountSketch };

const char* kind_name(SketchKind k);
SketchKind kind_from_name(const std::string& s);

// Seed and stream fully determine the operator; stream 0/1 are the X/Y of a
// fresh approximation run, higher streams are drawn by updates.
struct SketchSpec {
  SketchKind kind = SketchKind::Gaussian;
  Index ambient_dim = 0;
  Index sketch_dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct SketchOperator {
  SketchSpec spec;
  // Gaussian: the explicit ambient x sketch matrix.
  DenseMatrix gaussian;
  // SubsampledDct: X = sqrt(ambient/sketch) * D * C^T * S with D random
  // signs, C the orthonormal DCT-II and S a uniform column subset drawn
  // without replacement (indices sorted ascending).
  std::vector<double> signs;
  std::vector<Index> selected;
  double scale = 1.0;
  // CountSketch: one (bucket, sign) pair per ambient index.
  std::vector<Index> bucket;
  std::vector<double> cs_sign;
};

SketchOperator generate(const SketchSpec& spec);

// A * X. The SubsampledDct path runs sign-scale -> dct2_rows -> select at
// O(mn log n); CountSketch is O(nnz); Gaussian is a matmul.
DenseMatrix apply_right(const DenseMatrix& a, const SketchOperator& op);
DenseMatrix apply_right(const SparseMatrix& a, const SketchOperator& op);

// Y^T * A via the transposed fast paths.
DenseMatrix apply_left(const SketchOperator& op, const DenseMatrix& a);
DenseMatrix apply_left(const SketchOperator& op, const SparseMatrix& a);

// Dense ambient x sketch materialization (tests and small-size oracles).
DenseMatrix materialize(const SketchOperator& op);

}  // namespace randlr::sketch
