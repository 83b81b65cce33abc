#pragma once

#include <vector>

#include "randlr/decomp.hpp"

namespace randlr::update {

using decomp::Approximant;
using decomp::MatrixHandle;
using sketch::SketchKind;
using sketch::SketchOperator;
using sketch::SketchSpec;
using stability::EpsilonPolicy;

// A sketch operator grown over time. Column groups are created by rank
// increases; ambient blocks within a group are created by appends. Every
// block regenerates bit-identically from its spec.
struct ColumnGroup {
  Index width = 0;
  std::vector<SketchOperator> blocks;  // tile the ambient dimension in order
};

struct CompositeSketch {
  SketchKind kind = SketchKind::Gaussian;
  Index ambient = 0;
  std::vector<ColumnGroup> groups;

  Index width() const;
  // A * X (A.cols == ambient).
  DenseMatrix apply_right(const MatrixHandle& a) const;
  // Y^T A (A.rows == ambient).
  DenseMatrix apply_left(const MatrixHandle& a) const;
  DenseMatrix materialize() const;  // ambient x width, tests and oracles
  std::vector<SketchSpec> specs() const;
};

// Single-pass state: the sketches and the raw (unfactored) core, plus the
// stream counter that makes fresh randomness reproducible.
struct UpdatableState {
  Index m = 0, n = 0, r = 0, ell = 0;
  std::uint64_t seed = 0;
  SketchKind kind = SketchKind::Gaussian;
  EpsilonPolicy eps;
  CompositeSketch x;       // n x r
  CompositeSketch y;       // m x (r+ell)
  DenseMatrix f;           // A X
  DenseMatrix g;           // Y^T A
  DenseMatrix raw_core;    // Y^T A X, kept unfactored so appends can add to it
  std::uint64_t next_stream = 2;
};

UpdatableState make_updatable(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                              SketchKind kind = SketchKind::Gaussian,
                              const EpsilonPolicy& policy = {});

// Factorizes the raw core (plain QR with the detect-and-switch fallback) and
// packages the current factors.
Approximant snapshot(const UpdatableState& state);

// [A; B]: fresh Y-rows stream; F gains B X rows, G += Ytilde^T B,
// core += Ytilde^T B X. Reads only B and the state.
UpdatableState append_rows(const UpdatableState& state, const MatrixHandle& b);

// [A, B]: mirror with a fresh X stream.
UpdatableState append_cols(const UpdatableState& state, const MatrixHandle& b);

// A + E: F += E X, G += Y^T E, core += (Y^T E) X.
UpdatableState additive_update(const UpdatableState& state, const MatrixHandle& e);

// Rank increase r -> r + delta_r (and ell grown to keep ell/r roughly
// constant); needs one new pass over A for A X_new and Y_new^T A.
UpdatableState resample_increase_rank(const UpdatableState& state, const MatrixHandle& a,
                                      Index delta_r);

}  // namespace randlr::update
