#include "randlr/update.hpp"

#include <algorithm>

namespace randlr::update {

namespace {

// Structured kinds cannot produce blocks wider than their ambient length;
// short appended blocks fall back to Gaussian randomness.
SketchKind block_kind(SketchKind kind, Index ambient, Index width) {
  if (kind == SketchKind::SubsampledDct && width > ambient) return SketchKind::Gaussian;
  return kind;
}

}  // namespace

Index CompositeSketch::width() const {
  Index w = 0;
  for (const auto& g : groups) w += g.width;
  return w;
}

DenseMatrix CompositeSketch::apply_right(const MatrixHandle& a) const {
  if (a.cols() != ambient) throw DimensionError("CompositeSketch::apply_right: column mismatch");
  DenseMatrix out(a.rows(), width());
  Index col_off = 0;
  for (const auto& grp : groups) {
    Index amb_off = 0;
    for (const auto& blk : grp.blocks) {
      const Index len = blk.spec.ambient_dim;
      DenseMatrix part;
      if (a.is_dense()) {
        part = sketch::apply_right(slice_cols(a.dense(), amb_off, len), blk);
      } else {
        part = sketch::apply_right(slice_cols(a.sparse(), amb_off, len), blk);
      }
      for (Index j = 0; j < grp.width; ++j) {
        double* dst = out.col(col_off + j);
        const double* src = part.col(j);
        for (Index i = 0; i < a.rows(); ++i) dst[i] += src[i];
      }
      amb_off += len;
    }
    if (!grp.blocks.empty() && amb_off != ambient)
      throw DimensionError("CompositeSketch: ambient blocks do not tile the dimension");
    col_off += grp.width;
  }
  return out;
}

DenseMatrix CompositeSketch::apply_left(const MatrixHandle& a) const {
  if (a.rows() != ambient) throw DimensionError("CompositeSketch::apply_left: row mismatch");
  DenseMatrix out(width(), a.cols());
  Index row_off = 0;
  for (const auto& grp : groups) {
    Index amb_off = 0;
    for (const auto& blk : grp.blocks) {
      const Index len = blk.spec.ambient_dim;
      DenseMatrix part;
      if (a.is_dense()) {
        part = sketch::apply_left(blk, slice_rows(a.dense(), amb_off, len));
      } else {
        part = sketch::apply_left(blk, slice_rows(a.sparse(), amb_off, len));
      }
      for (Index j = 0; j < a.cols(); ++j) {
        double* dst = out.col(j) + row_off;
        const double* src = part.col(j);
        for (Index i = 0; i < grp.width; ++i) dst[i] += src[i];
      }
      amb_off += len;
    }
    row_off += grp.width;
  }
  return out;
}

DenseMatrix CompositeSketch::materialize() const {
  DenseMatrix out(ambient, width());
  Index col_off = 0;
  for (const auto& grp : groups) {
    Index amb_off = 0;
    for (const auto& blk : grp.blocks) {
      DenseMatrix part = sketch::materialize(blk);
      for (Index j = 0; j < grp.width; ++j)
        for (Index i = 0; i < part.rows(); ++i) out(amb_off + i, col_off + j) = part(i, j);
      amb_off += blk.spec.ambient_dim;
    }
    col_off += grp.width;
  }
  return out;
}

std::vector<SketchSpec> CompositeSketch::specs() const {
  std::vector<SketchSpec> s;
  for (const auto& g : groups)
    for (const auto& b : g.blocks) s.push_back(b.spec);
  return s;
}

UpdatableState make_updatable(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                              SketchKind kind, const EpsilonPolicy& policy) {
  if (ell < 1) throw DimensionError("make_updatable: oversampling must be positive");
  if (r < 1 || r + ell > std::min(a.rows(), a.cols()))
    throw DimensionError("make_updatable: rank out of range");
  UpdatableState st;
  st.m = a.rows();
  st.n = a.cols();
  st.r = r;
  st.ell = ell;
  st.seed = seed;
  st.kind = kind;
  st.eps = policy;
  st.x.kind = kind;
  st.x.ambient = a.cols();
  st.x.groups.push_back({r, {sketch::generate({kind, a.cols(), r, seed, 0})}});
  st.y.kind = kind;
  st.y.ambient = a.rows();
  st.y.groups.push_back({r + ell, {sketch::generate({kind, a.rows(), r + ell, seed, 1})}});
  st.f = st.x.apply_right(a);
  st.g = st.y.apply_left(a);
  st.raw_core = st.x.apply_right(MatrixHandle(st.g));
  st.next_stream = 2;
  return st;
}

Approximant snapshot(const UpdatableState& state) {
  stability::FallbackResult fb = stability::core_with_fallback(state.raw_core, state.eps);
  Approximant out;
  out.method = fb.switched ? decomp::Method::GnStabilized : decomp::Method::GnPlain;
  out.m = state.m;
  out.n = state.n;
  out.r = state.r;
  out.ell = state.ell;
  out.seed = state.seed;
  out.kind = state.kind;
  out.instability = fb.report;
  decomp::GnForm gf;
  gf.f = state.f;
  gf.g = state.g;
  gf.core = std::move(fb.core);
  out.form = std::move(gf);
  return out;
}

UpdatableState append_rows(const UpdatableState& state, const MatrixHandle& b) {
  if (b.cols() != state.n) throw DimensionError("append_rows: column mismatch");
  if (b.rows() == 0) return state;
  UpdatableState st = state;
  const Index mh = b.rows();

  DenseMatrix bx = st.x.apply_right(b);  // mh x r
  DenseMatrix gb(st.r + st.ell, st.n);   // Ytilde^T B, filled per group
  DenseMatrix core_add(st.raw_core.rows(), st.raw_core.cols());
  Index row_off = 0;
  for (auto& grp : st.y.groups) {
    SketchOperator fresh = sketch::generate(
        {block_kind(st.kind, mh, grp.width), mh, grp.width, st.seed, st.next_stream++});
    DenseMatrix part = b.is_dense() ? sketch::apply_left(fresh, b.dense())
                                    : sketch::apply_left(fresh, b.sparse());
    DenseMatrix cpart = sketch::apply_left(fresh, bx);
    for (Index j = 0; j < st.n; ++j)
      for (Index i = 0; i < grp.width; ++i) gb(row_off + i, j) = part(i, j);
    for (Index j = 0; j < core_add.cols(); ++j)
      for (Index i = 0; i < grp.width; ++i) core_add(row_off + i, j) = cpart(i, j);
    grp.blocks.push_back(std::move(fresh));
    row_off += grp.width;
  }
  st.y.ambient += mh;
  st.m += mh;
  st.f = vstack(st.f, bx);
  add_in_place(st.g, gb);
  add_in_place(st.raw_core, core_add);
  return st;
}

UpdatableState append_cols(const UpdatableState& state, const MatrixHandle& b) {
  if (b.rows() != state.m) throw DimensionError("append_cols: row mismatch");
  if (b.cols() == 0) return state;
  UpdatableState st = state;
  const Index nh = b.cols();

  DenseMatrix gb = st.y.apply_left(b);  // (r+ell) x nh
  DenseMatrix bx(st.m, st.r);           // B Xtilde
  DenseMatrix core_add(st.raw_core.rows(), st.raw_core.cols());
  Index col_off = 0;
  for (auto& grp : st.x.groups) {
    SketchOperator fresh = sketch::generate(
        {block_kind(st.kind, nh, grp.width), nh, grp.width, st.seed, st.next_stream++});
    DenseMatrix part = b.is_dense() ? sketch::apply_right(b.dense(), fresh)
                                    : sketch::apply_right(b.sparse(), fresh);
    DenseMatrix cpart = sketch::apply_right(gb, fresh);  // (r+ell) x width
    for (Index j = 0; j < grp.width; ++j) {
      for (Index i = 0; i < st.m; ++i) bx(i, col_off + j) = part(i, j);
      for (Index i = 0; i < core_add.rows(); ++i) core_add(i, col_off + j) = cpart(i, j);
    }
    grp.blocks.push_back(std::move(fresh));
    col_off += grp.width;
  }
  st.x.ambient += nh;
  st.n += nh;
  st.g = hstack(st.g, gb);
  add_in_place(st.f, bx);
  add_in_place(st.raw_core, core_add);
  return st;
}

UpdatableState additive_update(const UpdatableState& state, const MatrixHandle& e) {
  if (e.rows() != state.m || e.cols() != state.n)
    throw DimensionError("additive_update: shape mismatch");
  UpdatableState st = state;
  DenseMatrix ex = st.x.apply_right(e);
  DenseMatrix ye = st.y.apply_left(e);
  add_in_place(st.f, ex);
  add_in_place(st.g, ye);
  add_in_place(st.raw_core, st.x.apply_right(MatrixHandle(ye)));
  return st;
}

UpdatableState resample_increase_rank(const UpdatableState& state, const MatrixHandle& a,
                                      Index delta_r) {
  if (delta_r < 0) throw DimensionError("resample_increase_rank: delta_r must be >= 0");
  if (delta_r == 0) return state;
  if (a.rows() != state.m || a.cols() != state.n)
    throw DimensionError("resample_increase_rank: matrix shape does not match the state");
  // ell grows by ceil(delta_r * ell / r) so ell/r stays roughly constant;
  // Y therefore gains delta_r + delta_l columns (its width is r + ell).
  const Index delta_l = (delta_r * state.ell + state.r - 1) / state.r;
  const Index delta_y = delta_r + delta_l;
  if (state.r + delta_r + state.ell + delta_l > std::min(state.m, state.n))
    throw DimensionError("resample_increase_rank: rank cap exceeded");

  UpdatableState st = state;
  SketchOperator xnew = sketch::generate({st.kind, st.n, delta_r, st.seed, st.next_stream++});
  SketchOperator ynew = sketch::generate({st.kind, st.m, delta_y, st.seed, st.next_stream++});

  // The one permitted pass over A.
  DenseMatrix fnew = a.is_dense() ? sketch::apply_right(a.dense(), xnew)
                                  : sketch::apply_right(a.sparse(), xnew);
  DenseMatrix gnew = a.is_dense() ? sketch::apply_left(ynew, a.dense())
                                  : sketch::apply_left(ynew, a.sparse());

  DenseMatrix top_right = sketch::apply_right(st.g, xnew);         // (r+l) x dr
  DenseMatrix bottom_left = st.x.apply_right(MatrixHandle(gnew));  // dy x r
  DenseMatrix bottom_right = sketch::apply_right(gnew, xnew);      // dy x dr

  const Index old_rows = st.r + st.ell;
  DenseMatrix raw(old_rows + delta_y, st.r + delta_r);
  for (Index j = 0; j < st.r; ++j) {
    for (Index i = 0; i < old_rows; ++i) raw(i, j) = st.raw_core(i, j);
    for (Index i = 0; i < delta_y; ++i) raw(old_rows + i, j) = bottom_left(i, j);
  }
  for (Index j = 0; j < delta_r; ++j) {
    for (Index i = 0; i < old_rows; ++i) raw(i, st.r + j) = top_right(i, j);
    for (Index i = 0; i < delta_y; ++i) raw(old_rows + i, st.r + j) = bottom_right(i, j);
  }

  st.f = hstack(st.f, fnew);
  st.g = vstack(st.g, gnew);
  st.raw_core = std::move(raw);
  st.x.groups.push_back({delta_r, {std::move(xnew)}});
  st.y.groups.push_back({delta_y, {std::move(ynew)}});
  st.r += delta_r;
  st.ell += delta_l;
  return st;
}

}  // namespace randlr::update
