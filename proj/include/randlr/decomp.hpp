#pragma once

#include <optional>
#include <string>
#include <variant>

#include "randlr/sketch.hpp"
#include "randlr/stability.hpp"

namespace randlr::decomp {

using sketch::SketchKind;
using stability::CoreFactor;
using stability::CorePath;
using stability::EpsilonPolicy;
using stability::InstabilityReport;

enum class Method { Hmt, Nystrom, NystromHmt, SubspaceIter, GnPlain, GnStabilized };
const char* method_name(Method m);
Method method_from_name(const std::string& s);

// Non-owning dense-or-sparse view; every matrix access of the algorithms
// funnels through here.
class MatrixHandle {
 public:
  MatrixHandle(const DenseMatrix& d) : dense_(&d) {}
  MatrixHandle(const SparseMatrix& s) : sparse_(&s) {}

  Index rows() const { return dense_ ? dense_->rows() : sparse_->rows(); }
  Index cols() const { return dense_ ? dense_->cols() : sparse_->cols(); }
  bool is_dense() const { return dense_ != nullptr; }
  const DenseMatrix& dense() const { return *dense_; }
  const SparseMatrix& sparse() const { return *sparse_; }

  DenseMatrix times(const DenseMatrix& b) const;            // A * B
  DenseMatrix transpose_times(const DenseMatrix& b) const;  // A^T * B
  DenseMatrix sketch_right(const sketch::SketchOperator& op) const;  // A X
  DenseMatrix sketch_left(const sketch::SketchOperator& op) const;   // Y^T A
  double frobenius() const;
  double symmetry_gap() const;  // ||A - A^T||_F, square only
  DenseMatrix to_dense() const;

 private:
  const DenseMatrix* dense_ = nullptr;
  const SparseMatrix* sparse_ = nullptr;
};

// GN family: A ~ F * core^+ * G with F = AX, G = Y^T A. Nystrom stores
// G = F^T per its defining formula.
struct GnForm {
  DenseMatrix f;
  DenseMatrix g;
  CoreFactor core;
};

// HMT / subspace iteration: A ~ (Q U0) S0 V0^T from the SVD of Q^T A.
struct RangeForm {
  DenseMatrix q;
  DenseMatrix u0;
  std::vector<double> sigma0;
  DenseMatrix v0t;  // r x n
};

struct Approximant {
  Method method = Method::GnPlain;
  Index m = 0, n = 0, r = 0, ell = 0;
  std::uint64_t seed = 0;
  SketchKind kind = SketchKind::Gaussian;
  std::optional<InstabilityReport> instability;
  bool psd_warning = false;  // Nystrom: core diagonal went negative
  std::variant<GnForm, RangeForm> form;

  bool is_gn() const { return std::holds_alternative<GnForm>(form); }
  const GnForm& gn() const { return std::get<GnForm>(form); }
  const RangeForm& range() const { return std::get<RangeForm>(form); }
  Index memory_entries() const;
};

enum class Side { Right, Left };

// Rangefinder; p = 0 is the plain method, p >= 1 interleaves A^T / A
// applications with re-orthonormalization (subspace iteration).
Approximant hmt(const MatrixHandle& a, Index r, int power, std::uint64_t seed,
                SketchKind kind = SketchKind::Gaussian);

// Classical Nystrom for symmetric PSD input: A ~ AX (X^T A X)^+ (AX)^T.
Approximant nystrom_psd(const MatrixHandle& a, Index r, std::uint64_t seed,
                        SketchKind kind = SketchKind::Gaussian,
                        const EpsilonPolicy& policy = {});

// Nystrom with the orthogonalized sketch X = orth(A Omega).
Approximant nystrom_hmt(const MatrixHandle& a, Index r, std::uint64_t seed,
                        SketchKind kind = SketchKind::Gaussian,
                        const EpsilonPolicy& policy = {});

inline Index default_oversample(Index r) { return (r + 1) / 2; }

// Plain generalized Nystrom. Records the instability flag from detect but
// never switches paths. Throws on an exact zero R diagonal with a pointer
// to gn_stabilized.
Approximant gn_plain(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                     SketchKind kind = SketchKind::Gaussian);

// Stabilized GN: the core is always built through the epsilon-truncated
// path; finite output for every input.
Approximant gn_stabilized(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                          SketchKind kind = SketchKind::Gaussian,
                          const EpsilonPolicy& policy = {},
                          CorePath path = CorePath::RrqrTruncate);

// Plain GN with the detect-and-switch fix: plain core unless flagged, then
// the RRQR truncated path. Method reports GnStabilized when switched.
Approximant gn_with_fallback(const MatrixHandle& a, Index r, Index ell, std::uint64_t seed,
                             SketchKind kind = SketchKind::Gaussian,
                             const EpsilonPolicy& policy = {});

// approx * W (Right) or W * approx (Left), factor by factor in the stable
// order; intermediates never exceed (r+l) x k.
DenseMatrix apply(const Approximant& approx, const DenseMatrix& w, Side side);

// Explicit m x n product (testing/oracle use; guarded by the entry cap).
DenseMatrix materialize(const Approximant& approx, Index entry_cap = 10'000'000);

}  // namespace randlr::decomp
