#pragma once

#include <string>
#include <vector>

#include "randlr/kernels.hpp"
#include "randlr/matrix.hpp"

namespace randlr::stability {

// Configurable default for detect(); flags when estimated kappa(R)*u exceeds
// it. See the project README for how this interacts with the GN->SGN switch.
inline constexpr double kDetectThreshold = 1e-9;
inline constexpr int kDetectIters = 10;

enum class CorePath { PlainQr, SvdTruncate, RrqrTruncate, DiagPerturb };
const char* path_name(CorePath p);
CorePath path_from_name(const std::string& s);

struct EpsilonPolicy {
  enum class Mode { Relative, Absolute };
  Mode mode = Mode::Relative;
  // Relative: epsilon = coefficient * estimate of ||Y^T A X||_2 (default 10u,
  // which matches the absolute 1e-15 of the reference experiments under the
  // ||A||_2 = 1 normalization). Absolute: epsilon = coefficient.
  double coefficient = 10.0 * kUnitRoundoff;

  static EpsilonPolicy absolute(double eps) { return {Mode::Absolute, eps}; }
  double resolve(double core_norm_estimate) const {
    return mode == Mode::Absolute ? coefficient : coefficient * core_norm_estimate;
  }
};

struct InstabilityReport {
  double norm_r = 0.0;
  double norm_r_inv = 0.0;
  double condition_estimate = 0.0;
  bool flagged = false;
  double threshold = kDetectThreshold;
};

// The factored epsilon-pseudoinverse of the (r+l) x r core M = Y^T A X,
// kept as M_eps^+ = Lp * Q1^T where Q1 has orthonormal columns and Lp is
// applied through triangular solves (never inverted explicitly).
struct CoreFactor {
  CorePath path = CorePath::PlainQr;
  Index rows = 0;   // r + l
  Index cols = 0;   // r
  Index rank = 0;   // numerical rank k (= cols for PlainQr/DiagPerturb)
  double epsilon_used = 0.0;

  DenseMatrix q1;  // (r+l) x k, orthonormal
  // PlainQr / DiagPerturb: Lp = R^-1 with R = r_upper (k = cols).
  DenseMatrix r_upper;
  // SvdTruncate: Lp = V1 * diag(1/sigma1), stored explicitly (cols x k).
  DenseMatrix v_sigma_inv;
  // RrqrTruncate: Lp = Pi * Q2 * R2^-T; perm[t] is the source column of pivot t.
  std::vector<Index> perm;
  DenseMatrix q2;  // cols x k
  DenseMatrix r2;  // k x k upper triangular

  // Q1^T * T : (r+l) x c -> k x c.
  DenseMatrix project(const DenseMatrix& t) const;
  // Lp * Z : k x c -> cols x c.
  DenseMatrix left_factor_times(const DenseMatrix& z) const;
  // Z * Lp : p x k <- p x cols ... i.e. returns Z * Lp with Z (p x cols).
  DenseMatrix times_left_factor(const DenseMatrix& z) const;
  // Full application M_eps^+ * T = Lp * (Q1^T T).
  DenseMatrix pinv_times(const DenseMatrix& t) const;
  // Dense cols x rows materialization of the applicator (tests/oracles).
  DenseMatrix materialize_pinv() const;

  Index memory_entries() const {
    return q1.size() + r_upper.size() + v_sigma_inv.size() + q2.size() + r2.size() +
           static_cast<Index>(perm.size());
  }
};

// Thin QR core; errors on an exact zero diagonal.
CoreFactor build_core_plain(const DenseMatrix& m);

// Epsilon-truncated cores. SvdTruncate keeps singular values > eps exactly
// per the epsilon-pseudoinverse definition; RrqrTruncate drops the trailing
// pivoted block with |R_ii| < eps and refactors R1^T = Q2 R2; DiagPerturb
// raises |R_ii| < eps to sign(R_ii)*eps.
CoreFactor build_core_truncated(const DenseMatrix& m, double epsilon, CorePath path);

// Power-method instability probe: flagged iff normR*normRinv*u > threshold.
// Overflow in the solves maps to flagged = true.
InstabilityReport detect(const DenseMatrix& r, double threshold = kDetectThreshold,
                         int iters = kDetectIters);

struct FallbackResult {
  CoreFactor core;
  InstabilityReport report;
  bool switched = false;
};

// Plain core unless detect flags it (or R has an exact zero diagonal), in
// which case the RrqrTruncate path is used with epsilon from the policy.
FallbackResult core_with_fallback(const DenseMatrix& m, const EpsilonPolicy& policy,
                                  double threshold = kDetectThreshold);

}  // namespace randlr::stability
