#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "randlr/decomp.hpp"

namespace randlr::eval {

using decomp::Approximant;
using decomp::MatrixHandle;
using decomp::Method;
using sketch::SketchKind;
using stability::EpsilonPolicy;

struct SpectrumSpec {
  enum class Kind { Geometric, AlgebraicPower, Exponential };
  Kind kind = Kind::Geometric;
  double ratio = 0.5;        // Geometric: sigma_i = ratio^(i-1)
  bool endpoints = false;    // Geometric alternative: from sigma_1 to sigma_n
  double sigma_first = 1.0;
  double sigma_last = 1e-15;
  double power_s = 1.0;      // AlgebraicPower: sigma_i = 1 / i^s
  double exp_c = 0.1;        // Exponential: sigma_i = exp(-c i)

  std::vector<double> values(Index n) const;
  std::string to_string() const;
  // "geometric:0.9", "geometric:1:1e-15", "algebraic:1", "exponential:0.1"
  static SpectrumSpec parse(const std::string& text);
};

struct BoundInputs {
  Index r = 0;
  Index r_hat = 0;  // theorem hypotheses require r_hat <= r - 2
  Index ell = 0;
  double tail_f = 0.0;  // ||A - A_rhat||_F
};

// Random test matrix with the prescribed spectrum: A = U S V^T (or Q L Q^T
// when psd) with random orthogonal factors. Haar factors (QR of square
// Gaussians) up to min(m,n) <= 2000; reflector products above that.
DenseMatrix gallery(const SpectrumSpec& spec, Index m, Index n, std::uint64_t seed, bool psd);

// sqrt(sum_{i > r_hat} sigma_i^2) via the dense SVD.
double optimal_error(const DenseMatrix& a, Index r_hat, Index svd_cap = 2000);

// ||A - Ahat||_F without forming an m x n residual: sqrt(||A||^2 - 2<A,Ahat>
// + ||Ahat||^2) with factor-sized contractions; tiny negatives clamped.
double frobenius_error_factored(const MatrixHandle& a, const Approximant& approx);

// Right-hand sides of the expectation bounds (Gaussian sketches).
double bound_hmt(const BoundInputs& b);
double bound_gn(const BoundInputs& b);
double bound_sgn(const BoundInputs& b);  // omits the epsilon_* additive term

// Sharper roundoff-aware heuristic for stabilized GN, evaluated from
// measured (or estimated) HMT errors in both norms. Reported alongside
// results only; never a pass/fail gate.
double bound_sgn_roundoff_heuristic(Index r, Index ell, double hmt_err_f, double hmt_err_2);

// e^2 m / ((m-n)^2 - 1), the second-moment bound for pseudoinverses of
// m x n Gaussians (m - 1 >= n >= 2).
double gauss_pinv_moment_bound(Index m, Index n);

// Leading-constant flop model; logs are base 2 (documented choice).
struct FlopModel {
  double sketch = 0.0;
  double core = 0.0;
  double lower_order = 0.0;  // reported separately, not in total()
  double total() const { return sketch + core; }
};
FlopModel flop_model(Index m, Index n, Index r, Index ell, SketchKind kind);

struct Report {
  std::string method;
  Index m = 0, n = 0, r = 0, ell = 0;
  std::uint64_t seed = 0;
  std::string spectrum;
  double error_f = 0.0;
  double opt_error_f = 0.0;
  double bound = 0.0;           // NaN when not applicable
  bool bound_reference = false;  // non-Gaussian sketch: theory value is reference only
  double wall_ms = 0.0;
  double flops_model = 0.0;
  bool flagged = false;
  std::string path;
  bool ok = true;
  std::string message;
};

struct SweepConfig {
  std::vector<Method> methods;
  std::vector<Index> ranks;
  std::vector<SpectrumSpec> spectra;
  Index m = 0, n = 0;
  std::vector<std::uint64_t> seeds;
  int repetitions = 3;
  SketchKind kind = SketchKind::Gaussian;
  std::optional<Index> ell_fixed;  // default ceil(r/2)
  EpsilonPolicy eps;
  bool fallback = false;
  int power = 2;               // subspace iteration depth
  bool with_bounds = true;     // Gaussian sketches only
  std::uint64_t matrix_seed = 12345;
  bool psd = false;
  Index svd_cap = 2000;        // optimal-error oracle size cap
  bool against_svd = false;    // extra dense-SVD baseline rows
  int jobs = 1;                // concurrent cells (kernels stay single-threaded)
};

// Executes every (spectrum x method x rank x seed) cell; per-cell failures
// are recorded in the report and the sweep continues. Wall time is the
// median of `repetitions` construction timings; errors are deterministic
// given the seeds.
std::vector<Report> run_sweep(const SweepConfig& config);

// Fixed header:
// method,m,n,r,ell,seed,spectrum,error_f,opt_error_f,bound,wall_ms,flops_model,flagged,path
extern const char* kCsvHeader;
void write_csv(std::ostream& os, const std::vector<Report>& reports);
std::vector<Report> read_csv(std::istream& is);
void write_jsonl(std::ostream& os, const std::vector<Report>& reports);

}  // namespace randlr::eval
