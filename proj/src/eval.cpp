#include "randlr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "randlr/rng.hpp"

namespace randlr::eval {

std::vector<double> SpectrumSpec::values(Index n) const {
  std::vector<double> s(n);
  switch (kind) {
    case Kind::Geometric: {
      double rho = ratio;
      if (endpoints) rho = n > 1 ? std::pow(sigma_last / sigma_first, 1.0 / double(n - 1)) : 1.0;
      double v = endpoints ? sigma_first : 1.0;
      for (Index i = 0; i < n; ++i) {
        s[i] = v;
        v *= rho;
      }
      break;
    }
    case Kind::AlgebraicPower:
      for (Index i = 0; i < n; ++i) s[i] = 1.0 / std::pow(double(i + 1), power_s);
      break;
    case Kind::Exponential:
      for (Index i = 0; i < n; ++i) s[i] = std::exp(-exp_c * double(i + 1));
      break;
  }
  for (Index i = 1; i < n; ++i)
    if (s[i] > s[i - 1]) throw DimensionError("SpectrumSpec: values must be non-increasing");
  if (n > 0 && !(s[n - 1] > 0.0)) throw DimensionError("SpectrumSpec: values must stay positive");
  return s;
}

std::string SpectrumSpec::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Geometric:
      if (endpoints)
        os << "geometric:" << sigma_first << ":" << sigma_last;
      else
        os << "geometric:" << ratio;
      break;
    case Kind::AlgebraicPower: os << "algebraic:" << power_s; break;
    case Kind::Exponential: os << "exponential:" << exp_c; break;
  }
  return os.str();
}

SpectrumSpec SpectrumSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  SpectrumSpec spec;
  if (parts[0] == "geometric") {
    spec.kind = Kind::Geometric;
    if (parts.size() == 2) {
      spec.ratio = std::stod(parts[1]);
    } else if (parts.size() == 3) {
      spec.endpoints = true;
      spec.sigma_first = std::stod(parts[1]);
      spec.sigma_last = std::stod(parts[2]);
    } else {
      throw IoError("spectrum: geometric takes :ratio or :first:last");
    }
  } else if (parts[0] == "algebraic" && parts.size() == 2) {
    spec.kind = Kind::AlgebraicPower;
    spec.power_s = std::stod(parts[1]);
  } else if (parts[0] == "exponential" && parts.size() == 2) {
    spec.kind = Kind::Exponential;
    spec.exp_c = std::stod(parts[1]);
  } else {
    throw IoError("unknown spectrum spec: " + text);
  }
  return spec;
}

namespace {

constexpr Index kHaarCap = 2000;
constexpr int kReflectors = 16;

DenseMatrix gaussian_matrix(Index m, Index n, std::uint64_t seed, std::uint64_t stream) {
  rng::Counter gen(seed, stream);
  DenseMatrix a(m, n);
  for (Index k = 0; k < m * n; ++k) a.data()[k] = gen.gaussian_at(k);
  return a;
}

// Applies q random Householder reflectors (left side) in place.
void scramble_left(DenseMatrix& a, std::uint64_t seed, std::uint64_t stream) {
  rng::Counter gen(seed, stream);
  const Index m = a.rows();
  std::vector<double> v(m);
  std::uint64_t ctr = 0;
  for (int refl = 0; refl < kReflectors; ++refl) {
    double norm2 = 0.0;
    for (Index i = 0; i < m; ++i) {
      v[i] = gen.gaussian_at(ctr++);
      norm2 += v[i] * v[i];
    }
    const double beta = 2.0 / norm2;
    for (Index j = 0; j < a.cols(); ++j) {
      double* col = a.col(j);
      double dot = 0.0;
      for (Index i = 0; i < m; ++i) dot += v[i] * col[i];
      dot *= beta;
      for (Index i = 0; i < m; ++i) col[i] -= dot * v[i];
    }
  }
}

void scramble_right(DenseMatrix& a, std::uint64_t seed, std::uint64_t stream) {
  rng::Counter gen(seed, stream);
  const Index n = a.cols();
  std::vector<double> v(n);
  std::uint64_t ctr = 0;
  for (int refl = 0; refl < kReflectors; ++refl) {
    double norm2 = 0.0;
    for (Index j = 0; j < n; ++j) {
      v[j] = gen.gaussian_at(ctr++);
      norm2 += v[j] * v[j];
    }
    const double beta = 2.0 / norm2;
    // row-wise: a <- a (I - beta v v^T)
    std::vector<double> av(a.rows(), 0.0);
    for (Index j = 0; j < n; ++j) {
      const double* col = a.col(j);
      for (Index i = 0; i < a.rows(); ++i) av[i] += col[i] * v[j];
    }
    for (Index i = 0; i < a.rows(); ++i) av[i] *= beta;
    for (Index j = 0; j < n; ++j) {
      double* col = a.col(j);
      const double vj = v[j];
      for (Index i = 0; i < a.rows(); ++i) col[i] -= av[i] * vj;
    }
  }
}

}  // namespace

DenseMatrix gallery(const SpectrumSpec& spec, Index m, Index n, std::uint64_t seed, bool psd) {
  if (m < 1 || n < 1) throw DimensionError("gallery: invalid dimensions");
  if (psd && m != n) throw DimensionError("gallery: psd requires a square matrix");
  const Index k = std::min(m, n);
  std::vector<double> sv = spec.values(k);

  if (k <= kHaarCap) {
    DenseMatrix u = kernels::thin_qr(gaussian_matrix(m, k, seed, 100)).q;
    DenseMatrix v = psd ? u : kernels::thin_qr(gaussian_matrix(n, k, seed, 101)).q;
    DenseMatrix us = u;
    for (Index j = 0; j < k; ++j) {
      double* col = us.col(j);
      for (Index i = 0; i < m; ++i) col[i] *= sv[j];
    }
    DenseMatrix a(m, n);
    // A = (U S) V^T
    for (Index j = 0; j < n; ++j) {
      double* aj = a.col(j);
      for (Index t = 0; t < k; ++t) {
        const double vjt = v(j, t);
        if (vjt == 0.0) continue;
        const double* ut = us.col(t);
        for (Index i = 0; i < m; ++i) aj[i] += ut[i] * vjt;
      }
    }
    return a;
  }

  // Large path: start from the diagonal and scramble with reflector
  // products; exact orthogonal invariance keeps the spectrum.
  DenseMatrix a(m, n);
  for (Index i = 0; i < k; ++i) a(i, i) = sv[i];
  if (psd) {
    // Q L Q^T needs the same reflectors on both sides.
    scramble_left(a, seed, 100);
    DenseMatrix at = transpose(a);
    scramble_left(at, seed, 100);
    return transpose(at);
  }
  scramble_left(a, seed, 100);
  scramble_right(a, seed, 101);
  return a;
}

double optimal_error(const DenseMatrix& a, Index r_hat, Index svd_cap) {
  if (std::max(a.rows(), a.cols()) > svd_cap)
    throw DimensionError("optimal_error: matrix exceeds the SVD size cap");
  if (r_hat < 0) throw DimensionError("optimal_error: r_hat must be >= 0");
  std::vector<double> sv = kernels::svd_values(a);
  double s = 0.0;
  for (Index i = r_hat; i < static_cast<Index>(sv.size()); ++i) s += sv[i] * sv[i];
  return std::sqrt(s);
}

double frobenius_error_factored(const MatrixHandle& a, const Approximant& approx) {
  const double a2 = a.frobenius() * a.frobenius();
  double inner = 0.0, ahat2 = 0.0;
  if (approx.is_gn()) {
    const decomp::GnForm& g = approx.gn();
    // <A, Ahat> = trace(Lp Q1^T (G A^T F)) = trace(core^+ (G (A^T F)))
    DenseMatrix atf = a.transpose_times(g.f);                    // n x r
    DenseMatrix gat = kernels::matmul(g.g, atf);                 // (r+l) x r
    DenseMatrix t3 = g.core.pinv_times(gat);                     // r x r
    for (Index i = 0; i < t3.rows(); ++i) inner += t3(i, i);
    // ||Ahat||^2 = <L^T L, R R^T> with L = F Lp, R = Q1^T G
    DenseMatrix l = g.core.times_left_factor(g.f);               // m x k
    DenseMatrix r = g.core.project(g.g);                         // k x n
    DenseMatrix ltl = kernels::matmul(l, l, true);               // k x k
    DenseMatrix rt = transpose(r);
    DenseMatrix rrt = kernels::matmul(rt, rt, true);             // k x k
    for (Index j = 0; j < ltl.cols(); ++j)
      for (Index i = 0; i < ltl.rows(); ++i) ahat2 += ltl(i, j) * rrt(i, j);
  } else {
    const decomp::RangeForm& rf = approx.range();
    DenseMatrix qu = kernels::matmul(rf.q, rf.u0);               // m x r
    DenseMatrix p = a.transpose_times(qu);                       // n x r
    // trace(S0 (QU)^T A V0) = sum_i s_i (P^T V0)_ii with V0 = v0t^T
    for (Index i = 0; i < static_cast<Index>(rf.sigma0.size()); ++i) {
      double d = 0.0;
      for (Index j = 0; j < p.rows(); ++j) d += p(j, i) * rf.v0t(i, j);
      inner += rf.sigma0[i] * d;
      ahat2 += rf.sigma0[i] * rf.sigma0[i];
    }
  }
  const double err2 = std::max(0.0, a2 - 2.0 * inner + ahat2);
  return std::sqrt(err2);
}

namespace {

void check_bound_inputs(const BoundInputs& b, Index min_ell) {
  if (b.r_hat > b.r - 2)
    throw DimensionError("bound: theorem hypotheses require r_hat <= r - 2");
  if (b.r_hat < 0 || b.tail_f < 0.0) throw DimensionError("bound: invalid inputs");
  if (b.ell < min_ell) throw DimensionError("bound: oversampling too small for the theorem");
}

}  // namespace

double bound_hmt(const BoundInputs& b) {
  check_bound_inputs(b, 0);
  return std::sqrt(1.0 + double(b.r) / double(b.r - b.r_hat - 1)) * b.tail_f;
}

double bound_gn(const BoundInputs& b) {
  check_bound_inputs(b, 2);
  return std::sqrt(1.0 + double(b.r + b.ell) / double(b.ell - 1)) * bound_hmt(b);
}

double bound_sgn(const BoundInputs& b) {
  check_bound_inputs(b, 1);
  return 2.0 * std::sqrt(std::exp(1.0)) * double(b.r + b.ell) / double(b.ell) *
         std::sqrt(1.0 + double(b.r) / double(b.r - b.r_hat - 1)) * b.tail_f;
}

double bound_sgn_roundoff_heuristic(Index r, Index ell, double hmt_err_f, double hmt_err_2) {
  if (r < 1 || ell < 1) throw DimensionError("bound_sgn_roundoff_heuristic: need r, ell >= 1");
  const double srl = std::sqrt(double(r + ell)), sr = std::sqrt(double(r));
  return (srl + sr) / (srl - sr) * hmt_err_f +
         2.0 * std::sqrt(double(r) * double(r + ell)) / (srl - sr) * hmt_err_2;
}

double gauss_pinv_moment_bound(Index m, Index n) {
  if (!(m - 1 >= n && n >= 2)) throw DimensionError("gauss_pinv_moment_bound: need m-1 >= n >= 2");
  const double gap = double(m - n);
  if (!(gap * gap > 1.0)) throw DimensionError("gauss_pinv_moment_bound: need (m-n)^2 > 1");
  const double e = std::exp(1.0);
  return e * e * double(m) / (gap * gap - 1.0);
}

FlopModel flop_model(Index m, Index n, Index r, Index ell, SketchKind kind) {
  if (m < 1 || n < 1 || r < 1 || ell < 0) throw DimensionError("flop_model: invalid dimensions");
  FlopModel f;
  const double md = double(m), nd = double(n), rd = double(r), ld = double(ell);
  // QR-based pseudoinverse: 2(r+l)r^2 - (2/3)r^3, computed as an exact
  // rational over 3 so the l = r/2 identity (7/3) r^3 holds bitwise.
  f.core = (6.0 * (rd + ld) * rd * rd - 2.0 * rd * rd * rd) / 3.0;
  switch (kind) {
    case SketchKind::SubsampledDct:
      f.sketch = 10.0 * md * nd * std::log2(nd);
      f.lower_order = 5.0 * nd * rd * std::log2(nd);
      break;
    case SketchKind::Gaussian:
      f.sketch = 2.0 * md * nd * rd + 2.0 * md * nd * (rd + ld);
      f.core += 2.0 * nd * (rd + ld) * rd;
      break;
    case SketchKind::CountSketch:
      f.sketch = 4.0 * md * nd;
      f.core += 2.0 * nd * (rd + ld) * rd;
      break;
  }
  return f;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k == 0 ? 0.0 : (k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]));
}

Index report_r_hat(Index r) { return std::max<Index>(1, r - std::max<Index>(2, (r + 3) / 4)); }

}  // namespace

const char* kCsvHeader =
    "method,m,n,r,ell,seed,spectrum,error_f,opt_error_f,bound,wall_ms,flops_model,flagged,path";

std::vector<Report> run_sweep(const SweepConfig& config) {
  std::vector<Report> out;
  using clock = std::chrono::steady_clock;

  for (const SpectrumSpec& spec : config.spectra) {
    DenseMatrix a = gallery(spec, config.m, config.n, config.matrix_seed, config.psd);
    MatrixHandle ah(a);
    std::vector<double> sv;
    if (std::max(config.m, config.n) <= config.svd_cap) sv = kernels::svd_values(a);
    auto tail = [&](Index k) {
      double s = 0.0;
      for (Index i = k; i < static_cast<Index>(sv.size()); ++i) s += sv[i] * sv[i];
      return std::sqrt(s);
    };

    struct Cell {
      Index r;
      Index ell;
      std::uint64_t seed;
      Method method;
    };
    std::vector<Cell> cells;
    for (Index r : config.ranks) {
      const Index ell = config.ell_fixed ? *config.ell_fixed : decomp::default_oversample(r);
      for (std::uint64_t seed : config.seeds)
        for (Method method : config.methods) cells.push_back({r, ell, seed, method});
    }

    auto run_cell = [&](const Cell& cell) {
      const auto [r, ell, seed, method] = cell;
      Report rep;
      rep.method = decomp::method_name(method);
      rep.m = config.m;
      rep.n = config.n;
      rep.r = r;
      rep.ell = (method == Method::GnPlain || method == Method::GnStabilized) ? ell : 0;
      rep.seed = seed;
      rep.spectrum = spec.to_string();
      rep.bound = std::numeric_limits<double>::quiet_NaN();
      try {
        std::vector<double> times;
        Approximant approx;
        for (int rep_i = 0; rep_i < std::max(1, config.repetitions); ++rep_i) {
          const auto t0 = clock::now();
          switch (method) {
            case Method::Hmt: approx = decomp::hmt(ah, r, 0, seed, config.kind); break;
            case Method::SubspaceIter:
              approx = decomp::hmt(ah, r, config.power, seed, config.kind);
              break;
            case Method::Nystrom:
              approx = decomp::nystrom_psd(ah, r, seed, config.kind, config.eps);
              break;
            case Method::NystromHmt:
              approx = decomp::nystrom_hmt(ah, r, seed, config.kind, config.eps);
              break;
            case Method::GnPlain:
              approx = config.fallback
                           ? decomp::gn_with_fallback(ah, r, ell, seed, config.kind, config.eps)
                           : decomp::gn_plain(ah, r, ell, seed, config.kind);
              break;
            case Method::GnStabilized:
              approx = decomp::gn_stabilized(ah, r, ell, seed, config.kind, config.eps);
              break;
          }
          const auto t1 = clock::now();
          times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        rep.wall_ms = median_of(times);
        rep.error_f = frobenius_error_factored(ah, approx);
        if (!sv.empty()) rep.opt_error_f = tail(r);
        rep.flops_model = flop_model(config.m, config.n, r, ell, config.kind).total();
        if (approx.instability) rep.flagged = approx.instability->flagged;
        rep.path = approx.is_gn() ? stability::path_name(approx.gn().core.path) : "Orth";
        // Gaussian sketches satisfy the theorems' hypotheses; for other
        // kinds the same value is reported as reference only (flagged in
        // the JSONL output).
        if (config.with_bounds && !sv.empty()) {
          const Index rh = report_r_hat(r);
          if (rh <= r - 2) {
            BoundInputs bi{r, rh, ell, tail(rh)};
            if (method == Method::Hmt || method == Method::SubspaceIter ||
                method == Method::NystromHmt) {
              rep.bound = bound_hmt(bi);
            } else if (method == Method::GnPlain && ell >= 2) {
              rep.bound = bound_gn(bi);
            } else if (method == Method::GnStabilized && ell >= 1) {
              rep.bound = bound_sgn(bi);
            }
            rep.bound_reference = config.kind != SketchKind::Gaussian;
          }
        }
      } catch (const std::exception& ex) {
        rep.ok = false;
        rep.message = ex.what();
        rep.error_f = std::numeric_limits<double>::quiet_NaN();
        rep.path = "error";
      }
      return rep;
    };

    std::vector<Report> spectrum_reports(cells.size());
    if (config.jobs <= 1) {
      for (std::size_t c = 0; c < cells.size(); ++c) spectrum_reports[c] = run_cell(cells[c]);
    } else {
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          const std::size_t c = next.fetch_add(1);
          if (c >= cells.size()) return;
          spectrum_reports[c] = run_cell(cells[c]);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < config.jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (auto& rep : spectrum_reports) out.push_back(std::move(rep));

    if (config.against_svd && !sv.empty()) {
      for (Index r : config.ranks) {
        Report rep;
        rep.method = "svd";
        rep.m = config.m;
        rep.n = config.n;
        rep.r = r;
        rep.ell = 0;
        rep.seed = 0;
        rep.spectrum = spec.to_string();
        rep.bound = std::numeric_limits<double>::quiet_NaN();
        const auto t0 = clock::now();
        kernels::SVDFactors f = kernels::svd(a);
        const auto t1 = clock::now();
        (void)f;
        rep.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rep.error_f = tail(r);
        rep.opt_error_f = tail(r);
        rep.flops_model = 0.0;
        rep.path = "Dense";
        out.push_back(std::move(rep));
      }
    }
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<Report>& reports) {
  os << kCsvHeader << "\n";
  for (const Report& r : reports) {
    os << r.method << ',' << r.m << ',' << r.n << ',' << r.r << ',' << r.ell << ',' << r.seed
       << ',' << r.spectrum << ',';
    os.precision(17);
    os << r.error_f << ',' << r.opt_error_f << ',' << r.bound << ',' << r.wall_ms << ','
       << r.flops_model << ',' << (r.flagged ? 1 : 0) << ',' << r.path << "\n";
  }
}

std::vector<Report> read_csv(std::istream& is) {
  std::vector<Report> out;
  std::string line;
  if (!std::getline(is, line)) throw IoError("csv: empty input");
  if (line != kCsvHeader) throw IoError("csv: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    if (f.size() != 14) throw IoError("csv: wrong column count");
    Report r;
    r.method = f[0];
    r.m = std::stoll(f[1]);
    r.n = std::stoll(f[2]);
    r.r = std::stoll(f[3]);
    r.ell = std::stoll(f[4]);
    r.seed = std::stoull(f[5]);
    r.spectrum = f[6];
    r.error_f = std::stod(f[7]);
    r.opt_error_f = std::stod(f[8]);
    r.bound = std::stod(f[9]);
    r.wall_ms = std::stod(f[10]);
    r.flops_model = std::stod(f[11]);
    r.flagged = f[12] == "1";
    r.path = f[13];
    out.push_back(std::move(r));
  }
  return out;
}

void write_jsonl(std::ostream& os, const std::vector<Report>& reports) {
  for (const Report& r : reports) {
    nlohmann::json j{{"method", r.method}, {"m", r.m},         {"n", r.n},
                     {"r", r.r},           {"ell", r.ell},     {"seed", r.seed},
                     {"spectrum", r.spectrum},                 {"error_f", r.error_f},
                     {"opt_error_f", r.opt_error_f},           {"wall_ms", r.wall_ms},
                     {"flops_model", r.flops_model},           {"flagged", r.flagged},
                     {"path", r.path},     {"ok", r.ok}};
    if (std::isnan(r.bound)) {
      j["bound"] = nullptr;
    } else {
      j["bound"] = r.bound;
      j["bound_reference"] = r.bound_reference;
    }
    if (!r.message.empty()) j["message"] = r.message;
    os << j.dump() << "\n";
  }
}

}  // namespace randlr::eval
