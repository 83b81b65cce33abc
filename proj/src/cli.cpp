#include "randlr/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "randlr/eval.hpp"
#include "randlr/io.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace randlr::cli {

namespace {

using nlohmann::json;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RANDLR_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw IoError("RANDLR_SEED is not an integer");
    }
  }
  return 20240816ull;
}

struct GallerySpec {
  eval::SpectrumSpec spectrum;
  Index m = 0, n = 0;
  bool psd = false;
  std::uint64_t seed = 1;
};

// "spectrum=geometric:0.9,n=2000[,m=...][,psd=1][,seed=...]"
GallerySpec parse_gallery(const std::string& text) {
  GallerySpec g;
  bool have_spectrum = false, have_n = false;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw IoError("gallery: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    if (key == "spectrum") {
      g.spectrum = eval::SpectrumSpec::parse(val);
      have_spectrum = true;
    } else if (key == "n") {
      g.n = std::stoll(val);
      have_n = true;
    } else if (key == "m") {
      g.m = std::stoll(val);
    } else if (key == "psd") {
      g.psd = val == "1" || val == "true";
    } else if (key == "seed") {
      g.seed = std::stoull(val);
    } else {
      throw IoError("gallery: unknown key '" + key + "'");
    }
  }
  if (!have_spectrum || !have_n) throw IoError("gallery: spectrum= and n= are required");
  if (g.m == 0) g.m = g.n;
  return g;
}

void print_summary(const json& j, bool pretty) {
  if (!pretty) {
    std::cout << j.dump() << "\n";
    return;
  }
  std::size_t w = 0;
  for (auto it = j.begin(); it != j.end(); ++it) w = std::max(w, it.key().size());
  for (auto it = j.begin(); it != j.end(); ++it)
    std::cout << "  " << it.key() << std::string(w - it.key().size() + 2, ' ')
              << (it->is_string() ? it->get<std::string>() : it->dump()) << "\n";
}

// Triangular data for detect(), per core path.
DenseMatrix core_triangular(const stability::CoreFactor& c) {
  switch (c.path) {
    case stability::CorePath::PlainQr:
    case stability::CorePath::DiagPerturb:
      return c.r_upper;
    case stability::CorePath::RrqrTruncate:
      return c.r2;
    case stability::CorePath::SvdTruncate: {
      DenseMatrix d(c.rank, c.rank);
      for (Index j = 0; j < c.rank; ++j) {
        double s = 0.0;
        for (Index i = 0; i < c.v_sigma_inv.rows(); ++i)
          s += c.v_sigma_inv(i, j) * c.v_sigma_inv(i, j);
        d(j, j) = 1.0 / std::sqrt(s);  // column norms of V1*S1^-1 are 1/sigma
      }
      return d;
    }
  }
  throw NumericalError("core_triangular: unreachable");
}

struct ApproximateArgs {
  std::string input, gallery_text, output;
  std::string method = "gn";
  std::string sketch = "gaussian";
  Index rank = 0;
  Index oversample = -1;
  int power = 2;
  std::optional<double> eps_abs;
  double eps_rel = 10.0 * kUnitRoundoff;
  std::string fallback = "off";
  std::string sgn_path = "RRQRTruncate";
  std::uint64_t seed = 0;
  bool have_seed = false;
  bool check_error = false;
  bool updatable = false;
  bool pretty = false;
  int threads = 0;
};

int cmd_approximate(const ApproximateArgs& a) {
  if (a.threads > 0) {
#if defined(_OPENMP)
    omp_set_num_threads(a.threads);
#endif
  }
  const std::uint64_t seed = a.have_seed ? a.seed : default_seed();
  if ((a.input.empty()) == (a.gallery_text.empty()))
    throw IoError("exactly one of --input and --gallery is required");

  io::LoadedMatrix loaded;
  if (!a.input.empty()) {
    loaded = io::read_matrix_market(a.input);
  } else {
    GallerySpec g = parse_gallery(a.gallery_text);
    loaded = io::LoadedMatrix{eval::gallery(g.spectrum, g.m, g.n, g.seed, g.psd)};
  }
  decomp::MatrixHandle ah = loaded.handle();

  const decomp::Method method = decomp::method_from_name(a.method);
  const sketch::SketchKind kind = sketch::kind_from_name(a.sketch);
  const Index ell = a.oversample >= 0 ? a.oversample : decomp::default_oversample(a.rank);
  stability::EpsilonPolicy policy;
  if (a.eps_abs) policy = stability::EpsilonPolicy::absolute(*a.eps_abs);
  else policy.coefficient = a.eps_rel;
  const bool fallback = a.fallback == "on";

  const auto t0 = std::chrono::steady_clock::now();
  decomp::Approximant approx;
  std::optional<update::UpdatableState> state;
  if (a.updatable) {
    if (method != decomp::Method::GnPlain && method != decomp::Method::GnStabilized)
      throw DimensionError("--updatable requires a GN-family method");
    state = update::make_updatable(ah, a.rank, ell, seed, kind, policy);
    approx = update::snapshot(*state);
  } else {
    switch (method) {
      case decomp::Method::Hmt: approx = decomp::hmt(ah, a.rank, 0, seed, kind); break;
      case decomp::Method::SubspaceIter:
        approx = decomp::hmt(ah, a.rank, std::max(1, a.power), seed, kind);
        break;
      case decomp::Method::Nystrom:
        approx = decomp::nystrom_psd(ah, a.rank, seed, kind, policy);
        break;
      case decomp::Method::NystromHmt:
        approx = decomp::nystrom_hmt(ah, a.rank, seed, kind, policy);
        break;
      case decomp::Method::GnPlain:
        approx = fallback ? decomp::gn_with_fallback(ah, a.rank, ell, seed, kind, policy)
                          : decomp::gn_plain(ah, a.rank, ell, seed, kind);
        break;
      case decomp::Method::GnStabilized:
        approx = decomp::gn_stabilized(ah, a.rank, ell, seed, kind, policy,
                                       stability::path_from_name(a.sgn_path));
        break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  if (!a.output.empty()) {
    if (state)
      io::save_container(*state, a.output);
    else
      io::save_container(approx, a.output);
  }

  json summary{{"cmd", "approximate"},
               {"method", decomp::method_name(approx.method)},
               {"m", approx.m},
               {"n", approx.n},
               {"r", approx.r},
               {"ell", approx.ell},
               {"sketch", sketch::kind_name(kind)},
               {"seed", seed},
               {"epsilon_mode",
                policy.mode == stability::EpsilonPolicy::Mode::Relative ? "relative" : "absolute"},
               {"epsilon_coefficient", policy.coefficient},
               {"fallback", fallback},
               {"updatable", a.updatable},
               {"wall_ms", std::chrono::duration<double, std::milli>(t1 - t0).count()},
               {"flops_model",
                eval::flop_model(approx.m, approx.n, approx.r, std::max<Index>(ell, 0), kind)
                    .total()}};
  if (approx.instability) {
    summary["flagged"] = approx.instability->flagged;
    summary["condition_estimate"] = approx.instability->condition_estimate;
  }
  if (approx.is_gn()) summary["core_path"] = stability::path_name(approx.gn().core.path);
  if (approx.psd_warning) summary["psd_warning"] = true;
  if (a.check_error) {
    summary["error_f"] = eval::frobenius_error_factored(ah, approx);
    summary["norm_a_f"] = ah.frobenius();
  }
  if (!a.output.empty()) summary["output"] = a.output;
  print_summary(summary, a.pretty);
  return kExitOk;
}

struct BenchmarkArgs {
  std::string methods = "gn,hmt";
  std::string ranks = "50";
  std::string spectra = "geometric:0.9";
  Index m = 0, n = 0;
  int seeds = 3;
  std::uint64_t seed0 = 0;
  bool have_seed0 = false;
  int reps = 3;
  Index ell = -1;
  std::string sketch = "gaussian";
  bool fallback = false;
  bool psd = false;
  std::optional<double> eps_abs;
  std::string csv_path, jsonl_path;
  bool against_svd = false;
  int jobs = 1;
  bool parallel_kernels = false;
  std::uint64_t matrix_seed = 12345;
  Index svd_cap = 2000;
};

int cmd_benchmark(const BenchmarkArgs& a) {
#if defined(_OPENMP)
  if (!a.parallel_kernels) omp_set_num_threads(1);
#endif
  eval::SweepConfig cfg;
  {
    std::istringstream is(a.methods);
    std::string tok;
    while (std::getline(is, tok, ',')) cfg.methods.push_back(decomp::method_from_name(tok));
  }
  {
    std::istringstream is(a.ranks);
    std::string tok;
    while (std::getline(is, tok, ',')) cfg.ranks.push_back(std::stoll(tok));
  }
  {
    std::istringstream is(a.spectra);
    std::string tok;
    while (std::getline(is, tok, ';')) cfg.spectra.push_back(eval::SpectrumSpec::parse(tok));
  }
  if (a.n <= 0) throw IoError("--n is required");
  cfg.n = a.n;
  cfg.m = a.m > 0 ? a.m : a.n;
  const std::uint64_t s0 = a.have_seed0 ? a.seed0 : default_seed();
  for (int s = 0; s < a.seeds; ++s) cfg.seeds.push_back(s0 + static_cast<std::uint64_t>(s));
  cfg.repetitions = a.reps;
  if (a.ell >= 0) cfg.ell_fixed = a.ell;
  cfg.kind = sketch::kind_from_name(a.sketch);
  cfg.fallback = a.fallback;
  cfg.psd = a.psd;
  if (a.eps_abs) cfg.eps = stability::EpsilonPolicy::absolute(*a.eps_abs);
  cfg.matrix_seed = a.matrix_seed;
  cfg.svd_cap = a.svd_cap;
  cfg.against_svd = a.against_svd;
  cfg.jobs = a.jobs;

  std::vector<eval::Report> reports = eval::run_sweep(cfg);
  if (!a.csv_path.empty()) {
    std::ofstream f(a.csv_path);
    if (!f) throw IoError("cannot write " + a.csv_path);
    eval::write_csv(f, reports);
  }
  if (!a.jsonl_path.empty()) {
    std::ofstream f(a.jsonl_path);
    if (!f) throw IoError("cannot write " + a.jsonl_path);
    eval::write_jsonl(f, reports);
  }
  if (a.csv_path.empty() && a.jsonl_path.empty()) eval::write_csv(std::cout, reports);
  return kExitOk;
}

struct UpdateArgs {
  std::string container, output;
  std::string append_rows, append_cols, add;
  Index increase_rank = 0;
  std::string matrix;  // full matrix for error checks / resampling
  bool check_error = false;
  bool pretty = false;
};

int cmd_update(const UpdateArgs& a) {
  io::Container c = io::load_container(a.container);
  update::UpdatableState st;
  if (c.is_state()) {
    st = std::move(c.state());
  } else {
    // A plain-QR approximant still carries everything needed to resume.
    const decomp::Approximant& ap = c.approximant();
    if (!ap.is_gn() || ap.gn().core.path != stability::CorePath::PlainQr)
      throw IoError("container is not updatable (need a state or a plain-QR GN approximant)");
    st.m = ap.m;
    st.n = ap.n;
    st.r = ap.r;
    st.ell = ap.ell;
    st.seed = ap.seed;
    st.kind = ap.kind;
    st.x.kind = ap.kind;
    st.x.ambient = ap.n;
    st.x.groups.push_back({ap.r, {sketch::generate({ap.kind, ap.n, ap.r, ap.seed, 0})}});
    st.y.kind = ap.kind;
    st.y.ambient = ap.m;
    st.y.groups.push_back(
        {ap.r + ap.ell, {sketch::generate({ap.kind, ap.m, ap.r + ap.ell, ap.seed, 1})}});
    st.f = ap.gn().f;
    st.g = ap.gn().g;
    st.raw_core = kernels::matmul(ap.gn().core.q1, ap.gn().core.r_upper);
    st.next_stream = 2;
  }

  int ops = 0;
  std::string op_name;
  if (!a.append_rows.empty()) {
    io::LoadedMatrix b = io::read_matrix_market(a.append_rows);
    st = update::append_rows(st, b.handle());
    ++ops;
    op_name = "append_rows";
  }
  if (!a.append_cols.empty()) {
    io::LoadedMatrix b = io::read_matrix_market(a.append_cols);
    st = update::append_cols(st, b.handle());
    ++ops;
    op_name = "append_cols";
  }
  if (!a.add.empty()) {
    io::LoadedMatrix e = io::read_matrix_market(a.add);
    st = update::additive_update(st, e.handle());
    ++ops;
    op_name = "additive";
  }
  if (a.increase_rank > 0) {
    if (a.matrix.empty())
      throw IoError("--increase-rank needs --matrix (the one permitted new pass over A)");
    io::LoadedMatrix m = io::read_matrix_market(a.matrix);
    st = update::resample_increase_rank(st, m.handle(), a.increase_rank);
    ++ops;
    op_name = "resample";
  }
  if (ops == 0) throw IoError("no update operation given");

  const std::string out_path = a.output.empty() ? a.container : a.output;
  io::save_container(st, out_path);

  json summary{{"cmd", "update"},      {"op", op_name},   {"m", st.m},
               {"n", st.n},            {"r", st.r},       {"ell", st.ell},
               {"next_stream", st.next_stream},           {"output", out_path}};
  if (a.check_error) {
    if (a.matrix.empty()) throw IoError("--check-error needs --matrix (the updated full matrix)");
    io::LoadedMatrix m = io::read_matrix_market(a.matrix);
    decomp::Approximant ap = update::snapshot(st);
    summary["error_f"] = eval::frobenius_error_factored(m.handle(), ap);
  }
  print_summary(summary, a.pretty);
  return kExitOk;
}

struct CheckArgs {
  std::string container;
  bool fix = false;
  double threshold = stability::kDetectThreshold;
  bool pretty = false;
};

int cmd_check(const CheckArgs& a) {
  io::Container c = io::load_container(a.container);
  DenseMatrix tri;
  std::string where;
  if (c.is_state()) {
    tri = kernels::thin_qr(c.state().raw_core).r;
    where = "state raw core";
  } else {
    if (!c.approximant().is_gn()) throw IoError("check: container holds an orthogonal-form factorization");
    tri = core_triangular(c.approximant().gn().core);
    where = std::string("core path ") + stability::path_name(c.approximant().gn().core.path);
  }
  stability::InstabilityReport rep = stability::detect(tri, a.threshold);

  json summary{{"cmd", "check"},
               {"source", where},
               {"norm_r", rep.norm_r},
               {"norm_r_inv", rep.norm_r_inv},
               {"condition_estimate", rep.condition_estimate},
               {"threshold", rep.threshold},
               {"flagged", rep.flagged}};

  if (a.fix && rep.flagged) {
    if (c.is_state()) {
      // refactor on next snapshot; the stored raw core is untouched
      summary["fix"] = "state cores refactor on snapshot; nothing to rewrite";
    } else {
      decomp::Approximant& ap = c.approximant();
      if (ap.gn().core.path == stability::CorePath::PlainQr) {
        DenseMatrix raw = kernels::matmul(ap.gn().core.q1, ap.gn().core.r_upper);
        stability::EpsilonPolicy policy;
        const double eps = policy.resolve(kernels::estimate_spectral_norm(raw, 10));
        std::get<decomp::GnForm>(ap.form).core =
            stability::build_core_truncated(raw, eps, stability::CorePath::RrqrTruncate);
        ap.method = decomp::Method::GnStabilized;
        io::save_container(ap, a.container);
        summary["fix"] = "rebuilt";
        summary["core_path"] = stability::path_name(ap.gn().core.path);
      } else {
        summary["fix"] = "already stabilized";
      }
    }
  }
  print_summary(summary, a.pretty);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"randomized low-rank approximation toolkit"};
  app.require_subcommand(1);

  ApproximateArgs aa;
  CLI::App* ap = app.add_subcommand("approximate", "compute one low-rank approximation");
  ap->add_option("--input", aa.input, "Matrix Market input file");
  ap->add_option("--gallery", aa.gallery_text, "synthetic input, e.g. spectrum=geometric:0.9,n=2000");
  ap->add_option("--method", aa.method)
      ->check(CLI::IsMember({"hmt", "nystrom", "nystrom-hmt", "gn", "sgn", "subspace"}));
  ap->add_option("--rank", aa.rank)->required();
  ap->add_option("--oversample", aa.oversample, "default ceil(r/2) for GN methods");
  ap->add_option("--power", aa.power, "subspace iteration depth");
  ap->add_option("--sketch", aa.sketch)->check(CLI::IsMember({"gaussian", "dct", "countsketch"}));
  double eps_abs_val = 0.0;
  CLI::Option* eps_opt = ap->add_option("--epsilon", eps_abs_val, "absolute truncation epsilon");
  ap->add_option("--epsilon-rel", aa.eps_rel, "relative epsilon coefficient (default 10u)");
  std::uint64_t seed_val = 0;
  CLI::Option* seed_opt = ap->add_option("--seed", seed_val, "RNG seed (default $RANDLR_SEED)");
  ap->add_option("--fallback", aa.fallback)->check(CLI::IsMember({"on", "off"}));
  ap->add_option("--sgn-path", aa.sgn_path)
      ->check(CLI::IsMember({"SVDTruncate", "RRQRTruncate", "DiagPerturb"}));
  ap->add_flag("--check-error", aa.check_error, "report the factored error estimate");
  ap->add_flag("--updatable", aa.updatable, "write a resumable state container");
  ap->add_option("--output", aa.output, "container path");
  ap->add_flag("--pretty", aa.pretty);
  ap->add_option("--threads", aa.threads, "kernel threads (default: library choice)");

  BenchmarkArgs ba;
  CLI::App* bp = app.add_subcommand("benchmark", "run a sweep and emit CSV/JSONL");
  bp->add_option("--methods", ba.methods, "comma list: hmt,nystrom,nystrom-hmt,gn,sgn,subspace");
  bp->add_option("--ranks", ba.ranks, "comma list of ranks");
  bp->add_option("--spectra", ba.spectra, "semicolon list of spectrum specs");
  bp->add_option("--n", ba.n)->required();
  bp->add_option("--m", ba.m);
  bp->add_option("--seeds", ba.seeds, "number of sketch seeds per cell");
  std::uint64_t bseed = 0;
  CLI::Option* bseed_opt = bp->add_option("--seed", bseed, "first sketch seed");
  bp->add_option("--reps", ba.reps, "wall-time repetitions (median reported)");
  bp->add_option("--ell", ba.ell, "fixed oversampling (default ceil(r/2))");
  bp->add_option("--sketch", ba.sketch)->check(CLI::IsMember({"gaussian", "dct", "countsketch"}));
  bp->add_flag("--fallback", ba.fallback, "GN cells use the detect-and-switch fix");
  bp->add_flag("--psd", ba.psd, "PSD gallery (required for nystrom methods)");
  double beps = 0.0;
  CLI::Option* beps_opt = bp->add_option("--epsilon", beps, "absolute SGN epsilon");
  bp->add_option("--csv", ba.csv_path);
  bp->add_option("--jsonl", ba.jsonl_path);
  bp->add_flag("--against-svd", ba.against_svd, "add dense truncated-SVD baseline rows");
  bp->add_option("--jobs", ba.jobs, "concurrent cells; kernels stay single-threaded");
  bp->add_flag("--parallel-kernels", ba.parallel_kernels, "let kernels use OpenMP inside cells");
  bp->add_option("--matrix-seed", ba.matrix_seed);
  bp->add_option("--svd-cap", ba.svd_cap, "optimal-error oracle size cap");

  UpdateArgs ua;
  CLI::App* up = app.add_subcommand("update", "apply a single-pass update to a container");
  up->add_option("--container", ua.container)->required();
  up->add_option("--append-rows", ua.append_rows, "Matrix Market block to append below");
  up->add_option("--append-cols", ua.append_cols, "Matrix Market block to append at the right");
  up->add_option("--add", ua.add, "Matrix Market additive perturbation");
  up->add_option("--increase-rank", ua.increase_rank, "resample delta_r fresh columns");
  up->add_option("--matrix", ua.matrix, "full matrix (for --increase-rank / --check-error)");
  up->add_flag("--check-error", ua.check_error);
  up->add_option("--output", ua.output, "defaults to rewriting the input container");
  up->add_flag("--pretty", ua.pretty);

  CheckArgs ca;
  CLI::App* cp = app.add_subcommand("check", "instability probe for a stored core");
  cp->add_option("--container", ca.container)->required();
  cp->add_flag("--fix", ca.fix, "rebuild a flagged plain core via the SGN path");
  cp->add_option("--threshold", ca.threshold);
  cp->add_flag("--pretty", ca.pretty);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return kExitOk;
    }
    std::cerr << e.what() << "\n";
    return kExitArgs;
  }

  try {
    if (ap->parsed()) {
      if (*eps_opt) aa.eps_abs = eps_abs_val;
      if (*seed_opt) {
        aa.seed = seed_val;
        aa.have_seed = true;
      }
      return cmd_approximate(aa);
    }
    if (bp->parsed()) {
      if (*beps_opt) ba.eps_abs = beps;
      if (*bseed_opt) {
        ba.seed0 = bseed;
        ba.have_seed0 = true;
      }
      return cmd_benchmark(ba);
    }
    if (up->parsed()) return cmd_update(ua);
    if (cp->parsed()) return cmd_check(ca);
    return kExitArgs;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDims;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDims;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace randlr::cli
