#include "randlr/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace randlr::io {

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts are unsupported");

namespace {

using nlohmann::json;

[[noreturn]] void mm_fail(const std::string& kind, long line, const std::string& detail) {
  throw IoError("matrix market: " + kind + " at line " + std::to_string(line) + ": " + detail);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_real(const std::string& tok, long line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    mm_fail("bad numeric value", line, tok);
  }
}

Index parse_index(const std::string& tok, long line) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    mm_fail("bad integer value", line, tok);
  }
}

}  // namespace

LoadedMatrix read_matrix_market_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  long lineno = 0;

  if (!std::getline(is, line)) mm_fail("malformed header", 1, "empty file");
  ++lineno;
  std::vector<std::string> head = split_ws(line);
  if (head.size() != 5 || head[0] != "%%MatrixMarket" || head[1] != "matrix")
    mm_fail("malformed header", lineno, line);
  const std::string& format = head[2];
  const std::string& field = head[3];
  const std::string& symmetry = head[4];
  if (format != "coordinate" && format != "array")
    mm_fail("malformed header", lineno, "unknown format '" + format + "'");
  if (field != "real" && field != "integer")
    mm_fail("non-real field", lineno, "'" + field + "' is not supported");
  if (symmetry != "general" && symmetry != "symmetric")
    mm_fail("malformed header", lineno, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  // skip comments / blanks to the size line
  std::vector<std::string> size_tok;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    size_tok = split_ws(line);
    if (size_tok.empty()) continue;
    break;
  }
  if (size_tok.empty()) mm_fail("malformed header", lineno, "missing size line");

  if (format == "coordinate") {
    if (size_tok.size() != 3) mm_fail("malformed header", lineno, "size line needs rows cols nnz");
    const Index rows = parse_index(size_tok[0], lineno);
    const Index cols = parse_index(size_tok[1], lineno);
    const Index nnz = parse_index(size_tok[2], lineno);
    if (rows < 0 || cols < 0 || nnz < 0) mm_fail("malformed header", lineno, "negative size");
    if (symmetric && rows != cols) mm_fail("malformed header", lineno, "symmetric must be square");
    std::vector<std::pair<std::pair<Index, Index>, double>> trips;
    trips.reserve(nnz);
    Index seen = 0;
    while (seen < nnz) {
      if (!std::getline(is, line)) mm_fail("malformed header", lineno, "truncated entry list");
      ++lineno;
      if (!line.empty() && line[0] == '%') continue;
      std::vector<std::string> tok = split_ws(line);
      if (tok.empty()) continue;
      if (tok.size() != 3) mm_fail("malformed header", lineno, "entry needs i j value");
      const Index i = parse_index(tok[0], lineno);
      const Index j = parse_index(tok[1], lineno);
      const double v = parse_real(tok[2], lineno);
      if (i < 1 || i > rows || j < 1 || j > cols)
        mm_fail("index out of range", lineno, "(" + tok[0] + ", " + tok[1] + ")");
      trips.push_back({{i - 1, j - 1}, v});
      if (symmetric && i != j) trips.push_back({{j - 1, i - 1}, v});
      ++seen;
    }
    SparseMatrix sm = SparseMatrix::from_triplets(rows, cols, std::move(trips));
    return LoadedMatrix{std::move(sm)};
  }

  // array format
  if (size_tok.size() != 2) mm_fail("malformed header", lineno, "size line needs rows cols");
  const Index rows = parse_index(size_tok[0], lineno);
  const Index cols = parse_index(size_tok[1], lineno);
  if (rows < 0 || cols < 0) mm_fail("malformed header", lineno, "negative size");
  if (symmetric && rows != cols) mm_fail("malformed header", lineno, "symmetric must be square");
  DenseMatrix dm(rows, cols);
  // column-major; symmetric arrays list the lower triangle only
  Index i = 0, j = 0;
  auto advance = [&]() {
    ++i;
    if (i == rows) {
      ++j;
      i = symmetric ? j : 0;
    }
  };
  const Index expected = symmetric ? rows * (rows + 1) / 2 : rows * cols;
  Index seen = 0;
  while (seen < expected) {
    if (!std::getline(is, line)) mm_fail("malformed header", lineno, "truncated value list");
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    for (const std::string& tok : split_ws(line)) {
      if (seen >= expected) mm_fail("malformed header", lineno, "too many values");
      const double v = parse_real(tok, lineno);
      dm(i, j) = v;
      if (symmetric) dm(j, i) = v;
      ++seen;
      advance();
    }
  }
  return LoadedMatrix{std::move(dm)};
}

LoadedMatrix read_matrix_market(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return read_matrix_market_text(buf.str());
}

namespace {

struct BlobWriter {
  std::ofstream f;
  json index = json::array();

  void add(const std::string& name, const DenseMatrix& m) {
    index.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    pending.push_back({name, &m});
  }
  std::vector<std::pair<std::string, const DenseMatrix*>> pending;
};

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

json spec_to_json(const sketch::SketchSpec& s) {
  return {{"kind", sketch::kind_name(s.kind)},
          {"ambient", s.ambient_dim},
          {"dim", s.sketch_dim},
          {"seed", s.seed},
          {"stream", s.stream}};
}

sketch::SketchSpec spec_from_json(const json& j) {
  sketch::SketchSpec s;
  s.kind = sketch::kind_from_name(j.at("kind").get<std::string>());
  s.ambient_dim = j.at("ambient").get<Index>();
  s.sketch_dim = j.at("dim").get<Index>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.stream = j.at("stream").get<std::uint64_t>();
  return s;
}

json composite_to_json(const update::CompositeSketch& c) {
  json groups = json::array();
  for (const auto& g : c.groups) {
    json blocks = json::array();
    for (const auto& b : g.blocks) blocks.push_back(spec_to_json(b.spec));
    groups.push_back({{"width", g.width}, {"blocks", blocks}});
  }
  return {{"kind", sketch::kind_name(c.kind)}, {"ambient", c.ambient}, {"groups", groups}};
}

update::CompositeSketch composite_from_json(const json& j) {
  update::CompositeSketch c;
  c.kind = sketch::kind_from_name(j.at("kind").get<std::string>());
  c.ambient = j.at("ambient").get<Index>();
  for (const auto& gj : j.at("groups")) {
    update::ColumnGroup g;
    g.width = gj.at("width").get<Index>();
    for (const auto& bj : gj.at("blocks")) g.blocks.push_back(sketch::generate(spec_from_json(bj)));
    c.groups.push_back(std::move(g));
  }
  return c;
}

json policy_to_json(const stability::EpsilonPolicy& p) {
  return {{"mode", p.mode == stability::EpsilonPolicy::Mode::Relative ? "relative" : "absolute"},
          {"coefficient", p.coefficient}};
}

stability::EpsilonPolicy policy_from_json(const json& j) {
  stability::EpsilonPolicy p;
  p.mode = j.at("mode").get<std::string>() == "relative"
               ? stability::EpsilonPolicy::Mode::Relative
               : stability::EpsilonPolicy::Mode::Absolute;
  p.coefficient = j.at("coefficient").get<double>();
  return p;
}

json report_to_json(const stability::InstabilityReport& r) {
  return {{"norm_r", r.norm_r},
          {"norm_r_inv", r.norm_r_inv},
          {"condition_estimate", r.condition_estimate},
          {"flagged", r.flagged},
          {"threshold", r.threshold}};
}

stability::InstabilityReport report_from_json(const json& j) {
  stability::InstabilityReport r;
  r.norm_r = j.at("norm_r").get<double>();
  r.norm_r_inv = j.at("norm_r_inv").get<double>();
  r.condition_estimate = j.at("condition_estimate").get<double>();
  r.flagged = j.at("flagged").get<bool>();
  r.threshold = j.at("threshold").get<double>();
  return r;
}

json core_to_json(const stability::CoreFactor& c, BlobWriter& bw) {
  json j{{"path", stability::path_name(c.path)},
         {"rows", c.rows},
         {"cols", c.cols},
         {"rank", c.rank},
         {"epsilon_used", c.epsilon_used},
         {"perm", c.perm}};
  bw.add("core.q1", c.q1);
  bw.add("core.r_upper", c.r_upper);
  bw.add("core.v_sigma_inv", c.v_sigma_inv);
  bw.add("core.q2", c.q2);
  bw.add("core.r2", c.r2);
  return j;
}

void write_container(const std::string& path, json manifest, BlobWriter& bw) {
  const std::string tmp = path + ".tmp";
  bw.f.open(tmp, std::ios::binary | std::ios::trunc);
  if (!bw.f) throw IoError("cannot write " + tmp);
  manifest["blobs"] = bw.index;
  const std::string mtext = manifest.dump();
  bw.f.write(kContainerMagic, 4);
  write_u32(bw.f, kContainerVersion);
  write_u64(bw.f, mtext.size());
  bw.f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& [name, m] : bw.pending) {
    write_u32(bw.f, static_cast<std::uint32_t>(name.size()));
    bw.f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(bw.f, static_cast<std::uint64_t>(m->size()));
    bw.f.write(reinterpret_cast<const char*>(m->data()),
               static_cast<std::streamsize>(sizeof(double) * m->size()));
  }
  bw.f.close();
  if (!bw.f) throw IoError("write failed for " + tmp);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("rename failed for " + path);
}

struct BlobReader {
  std::map<std::string, DenseMatrix> blobs;
  DenseMatrix take(const std::string& name) {
    auto it = blobs.find(name);
    if (it == blobs.end()) throw IoError("container: missing blob " + name);
    DenseMatrix m = std::move(it->second);
    blobs.erase(it);
    return m;
  }
};

stability::CoreFactor core_from_json(const json& j, BlobReader& br) {
  stability::CoreFactor c;
  c.path = stability::path_from_name(j.at("path").get<std::string>());
  c.rows = j.at("rows").get<Index>();
  c.cols = j.at("cols").get<Index>();
  c.rank = j.at("rank").get<Index>();
  c.epsilon_used = j.at("epsilon_used").get<double>();
  c.perm = j.at("perm").get<std::vector<Index>>();
  c.q1 = br.take("core.q1");
  c.r_upper = br.take("core.r_upper");
  c.v_sigma_inv = br.take("core.v_sigma_inv");
  c.q2 = br.take("core.q2");
  c.r2 = br.take("core.r2");
  return c;
}

}  // namespace

void save_container(const decomp::Approximant& approx, const std::string& path) {
  BlobWriter bw;
  json manifest{{"type", "approximant"},
                {"method", decomp::method_name(approx.method)},
                {"m", approx.m},
                {"n", approx.n},
                {"r", approx.r},
                {"ell", approx.ell},
                {"seed", approx.seed},
                {"sketch", sketch::kind_name(approx.kind)},
                {"psd_warning", approx.psd_warning}};
  if (approx.instability) manifest["instability"] = report_to_json(*approx.instability);
  if (approx.is_gn()) {
    manifest["form"] = "gn";
    manifest["core"] = core_to_json(approx.gn().core, bw);
    bw.add("F", approx.gn().f);
    bw.add("G", approx.gn().g);
  } else {
    manifest["form"] = "range";
    manifest["sigma0"] = approx.range().sigma0;
    bw.add("Q", approx.range().q);
    bw.add("U0", approx.range().u0);
    bw.add("V0t", approx.range().v0t);
  }
  write_container(path, std::move(manifest), bw);
}

void save_container(const update::UpdatableState& state, const std::string& path) {
  BlobWriter bw;
  json manifest{{"type", "state"},
                {"m", state.m},
                {"n", state.n},
                {"r", state.r},
                {"ell", state.ell},
                {"seed", state.seed},
                {"sketch", sketch::kind_name(state.kind)},
                {"epsilon", policy_to_json(state.eps)},
                {"x", composite_to_json(state.x)},
                {"y", composite_to_json(state.y)},
                {"next_stream", state.next_stream}};
  bw.add("F", state.f);
  bw.add("G", state.g);
  bw.add("raw_core", state.raw_core);
  write_container(path, std::move(manifest), bw);
}

Container load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kContainerMagic, 4) != 0)
    throw IoError("container: bad magic in " + path);
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!f || version != kContainerVersion)
    throw IoError("container: version mismatch (got " + std::to_string(version) + ", want " +
                  std::to_string(kContainerVersion) + ")");
  std::uint64_t mlen = 0;
  f.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw IoError("container: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(mtext);
  } catch (const json::exception& ex) {
    throw IoError(std::string("container: bad manifest: ") + ex.what());
  }

  BlobReader br;
  json blob_index = manifest.at("blobs");
  for (const auto& entry : blob_index) {
    std::uint32_t nlen = 0;
    f.read(reinterpret_cast<char*>(&nlen), sizeof(nlen));
    std::string name(nlen, '\0');
    f.read(name.data(), nlen);
    std::uint64_t count = 0;
    f.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!f) throw IoError("container: truncated blob header");
    if (name != entry.at("name").get<std::string>())
      throw IoError("container: blob order mismatch at " + name);
    const Index rows = entry.at("rows").get<Index>();
    const Index cols = entry.at("cols").get<Index>();
    if (static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) != count)
      throw IoError("container: blob length inconsistent with manifest for " + name);
    DenseMatrix m(rows, cols);
    f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * count));
    if (!f) throw IoError("container: truncated blob " + name);
    br.blobs.emplace(name, std::move(m));
  }

  const std::string type = manifest.at("type").get<std::string>();
  if (type == "approximant") {
    decomp::Approximant a;
    a.method = decomp::method_from_name(manifest.at("method").get<std::string>());
    a.m = manifest.at("m").get<Index>();
    a.n = manifest.at("n").get<Index>();
    a.r = manifest.at("r").get<Index>();
    a.ell = manifest.at("ell").get<Index>();
    a.seed = manifest.at("seed").get<std::uint64_t>();
    a.kind = sketch::kind_from_name(manifest.at("sketch").get<std::string>());
    a.psd_warning = manifest.at("psd_warning").get<bool>();
    if (manifest.contains("instability")) a.instability = report_from_json(manifest["instability"]);
    if (manifest.at("form").get<std::string>() == "gn") {
      decomp::GnForm gf;
      gf.core = core_from_json(manifest.at("core"), br);
      gf.f = br.take("F");
      gf.g = br.take("G");
      if (gf.f.rows() != a.m || gf.g.cols() != a.n)
        throw IoError("container: factor dimensions disagree with manifest");
      a.form = std::move(gf);
    } else {
      decomp::RangeForm rf;
      rf.sigma0 = manifest.at("sigma0").get<std::vector<double>>();
      rf.q = br.take("Q");
      rf.u0 = br.take("U0");
      rf.v0t = br.take("V0t");
      if (rf.q.rows() != a.m || rf.v0t.cols() != a.n)
        throw IoError("container: factor dimensions disagree with manifest");
      a.form = std::move(rf);
    }
    return Container{std::move(a)};
  }
  if (type != "state") throw IoError("container: unknown type " + type);
  update::UpdatableState st;
  st.m = manifest.at("m").get<Index>();
  st.n = manifest.at("n").get<Index>();
  st.r = manifest.at("r").get<Index>();
  st.ell = manifest.at("ell").get<Index>();
  st.seed = manifest.at("seed").get<std::uint64_t>();
  st.kind = sketch::kind_from_name(manifest.at("sketch").get<std::string>());
  st.eps = policy_from_json(manifest.at("epsilon"));
  st.x = composite_from_json(manifest.at("x"));
  st.y = composite_from_json(manifest.at("y"));
  st.next_stream = manifest.at("next_stream").get<std::uint64_t>();
  st.f = br.take("F");
  st.g = br.take("G");
  st.raw_core = br.take("raw_core");
  if (st.f.rows() != st.m || st.g.cols() != st.n || st.raw_core.rows() != st.r + st.ell ||
      st.raw_core.cols() != st.r)
    throw IoError("container: state dimensions disagree with manifest");
  return Container{std::move(st)};
}

}  // namespace randlr::io
