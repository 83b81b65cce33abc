#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "randlr/io.hpp"

using namespace randlr;
using namespace randlr::io;
using testutil::random_matrix;
using testutil::rel_err;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/randlr_test_") + name;
}

}  // namespace

TEST_CASE("matrix market: array format, column-major") {
  LoadedMatrix lm = read_matrix_market_text(
      "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n");
  REQUIRE(lm.is_dense());
  const DenseMatrix& d = lm.dense();
  CHECK(d(0, 0) == 1.0);
  CHECK(d(1, 0) == 3.0);
  CHECK(d(0, 1) == 2.0);
  CHECK(d(1, 1) == 4.0);
}

TEST_CASE("matrix market: coordinate with one entry") {
  LoadedMatrix lm = read_matrix_market_text(
      "%%MatrixMarket matrix coordinate real general\n%comment\n3 3 1\n2 1 5.0\n");
  REQUIRE(!lm.is_dense());
  const SparseMatrix& s = lm.sparse();
  CHECK(s.nnz() == 1);
  CHECK(s.to_dense()(1, 0) == 5.0);
}

TEST_CASE("matrix market: symmetric coordinate expands to its transpose") {
  LoadedMatrix lm = read_matrix_market_text(
      "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2.0\n2 1 -1.5\n3 2 4.0\n");
  const DenseMatrix d = lm.sparse().to_dense();
  CHECK(rel_err(d, transpose(d)) == 0.0);
  CHECK(d(0, 1) == -1.5);
  CHECK(d(1, 2) == 4.0);
}

TEST_CASE("matrix market: symmetric array expands the lower triangle") {
  LoadedMatrix lm = read_matrix_market_text(
      "%%MatrixMarket matrix array real symmetric\n2 2\n1\n7\n4\n");
  const DenseMatrix& d = lm.dense();
  CHECK(d(0, 1) == 7.0);
  CHECK(d(1, 0) == 7.0);
  CHECK(d(1, 1) == 4.0);
}

TEST_CASE("matrix market: reference corpus accepts 10 well-formed files") {
  const char* good[] = {
      "%%MatrixMarket matrix array real general\n1 1\n3.5\n",
      "%%MatrixMarket matrix array real general\n3 1\n1\n2\n3\n",
      "%%MatrixMarket matrix array real general\n2 3\n1 2\n3 4\n5 6\n",
      "%%MatrixMarket matrix array real symmetric\n3 3\n1\n2\n3\n4\n5\n6\n",
      "%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n",
      "%%MatrixMarket matrix coordinate real general\n2 2 0\n",
      "%%MatrixMarket matrix coordinate real general\n% c\n\n4 5 2\n1 1 1.0\n4 5 -2e3\n",
      "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 1 0.5\n",
      "%%MatrixMarket matrix coordinate integer general\n3 3 1\n3 3 7\n",
      "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 4.25e-3\n",
  };
  for (const char* text : good) CHECK_NOTHROW(read_matrix_market_text(text));
}

TEST_CASE("matrix market: rejects 10 malformed files with declared kinds") {
  struct Bad {
    const char* text;
    const char* what;
  };
  const Bad bad[] = {
      {"", "malformed header"},
      {"%%MatrixMarket tensor array real general\n1 1\n1\n", "malformed header"},
      {"%%MatrixMarket matrix nonsense real general\n1 1\n1\n", "malformed header"},
      {"%%MatrixMarket matrix array complex general\n1 1\n1 0\n", "non-real field"},
      {"%%MatrixMarket matrix array pattern general\n1 1\n", "non-real field"},
      {"%%MatrixMarket matrix array real hermitian\n1 1\n1\n", "malformed header"},
      {"%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", "index out of range"},
      {"%%MatrixMarket matrix coordinate real general\n2 2 1\n1 0 1.0\n", "index out of range"},
      {"%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", "malformed header"},
      {"%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", "malformed header"},
  };
  for (const Bad& b : bad) {
    CHECK_THROWS_WITH_AS(read_matrix_market_text(b.text), doctest::Contains(b.what), IoError);
  }
}

TEST_CASE("matrix market: errors carry line numbers") {
  try {
    read_matrix_market_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n9 1 1.0\n");
    FAIL("expected throw");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("matrix market: file loading and missing files") {
  const std::string path = temp_path("m.mtx");
  {
    std::ofstream f(path);
    f << "%%MatrixMarket matrix array real general\n2 1\n1\n2\n";
  }
  LoadedMatrix lm = read_matrix_market(path);
  CHECK(lm.dense()(1, 0) == 2.0);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_matrix_market(path), IoError);
}

TEST_CASE("container: approximant round trip is bitwise") {
  DenseMatrix a = random_matrix(24, 18, 1);
  decomp::MatrixHandle ah(a);
  const std::string path = temp_path("ap.rlrf");
  for (const decomp::Approximant& ap :
       {decomp::gn_plain(ah, 5, 3, 7), decomp::hmt(ah, 5, 0, 7),
        decomp::gn_stabilized(ah, 5, 3, 7),
        decomp::gn_stabilized(ah, 5, 3, 7, sketch::SketchKind::Gaussian, {},
                              stability::CorePath::SvdTruncate)}) {
    save_container(ap, path);
    Container c = load_container(path);
    REQUIRE(!c.is_state());
    DenseMatrix m1 = decomp::materialize(ap);
    DenseMatrix m2 = decomp::materialize(c.approximant());
    CHECK(frobenius_norm(m1 - m2) == 0.0);  // bitwise
    CHECK(c.approximant().method == ap.method);
  }
  std::remove(path.c_str());
}

TEST_CASE("container: state round trip replays updates reproducibly") {
  DenseMatrix a = random_matrix(26, 20, 2);
  update::UpdatableState st = update::make_updatable(decomp::MatrixHandle(a), 4, 2, 9);
  DenseMatrix b = random_matrix(5, 20, 3, 956);
  st = update::append_rows(st, decomp::MatrixHandle(b));

  const std::string path = temp_path("st.rlrf");
  save_container(st, path);
  Container c = load_container(path);
  REQUIRE(c.is_state());
  CHECK(c.state().next_stream == st.next_stream);
  CHECK(frobenius_norm(c.state().f - st.f) == 0.0);

  // the next update is bit-for-bit the same from the reloaded state
  DenseMatrix b2 = random_matrix(4, 20, 4, 957);
  update::UpdatableState u1 = update::append_rows(st, decomp::MatrixHandle(b2));
  update::UpdatableState u2 = update::append_rows(c.state(), decomp::MatrixHandle(b2));
  CHECK(frobenius_norm(u1.f - u2.f) == 0.0);
  CHECK(frobenius_norm(u1.raw_core - u2.raw_core) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("container: corruption is an error, not a crash") {
  DenseMatrix a = random_matrix(14, 10, 5);
  decomp::Approximant ap = decomp::gn_plain(decomp::MatrixHandle(a), 3, 2, 11);
  const std::string path = temp_path("bad.rlrf");
  save_container(ap, path);

  // truncate the blob section
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
  }
  CHECK_THROWS_AS(load_container(path), IoError);

  // wrong version
  {
    std::string v = bytes;
    v[4] = 99;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(v.data(), static_cast<std::streamsize>(v.size()));
  }
  CHECK_THROWS_WITH_AS(load_container(path), doctest::Contains("version"), IoError);

  // wrong magic
  {
    std::string v = bytes;
    v[0] = 'X';
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(v.data(), static_cast<std::streamsize>(v.size()));
  }
  CHECK_THROWS_WITH_AS(load_container(path), doctest::Contains("magic"), IoError);
  std::remove(path.c_str());
}
