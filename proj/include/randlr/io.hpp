#pragma once

#include <string>
#include <variant>

#include "randlr/update.hpp"

namespace randlr::io {

struct LoadedMatrix {
  std::variant<DenseMatrix, SparseMatrix> value;

  bool is_dense() const { return std::holds_alternative<DenseMatrix>(value); }
  const DenseMatrix& dense() const { return std::get<DenseMatrix>(value); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(value); }
  decomp::MatrixHandle handle() const {
    return is_dense() ? decomp::MatrixHandle(dense()) : decomp::MatrixHandle(sparse());
  }
};

// Matrix Market reader: coordinate -> sparse, array -> dense; real field,
// general or symmetric (symmetric expanded); 1-based indices converted.
// Errors carry the offending line number.
LoadedMatrix read_matrix_market(const std::string& path);
LoadedMatrix read_matrix_market_text(const std::string& text);  // tests

// Single-file factor container: magic + version + JSON manifest + raw
// little-endian float64 blobs. Round trips are bitwise for every blob.
inline constexpr char kContainerMagic[4] = {'R', 'L', 'R', 'F'};
inline constexpr std::uint32_t kContainerVersion = 1;

void save_container(const decomp::Approximant& approx, const std::string& path);
void save_container(const update::UpdatableState& state, const std::string& path);

struct Container {
  std::variant<decomp::Approximant, update::UpdatableState> value;
  bool is_state() const { return std::holds_alternative<update::UpdatableState>(value); }
  const decomp::Approximant& approximant() const { return std::get<decomp::Approximant>(value); }
  decomp::Approximant& approximant() { return std::get<decomp::Approximant>(value); }
  const update::UpdatableState& state() const { return std::get<update::UpdatableState>(value); }
  update::UpdatableState& state() { return std::get<update::UpdatableState>(value); }
};

Container load_container(const std::string& path);

}  // namespace randlr::io
