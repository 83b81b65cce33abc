#pragma once

#include <vector>

#include "randlr/types.hpp"

namespace randlr {

// Column-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), 0.0) {
    if (rows < 0 || cols < 0) throw DimensionError("DenseMatrix: negative dimension");
  }

  // Validates that every entry is finite.
  static DenseMatrix from_data(Index rows, Index cols, std::vector<double> data);
  static DenseMatrix identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }

  double& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(j * rows_ + i)]; }
  double operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(j * rows_ + i)];
  }

  double* col(Index j) { return data_.data() + j * rows_; }
  const double* col(Index j) const { return data_.data() + j * rows_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool empty() const { return rows_ == 0 || cols_ == 0; }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

// Compressed-row sparse matrix of doubles.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates the CSR invariants: non-decreasing row pointers, strictly
  // increasing in-row column indices, nnz = row_ptr.back().
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
               std::vector<double> values);

  // Builds from (possibly unsorted) triplets; duplicate entries are summed.
  static SparseMatrix from_triplets(Index rows, Index cols,
                                    std::vector<std::pair<std::pair<Index, Index>, double>> t);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

DenseMatrix transpose(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);
double frobenius_norm(const SparseMatrix& a);

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

// In-place a += b.
void add_in_place(DenseMatrix& a, const DenseMatrix& b);

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom);
DenseMatrix hstack(const DenseMatrix& left, const DenseMatrix& right);
// Contiguous column slice [col0, col0+ncols).
DenseMatrix slice_cols(const DenseMatrix& a, Index col0, Index ncols);
DenseMatrix slice_rows(const DenseMatrix& a, Index row0, Index nrows);
SparseMatrix slice_cols(const SparseMatrix& a, Index col0, Index ncols);
SparseMatrix slice_rows(const SparseMatrix& a, Index row0, Index nrows);

}  // namespace randlr
