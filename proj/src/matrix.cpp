#include "randlr/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace randlr {

DenseMatrix DenseMatrix::from_data(Index rows, Index cols, std::vector<double> data) {
  if (static_cast<Index>(data.size()) != rows * cols)
    throw DimensionError("DenseMatrix: data length does not match rows*cols");
  for (double v : data)
    if (!std::isfinite(v)) throw NumericalError("DenseMatrix: non-finite entry");
  DenseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_ptr,
                           std::vector<Index> col_idx, std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (static_cast<Index>(row_ptr_.size()) != rows_ + 1)
    throw DimensionError("SparseMatrix: row pointer length must be rows+1");
  if (row_ptr_.front() != 0) throw DimensionError("SparseMatrix: row_ptr[0] must be 0");
  for (Index i = 0; i < rows_; ++i) {
    if (row_ptr_[i + 1] < row_ptr_[i])
      throw DimensionError("SparseMatrix: row pointers must be non-decreasing");
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] < 0 || col_idx_[k] >= cols_)
        throw DimensionError("SparseMatrix: column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw DimensionError("SparseMatrix: column indices must be strictly increasing per row");
    }
  }
  if (row_ptr_.back() != static_cast<Index>(values_.size()) ||
      values_.size() != col_idx_.size())
    throw DimensionError("SparseMatrix: nnz mismatch");
}

SparseMatrix SparseMatrix::from_triplets(
    Index rows, Index cols, std::vector<std::pair<std::pair<Index, Index>, double>> t) {
  std::sort(t.begin(), t.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Index> rp(rows + 1, 0), ci;
  std::vector<double> vals;
  ci.reserve(t.size());
  vals.reserve(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto [ij, v] = t[k];
    if (ij.first < 0 || ij.first >= rows || ij.second < 0 || ij.second >= cols)
      throw DimensionError("SparseMatrix: triplet index out of range");
    if (!ci.empty() && !vals.empty() && k > 0 && t[k - 1].first == ij) {
      vals.back() += v;  // duplicates summed
      continue;
    }
    rp[ij.first + 1]++;
    ci.push_back(ij.second);
    vals.push_back(v);
  }
  for (Index i = 0; i < rows; ++i) rp[i + 1] += rp[i];
  return SparseMatrix(rows, cols, std::move(rp), std::move(ci), std::move(vals));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (Index i = 0; i < rows_; ++i)
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Index> rp(cols_ + 1, 0);
  for (Index c : col_idx_) rp[c + 1]++;
  for (Index j = 0; j < cols_; ++j) rp[j + 1] += rp[j];
  std::vector<Index> ci(values_.size());
  std::vector<double> vals(values_.size());
  std::vector<Index> cursor(rp.begin(), rp.end() - 1);
  for (Index i = 0; i < rows_; ++i)
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const Index pos = cursor[col_idx_[k]]++;
      ci[pos] = i;
      vals[pos] = values_[k];
    }
  return SparseMatrix(cols_, rows_, std::move(rp), std::move(ci), std::move(vals));
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  const double* p = a.data();
  for (Index k = 0; k < a.size(); ++k) s += p[k] * p[k];
  return std::sqrt(s);
}

double frobenius_norm(const SparseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("operator+: shape mismatch");
  DenseMatrix c = a;
  add_in_place(c, b);
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("operator-: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (Index k = 0; k < a.size(); ++k) c.data()[k] = a.data()[k] - b.data()[k];
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (Index k = 0; k < c.size(); ++k) c.data()[k] *= s;
  return c;
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("add_in_place: shape mismatch");
  for (Index k = 0; k < a.size(); ++k) a.data()[k] += b.data()[k];
}

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionError("vstack: column mismatch");
  DenseMatrix c(top.rows() + bottom.rows(), top.cols());
  for (Index j = 0; j < c.cols(); ++j) {
    std::memcpy(c.col(j), top.col(j), sizeof(double) * top.rows());
    std::memcpy(c.col(j) + top.rows(), bottom.col(j), sizeof(double) * bottom.rows());
  }
  return c;
}

DenseMatrix hstack(const DenseMatrix& left, const DenseMatrix& right) {
  if (left.rows() != right.rows()) throw DimensionError("hstack: row mismatch");
  DenseMatrix c(left.rows(), left.cols() + right.cols());
  std::memcpy(c.data(), left.data(), sizeof(double) * left.size());
  std::memcpy(c.col(left.cols()), right.data(), sizeof(double) * right.size());
  return c;
}

DenseMatrix slice_cols(const DenseMatrix& a, Index col0, Index ncols) {
  if (col0 < 0 || ncols < 0 || col0 + ncols > a.cols())
    throw DimensionError("slice_cols: range out of bounds");
  DenseMatrix c(a.rows(), ncols);
  std::memcpy(c.data(), a.col(col0), sizeof(double) * a.rows() * ncols);
  return c;
}

DenseMatrix slice_rows(const DenseMatrix& a, Index row0, Index nrows) {
  if (row0 < 0 || nrows < 0 || row0 + nrows > a.rows())
    throw DimensionError("slice_rows: range out of bounds");
  DenseMatrix c(nrows, a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    std::memcpy(c.col(j), a.col(j) + row0, sizeof(double) * nrows);
  return c;
}

SparseMatrix slice_cols(const SparseMatrix& a, Index col0, Index ncols) {
  if (col0 < 0 || ncols < 0 || col0 + ncols > a.cols())
    throw DimensionError("slice_cols: range out of bounds");
  std::vector<Index> rp(a.rows() + 1, 0), ci;
  std::vector<double> vals;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const Index j = a.col_idx()[k];
      if (j >= col0 && j < col0 + ncols) {
        ci.push_back(j - col0);
        vals.push_back(a.values()[k]);
      }
    }
    rp[i + 1] = static_cast<Index>(vals.size());
  }
  return SparseMatrix(a.rows(), ncols, std::move(rp), std::move(ci), std::move(vals));
}

SparseMatrix slice_rows(const SparseMatrix& a, Index row0, Index nrows) {
  if (row0 < 0 || nrows < 0 || row0 + nrows > a.rows())
    throw DimensionError("slice_rows: range out of bounds");
  const Index k0 = a.row_ptr()[row0], k1 = a.row_ptr()[row0 + nrows];
  std::vector<Index> rp(nrows + 1);
  for (Index i = 0; i <= nrows; ++i) rp[i] = a.row_ptr()[row0 + i] - k0;
  std::vector<Index> ci(a.col_idx().begin() + k0, a.col_idx().begin() + k1);
  std::vector<double> vals(a.values().begin() + k0, a.values().begin() + k1);
  return SparseMatrix(nrows, a.cols(), std::move(rp), std::move(ci), std::move(vals));
}

}  // namespace randlr
