#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace dbal {

// Dense row-major matrix of doubles. One row per sample, one column per
// feature. Immutable by convention once filled: every algorithm in this
// library takes it by const reference and never mutates shared instances.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (cols == 0) throw std::invalid_argument("Matrix: cols must be >= 1");
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    for (const auto& r : rows) {
      if (m.rows_ == 0) {
        m.cols_ = r.size();
        if (m.cols_ == 0) throw std::invalid_argument("Matrix: empty row");
      } else if (r.size() != m.cols_) {
        throw std::invalid_argument("Matrix: ragged initializer");
      }
      m.data_.insert(m.data_.end(), r.begin(), r.end());
      ++m.rows_;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // New matrix made of the given rows, in the given order.
  Matrix gather_rows(std::span<const std::size_t> idx) const {
    Matrix out;
    out.cols_ = cols_;
    out.rows_ = idx.size();
    out.data_.reserve(idx.size() * cols_);
    for (std::size_t i : idx) {
      if (i >= rows_) throw std::out_of_range("Matrix::gather_rows: row index out of range");
      out.data_.insert(out.data_.end(), row(i), row(i) + cols_);
    }
    return out;
  }

  Matrix drop_column(std::size_t col) const {
    if (col >= cols_) throw std::out_of_range("Matrix::drop_column: column out of range");
    if (cols_ == 1) throw std::invalid_argument("Matrix::drop_column: cannot drop the only column");
    Matrix out;
    out.cols_ = cols_ - 1;
    out.rows_ = rows_;
    out.data_.reserve(rows_ * out.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = row(i);
      for (std::size_t j = 0; j < cols_; ++j) {
        if (j != col) out.data_.push_back(r[j]);
      }
    }
    return out;
  }

  void append_row(std::span<const double> r) {
    if (rows_ == 0 && cols_ == 0) {
      cols_ = r.size();
      if (cols_ == 0) throw std::invalid_argument("Matrix::append_row: empty row");
    }
    if (r.size() != cols_) throw std::invalid_argument("Matrix::append_row: width mismatch");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Points plus one real-valued label per row (true labels or pseudo-labels).
struct LabeledPool {
  Matrix points;
  std::vector<double> labels;

  std::size_t size() const { return points.rows(); }
  void validate() const {
    if (labels.size() != points.rows())
      throw std::invalid_argument("LabeledPool: labels length must equal point count");
  }
};

// Result of a query strategy: chosen target indices in selection order.
// criterion_trace carries one value per query step for the greedy
// criterion-minimizing strategies, one value per outer iteration for the
// large-scale K-medoids, and is empty for strategies with no running
// criterion (random, k-means).
struct Selection {
  std::vector<std::size_t> indices;
  std::vector<double> criterion_trace;
};

}  // namespace dbal
