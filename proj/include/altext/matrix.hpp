#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "altext/error.hpp"

namespace altext {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ValidationError("matrix storage size does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// One compressed row: parallel column indices and values.
struct SparseRow {
  std::span<const std::uint32_t> index;
  std::span<const double> value;

  double dot(std::span<const double> dense) const {
    double s = 0.0;
    for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * dense[index[k]];
    return s;
  }

  double dot(const SparseRow& other) const {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < index.size() && j < other.index.size()) {
      if (index[i] == other.index[j]) {
        s += value[i++] * other.value[j++];
      } else if (index[i] < other.index[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : value) s += v * v;
    return s;
  }

  /// target += scale * this
  void axpy(double scale, std::span<double> target) const {
    for (std::size_t k = 0; k < index.size(); ++k) target[index[k]] += scale * value[k];
  }
};

/// CSR view of a matrix; all numeric kernels run on this so that sparse
/// representations such as TF-IDF stay cheap.
class SparseRows {
 public:
  SparseRows() = default;

  explicit SparseRows(const DenseMatrix& m) : cols_(m.cols()) {
    offsets_.reserve(m.rows() + 1);
    offsets_.push_back(0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] != 0.0) {
          index_.push_back(static_cast<std::uint32_t>(c));
          value_.push_back(row[c]);
        }
      }
      offsets_.push_back(index_.size());
    }
  }

  std::size_t rows() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t cols() const noexcept { return cols_; }

  SparseRow row(std::size_t r) const {
    const std::size_t b = offsets_[r], e = offsets_[r + 1];
    return {std::span<const std::uint32_t>(index_.data() + b, e - b),
            std::span<const double>(value_.data() + b, e - b)};
  }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> index_;
  std::vector<double> value_;
};

/// Cosine similarity with cosine(x, 0) := 0.
inline double cosine(const SparseRow& a, const SparseRow& b) {
  const double na = a.squared_norm(), nb = b.squared_norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / std::sqrt(na * nb);
}

}  // namespace altext
