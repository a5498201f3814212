#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stylo {

// Sorted, unique indices with matching values.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  double norm() const {
    double s = 0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  bool operator==(const SparseVector&) const = default;
};

struct SparseRow {
  std::span<const std::uint32_t> indices;
  std::span<const double> values;
};

// Compressed sparse rows with a fixed column count.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t cols) : cols_(cols) {}

  void append(const SparseVector& row) {
    for (std::uint32_t idx : row.indices) {
      if (idx >= cols_) throw std::out_of_range("sparse row index beyond column count");
    }
    indices_.insert(indices_.end(), row.indices.begin(), row.indices.end());
    values_.insert(values_.end(), row.values.begin(), row.values.end());
    indptr_.push_back(indices_.size());
  }

  void append_dense(std::span<const double> row) {
    if (row.size() != cols_) throw std::invalid_argument("dense row width mismatch");
    for (std::size_t j = 0; j < row.size(); ++j) {
      indices_.push_back(static_cast<std::uint32_t>(j));
      values_.push_back(row[j]);
    }
    indptr_.push_back(indices_.size());
  }

  std::size_t rows() const { return indptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  SparseRow row(std::size_t i) const {
    const std::size_t b = indptr_[i];
    const std::size_t e = indptr_[i + 1];
    return {std::span(indices_).subspan(b, e - b), std::span(values_).subspan(b, e - b)};
  }

  SparseMatrix select_rows(std::span<const std::size_t> which) const {
    SparseMatrix out(cols_);
    for (std::size_t r : which) {
      const SparseRow src = row(r);
      out.indices_.insert(out.indices_.end(), src.indices.begin(), src.indices.end());
      out.values_.insert(out.values_.end(), src.values.begin(), src.values.end());
      out.indptr_.push_back(out.indices_.size());
    }
    return out;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> indptr_{0};
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

}  // namespace stylo
