#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cafda/errors.hpp"

namespace cafda {

using RowId = std::uint32_t;
using Label = std::uint8_t;

/// Dense row-major feature table. Row index equals RowId.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DataError("feature matrix: value count does not match rows x cols");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

  void append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw DataError("feature matrix: row dimension mismatch");
    values_.insert(values_.end(), values.begin(), values.end());
    ++rows_;
  }

  /// Copy of the selected rows, in the given order.
  FeatureMatrix select(std::span<const RowId> ids) const;

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline FeatureMatrix FeatureMatrix::select(std::span<const RowId> ids) const {
  FeatureMatrix out;
  out.cols_ = cols_;
  out.rows_ = ids.size();
  out.values_.reserve(ids.size() * cols_);
  for (RowId id : ids) {
    const auto r = row(id);
    out.values_.insert(out.values_.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace cafda
