#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadpersp {

/// Dense row-major 2-D array. Row 0 is the top of the image.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) {
      throw std::invalid_argument("Raster: negative dimensions");
    }
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < rows_ && col < cols_;
  }

  T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

  T& at(int row, int col) {
    check(row, col);
    return data_[index(row, col)];
  }
  const T& at(int row, int col) const {
    check(row, col);
    return data_[index(row, col)];
  }

  std::span<T> row(int r) noexcept {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
  }
  std::span<const T> row(int r) const noexcept {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }
  void check(int row, int col) const {
    if (!contains(row, col)) {
      throw std::out_of_range("Raster: (" + std::to_string(row) + ", " + std::to_string(col) +
                              ") outside " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Raster<Rgb>;
using FloatRaster = Raster<float>;
/// Nonnegative integer labels: 0 is background/road, k > 0 an instance or class id.
using LabelMap = Raster<std::uint32_t>;
/// 0/1 mask.
using BinaryMask = Raster<std::uint8_t>;

template <typename T, typename U>
void require_same_shape(const Raster<T>& a, const Raster<U>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

/// Pixels with a nonzero label become 1.
inline BinaryMask to_binary(const LabelMap& labels) {
  BinaryMask out(labels.rows(), labels.cols());
  auto src = labels.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != 0 ? 1 : 0;
  return out;
}

}  // namespace roadpersp
