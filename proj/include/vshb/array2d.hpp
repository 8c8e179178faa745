#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vshb/error.hpp"

namespace vshb {

// Row-major 2D array; (x, y) = (column, row).
template <typename T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const {
    return data_[y * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Array2D& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Array2D&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Array2D<A>& a, const Array2D<B>& b,
                        const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw ValidationError(std::string(what) + ": grid dimensions differ");
}

}  // namespace vshb
