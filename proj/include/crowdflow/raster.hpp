#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "crowdflow/errors.hpp"

namespace crowdflow {

/// Row-major 2-D buffer. The value type of every image-like object in the
/// library; domain types below add meaning on top of it.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw ArgumentError("raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ArgumentError("raster data size does not match width x height");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Replicate-border access.
  const T& clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Single-channel luminance raster with values in [0,1].
class GrayFrame : public Raster<float> {
 public:
  using Raster<float>::Raster;
  explicit GrayFrame(Raster<float> r) : Raster<float>(std::move(r)) {}

  /// Throws ArgumentError when any value lies outside [0,1] or is not finite.
  void validate() const;
};

struct Rgb {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Three-channel raster with every channel in [0,1].
class RgbFrame : public Raster<Rgb> {
 public:
  using Raster<Rgb>::Raster;

  void validate() const;
};

using Mask = Raster<std::uint8_t>;

}  // namespace crowdflow
