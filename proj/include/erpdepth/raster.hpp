#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {

// Row-major H x W single-channel plane.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int height, int width, T fill = T{})
      : height_(height),
        width_(width),
        values_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  T& operator()(int v, int u) { return values_[index(v, u)]; }
  const T& operator()(int v, int u) const { return values_[index(v, u)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  bool same_shape(int height, int width) const {
    return height_ == height && width_ == width;
  }
  template <typename U>
  bool same_shape(const Plane<U>& other) const {
    return same_shape(other.height(), other.width());
  }

 private:
  std::size_t index(int v, int u) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

using ScalarMap = Plane<double>;
using Mask = Plane<std::uint8_t>;

// H x W x C intensities in [0, 1], channel-interleaved.
class ErpImage {
 public:
  ErpImage() = default;
  ErpImage(const ErpGrid& grid, int channels, double fill = 0.0);

  const ErpGrid& grid() const { return grid_; }
  int height() const { return grid_.height; }
  int width() const { return grid_.width; }
  int channels() const { return channels_; }

  double& operator()(int v, int u, int c) { return values_[index(v, u, c)]; }
  double operator()(int v, int u, int c) const { return values_[index(v, u, c)]; }

  // Pointer to the C contiguous channel values of pixel (v, u).
  const double* pixel(int v, int u) const { return values_.data() + index(v, u, 0); }
  double* pixel(int v, int u) { return values_.data() + index(v, u, 0); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const ErpImage& other) const {
    return grid_ == other.grid_ && channels_ == other.channels_;
  }

  // Throws ConfigError if any value is non-finite or outside [0, 1].
  void validate() const;

 private:
  std::size_t index(int v, int u, int c) const {
    return (static_cast<std::size_t>(v) * static_cast<std::size_t>(grid_.width) +
            static_cast<std::size_t>(u)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  ErpGrid grid_{};
  int channels_ = 0;
  std::vector<double> values_;
};

// Radial distances in meters with a validity mask.
struct DepthMap {
  ErpGrid grid{};
  ScalarMap values;
  Mask valid;

  DepthMap() = default;
  DepthMap(const ErpGrid& grid, double fill);

  // Throws ConfigError if a valid entry is non-finite or non-positive, or
  // if the planes do not match the grid.
  void validate() const;
};

}  // namespace erpdepth
