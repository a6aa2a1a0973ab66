#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace planekit {

struct Pixel {
  int u = 0;
  int v = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Dense row-major image.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Set of pixels stored as sorted, unique row-major linear indices.
struct PixelMask {
  std::vector<std::uint32_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }

  // Sorts and deduplicates; call after filling `indices` out of order.
  void normalize();

  static PixelMask from_pixels(const std::vector<Pixel>& pixels, int width);
  std::vector<Pixel> pixels(int width) const;

  friend bool operator==(const PixelMask&, const PixelMask&) = default;
};

std::size_t intersection_size(const PixelMask& a, const PixelMask& b);
PixelMask mask_union(const PixelMask& a, const PixelMask& b);

}  // namespace planekit
