#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wsiroi/geometry.hpp"

namespace wsiroi {

using Rgb = std::array<std::uint8_t, 3>;

// Owned 8-bit RGB raster, row-major, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0, 0, 0});
  Image(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb value);

  // Unchecked; callers guarantee 0 <= x < width, 0 <= y < height.
  const std::uint8_t* pixel_ptr(int x, int y) const noexcept {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }
  std::uint8_t* pixel_ptr(int x, int y) noexcept {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  // Pixel-exact copy of `region`, which must lie inside the image.
  Image crop(const Box& region) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace wsiroi
