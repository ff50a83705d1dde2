#include "wsiroi/image.hpp"

#include <algorithm>
#include <string>

#include "wsiroi/errors.hpp"

namespace wsiroi {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("negative image dimensions");
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width < 0 || height < 0) throw ValidationError("negative image dimensions");
  if (data_.size() != pixel_count() * 3) {
    throw ValidationError("pixel buffer holds " + std::to_string(data_.size()) +
                          " bytes, expected " + std::to_string(pixel_count() * 3));
  }
}

Rgb Image::at(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw ValidationError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                          ") outside " + std::to_string(width_) + "x" + std::to_string(height_));
  }
  const auto* p = pixel_ptr(x, y);
  return {p[0], p[1], p[2]};
}

void Image::set(int x, int y, Rgb value) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw ValidationError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                          ") outside " + std::to_string(width_) + "x" + std::to_string(height_));
  }
  std::copy(value.begin(), value.end(), pixel_ptr(x, y));
}

Image Image::crop(const Box& region) const {
  if (region.x0() < 0 || region.y0() < 0 || region.x1() > width_ || region.y1() > height_) {
    throw ValidationError("crop " + region.to_string() + " outside " + std::to_string(width_) +
                          "x" + std::to_string(height_) + " image");
  }
  const int w = static_cast<int>(region.width());
  const int h = static_cast<int>(region.height());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const auto* src = pixel_ptr(static_cast<int>(region.x0()), static_cast<int>(region.y0()) + y);
    std::copy(src, src + 3 * static_cast<std::size_t>(w), out.begin() + 3 * static_cast<std::size_t>(y) * w);
  }
  return Image(w, h, std::move(out));
}

}  // namespace wsiroi
