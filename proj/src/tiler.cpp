#include "wsiroi/tiler.hpp"

#include <algorithm>
#include <cmath>

#include "wsiroi/errors.hpp"

namespace wsiroi {

std::string_view to_string(PipelineMode mode) {
  return mode == PipelineMode::base ? "base" : "center";
}

PipelineMode parse_pipeline_mode(std::string_view text) {
  if (text == "base") return PipelineMode::base;
  if (text == "center") return PipelineMode::center;
  throw ValidationError("unknown mode '" + std::string(text) + "' (expected base|center)");
}

void TilerConfig::validate() const {
  if (tile_size < 1) throw ValidationError("tile size must be >= 1");
  if (input_size < 1) throw ValidationError("input size must be >= 1");
  if (mode == PipelineMode::center && (center_size < 1 || center_size >= tile_size)) {
    throw ValidationError("center size must lie in [1, tile size), got " +
                          std::to_string(center_size) + " for tile " + std::to_string(tile_size));
  }
}

TileGrid tile_grid(const std::string& slide_id, int slide_width, int slide_height, int tile_size,
                   bool pad_edges) {
  if (tile_size < 1) throw ValidationError("tile size must be >= 1");
  TileGrid grid;
  if (pad_edges) {
    grid.rows = (slide_height + tile_size - 1) / tile_size;
    grid.cols = (slide_width + tile_size - 1) / tile_size;
  } else {
    grid.rows = slide_height / tile_size;
    grid.cols = slide_width / tile_size;
  }
  if (grid.rows == 0 || grid.cols == 0) {
    grid.rows = grid.cols = 0;
    grid.warnings.push_back("slide '" + slide_id + "' (" + std::to_string(slide_width) + "x" +
                            std::to_string(slide_height) + ") is smaller than one " +
                            std::to_string(tile_size) + "px tile; no tiles produced");
    return grid;
  }
  grid.tiles.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Coord x0 = static_cast<Coord>(c) * tile_size;
      const Coord y0 = static_cast<Coord>(r) * tile_size;
      grid.tiles.push_back({slide_id, r, c, Box(x0, y0, x0 + tile_size, y0 + tile_size)});
    }
  }
  return grid;
}

TileGrid tile_grid(const Slide& slide, int tile_size, bool pad_edges) {
  return tile_grid(slide.id(), slide.width(), slide.height(), tile_size, pad_edges);
}

Image extract_patch(const Slide& slide, const Box& box) { return slide.read_region(box); }

Tile extract_tile(const Slide& slide, const TileFootprint& footprint) {
  const Box& box = footprint.box;
  if (slide.bounds().contains(box)) return {footprint, slide.read_region(box)};
  auto inside = intersection(box, slide.bounds());
  if (!inside) throw ValidationError("tile " + box.to_string() + " does not touch the slide");
  Image pixels(static_cast<int>(box.width()), static_cast<int>(box.height()), Rgb{255, 255, 255});
  const Image part = slide.read_region(*inside);
  const int dx = static_cast<int>(inside->x0() - box.x0());
  const int dy = static_cast<int>(inside->y0() - box.y0());
  for (int y = 0; y < part.height(); ++y) {
    std::copy_n(part.pixel_ptr(0, y), 3 * static_cast<std::size_t>(part.width()),
                pixels.pixel_ptr(dx, dy + y));
  }
  return {footprint, std::move(pixels)};
}

CenterCrop center_crop(const Tile& tile, int crop_size) {
  const int tw = tile.pixels.width();
  const int th = tile.pixels.height();
  if (crop_size < 1 || crop_size > tw || crop_size > th) {
    throw ValidationError("center crop " + std::to_string(crop_size) + " does not fit a " +
                          std::to_string(tw) + "x" + std::to_string(th) + " tile");
  }
  const Point offset{(tw - crop_size) / 2, (th - crop_size) / 2};
  const Box local = Box::from_origin_size(offset, crop_size, crop_size);
  return {tile.pixels.crop(local),
          Box::from_origin_size({tile.footprint.box.x0() + offset.x, tile.footprint.box.y0() + offset.y},
                                crop_size, crop_size),
          offset};
}

Point mode_crop_offset(const TilerConfig& config) {
  if (config.mode == PipelineMode::base) return {0, 0};
  const Coord d = (config.tile_size - config.center_size) / 2;
  return {d, d};
}

int mode_patch_size(const TilerConfig& config) {
  return config.mode == PipelineMode::base ? config.tile_size : config.center_size;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> sample_taps(int source, int target) {
  std::vector<Tap> taps(static_cast<std::size_t>(target));
  for (int i = 0; i < target; ++i) {
    const double pos = target == 1 ? (source - 1) / 2.0
                                   : static_cast<double>(i) * (source - 1) / (target - 1);
    const int lo = std::min(static_cast<int>(std::floor(pos)), source - 1);
    const int hi = std::min(lo + 1, source - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
  }
  return taps;
}

}  // namespace

Image resize_to_input(const Image& source, int target) {
  if (source.empty()) throw ValidationError("cannot resize an empty image");
  if (target < 1) throw ValidationError("resize target must be >= 1");
  if (source.width() == target && source.height() == target) return source;
  const auto xs = sample_taps(source.width(), target);
  const auto ys = sample_taps(source.height(), target);
  Image out(target, target);
  for (int oy = 0; oy < target; ++oy) {
    const Tap& ty = ys[static_cast<std::size_t>(oy)];
    for (int ox = 0; ox < target; ++ox) {
      const Tap& tx = xs[static_cast<std::size_t>(ox)];
      const auto* p00 = source.pixel_ptr(tx.lo, ty.lo);
      const auto* p10 = source.pixel_ptr(tx.hi, ty.lo);
      const auto* p01 = source.pixel_ptr(tx.lo, ty.hi);
      const auto* p11 = source.pixel_ptr(tx.hi, ty.hi);
      auto* o = out.pixel_ptr(ox, oy);
      for (int c = 0; c < 3; ++c) {
        // lerp form keeps constant neighbourhoods exact
        const double top = p00[c] + (p10[c] - p00[c]) * tx.frac;
        const double bottom = p01[c] + (p11[c] - p01[c]) * tx.frac;
        const double v = top + (bottom - top) * ty.frac;
        o[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace wsiroi
