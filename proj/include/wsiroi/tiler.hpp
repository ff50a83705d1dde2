#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wsiroi/geometry.hpp"
#include "wsiroi/image.hpp"
#include "wsiroi/slide_io.hpp"

namespace wsiroi {

enum class PipelineMode { base, center };

std::string_view to_string(PipelineMode mode);
PipelineMode parse_pipeline_mode(std::string_view text);

struct TilerConfig {
  int tile_size = 244;
  PipelineMode mode = PipelineMode::center;
  int center_size = 199;
  int input_size = 224;
  // Emit partial edge tiles, filling the area outside the slide with white.
  bool pad_edges = false;

  void validate() const;
};

struct TileFootprint {
  std::string slide_id;
  int grid_row = 0;
  int grid_col = 0;
  Box box;  // may extend past the slide only when pad_edges is on
};

struct TileGrid {
  int rows = 0;
  int cols = 0;
  std::vector<TileFootprint> tiles;  // row-major
  std::vector<std::string> warnings;
};

struct Tile {
  TileFootprint footprint;
  Image pixels;
};

// Non-overlapping row-major grid. Remainder strips on the right and bottom
// are dropped unless pad_edges is set.
TileGrid tile_grid(const std::string& slide_id, int slide_width, int slide_height, int tile_size,
                   bool pad_edges = false);
TileGrid tile_grid(const Slide& slide, int tile_size, bool pad_edges = false);

// Pixel-exact copy of `box`, which must lie inside the slide.
Image extract_patch(const Slide& slide, const Box& box);

// Like extract_patch but white-fills any part of `footprint.box` beyond the slide.
Tile extract_tile(const Slide& slide, const TileFootprint& footprint);

struct CenterCrop {
  Image pixels;
  Box box;       // slide coordinates
  Point offset;  // relative to the tile origin
};

// Centered square crop; offset = floor((tile_size - crop_size) / 2).
CenterCrop center_crop(const Tile& tile, int crop_size);

// Offset of the classified patch within its tile for the given mode.
Point mode_crop_offset(const TilerConfig& config);
int mode_patch_size(const TilerConfig& config);

// Bilinear resize with corner-aligned sampling, rounded half up to 8 bits.
Image resize_to_input(const Image& source, int target);

}  // namespace wsiroi
