#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wsiroi/geometry.hpp"
#include "wsiroi/image.hpp"

namespace wsiroi {

inline constexpr int kHistogramBins = 25;
inline constexpr int kHistogramSize = 3 * kHistogramBins;

using ColorHistogram = std::array<double, kHistogramSize>;

// Histogram bin of an 8-bit channel value.
constexpr int histogram_bin(std::uint8_t v) { return v * kHistogramBins / 256; }

// A connected pixel region of a patch. The histogram holds 25 bins per RGB
// channel, each channel normalised to sum 1.
struct Segment {
  int id = 0;
  std::int64_t pixel_count = 0;
  Box bbox{0, 0, 1, 1};  // tile-local, tight
  ColorHistogram histogram{};
};

struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<Segment> segments;  // sorted by (bbox.y0, bbox.x0, id)
  std::vector<int> labels;        // segment id per pixel, row-major

  int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Graph-based over-segmentation on the 4-connected pixel graph with Euclidean
// RGB edge weights and adaptive threshold k/|C|, followed by absorption of
// components smaller than min_size. Segment ids follow raster order of each
// segment's first pixel.
Segmentation segment_initial(const Image& patch, double k, int min_size);

// Mean of colour-histogram intersection, size and fill similarity, each in [0,1].
double similarity(const Segment& a, const Segment& b, std::int64_t patch_area);

// Region formed by merging a and b: summed size, union bbox, size-weighted
// histogram mean.
Segment merge_segments(const Segment& a, const Segment& b, int new_id);

struct SelectiveSearchConfig {
  double k = 150.0;
  int min_size = 20;
  int max_proposals = 64;

  void validate() const;
};

struct Proposal {
  Box local_box;
  int birth_step = 0;  // 0 = initial segment, n = created by the n-th merge

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

// Greedy hierarchical grouping: merge the most similar neighbouring pair
// (ties to the smaller id pair) until one region remains. Returns the distinct
// boxes of every region ever formed, earliest birth kept, ordered by
// (birth_step, y0, x0, x1, y1) and truncated to max_proposals.
std::vector<Proposal> propose(const Image& patch, const SelectiveSearchConfig& config);

// Full merge trace before dedup/truncation; exposed for tests.
std::vector<Segment> merge_hierarchy(const Segmentation& segmentation);

struct TileRef {
  std::string slide_id;
  int grid_row = 0;
  int grid_col = 0;

  friend bool operator==(const TileRef&, const TileRef&) = default;
};

struct RegionProposal {
  TileRef tile;
  Box local_box;
  Box slide_box;
  int birth_step = 0;
};

// slide_box = local_box + tile_origin + crop_offset; rejects results leaving
// the slide_width x slide_height extent.
RegionProposal to_slide_coords(const Proposal& proposal, const TileRef& tile, Point tile_origin,
                               Point crop_offset, Coord slide_width, Coord slide_height);

// One JSON object, no trailing newline.
std::string proposal_json_line(const RegionProposal& proposal);

}  // namespace wsiroi
