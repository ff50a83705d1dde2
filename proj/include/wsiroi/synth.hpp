#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "wsiroi/image.hpp"
#include "wsiroi/slide_io.hpp"

namespace wsiroi {

// How blob centres are chosen. tile_centered puts each blob near the centre
// of a distinct tile (jitter up to the center-crop margin); uniform places
// blobs anywhere with non-overlapping bounding boxes.
enum class BlobPlacement { tile_centered, uniform };

std::string_view to_string(BlobPlacement placement);
BlobPlacement parse_blob_placement(std::string_view text);

struct SynthOptions {
  std::uint64_t seed = 0;
  int count = 10;
  int width = 1024;
  int height = 1024;
  int min_blobs = 3;
  int max_blobs = 8;
  int min_axis = 80;  // full ellipse axis lengths, pixels
  int max_axis = 160;
  int min_intensity = 60;
  int max_intensity = 100;
  int noise = 5;  // per-channel uniform noise amplitude
  Rgb background{230, 180, 190};
  BlobPlacement placement = BlobPlacement::tile_centered;
  int tile_size = 244;
  int center_size = 199;

  void validate() const;
};

struct SynthSlide {
  std::string id;
  Image image;
  SlideAnnotation ground_truth;
};

// Pale tissue with dark filled ellipses as the regions of interest.
// Ground truth is the tight bounding box of each drawn ellipse.
SynthSlide synth_slide(const SynthOptions& options, int index);

struct SynthSet {
  SlideManifest manifest;
  std::vector<std::filesystem::path> annotation_paths;
};

// Writes slides/<id>.png, annotations/<id>.json and manifest.json under out_dir.
SynthSet write_synth_set(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace wsiroi
