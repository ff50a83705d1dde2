#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wsiroi/selective_search.hpp"
#include "wsiroi/slide_io.hpp"

namespace wsiroi {

enum class ExampleLabel { roi, background, ignored };

std::string_view to_string(ExampleLabel label);

struct LabelThresholds {
  double positive = 0.5;
  double negative = 0.3;

  // Requires 0 <= negative < positive <= 1.
  void validate() const;
};

struct LabeledBox {
  Box slide_box;
  ExampleLabel label = ExampleLabel::ignored;
  double max_iou = 0.0;
};

// Labels each proposal by its best IoU against the ground truth (roi at or
// above `positive`, background at or below `negative`, ignored between), then
// appends every ground-truth box as an roi example with IoU 1.
std::vector<LabeledBox> label_proposals(std::span<const Box> proposals, const SlideAnnotation& gt,
                                        const LabelThresholds& thresholds);
std::vector<LabeledBox> label_proposals(std::span<const RegionProposal> proposals,
                                        const SlideAnnotation& gt, const LabelThresholds& thresholds);

struct DatasetOptions {
  double balance_ratio = 3.0;  // keep at most ratio x roi-count backgrounds
  std::uint64_t seed = 0;
  int input_size = 224;
};

struct SlideExamples {
  const Slide* slide = nullptr;
  std::vector<LabeledBox> boxes;
};

struct IndexRow {
  std::string path;  // relative to the dataset directory
  ExampleLabel label = ExampleLabel::roi;
  std::string slide_id;
  Box box;
  double max_iou = 0.0;
};

struct DatasetIndex {
  std::vector<IndexRow> rows;
  int roi_count = 0;
  int background_count = 0;
};

inline constexpr std::string_view kIndexHeader = "path,label,slide_id,x0,y0,x1,y1,max_iou";

// Writes <out_dir>/<slide_id>/<n>_<label>.png crops (resized to input_size)
// and <out_dir>/index.csv. Ignored boxes are skipped; backgrounds are
// subsampled with a seeded, platform-independent shuffle. Throws
// ValidationError when no roi example exists.
DatasetIndex export_dataset(std::span<const SlideExamples> slides,
                            const std::filesystem::path& out_dir, const DatasetOptions& options);

std::string index_csv(const DatasetIndex& index);

}  // namespace wsiroi
