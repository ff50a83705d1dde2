#pragma once

#include <vector>

#include "wsiroi/classifier.hpp"
#include "wsiroi/selective_search.hpp"
#include "wsiroi/slide_io.hpp"
#include "wsiroi/tiler.hpp"

namespace wsiroi {

struct DetectorConfig {
  TilerConfig tiler;
  SelectiveSearchConfig search;
  double decision_threshold = 0.5;
  double merge_iou = 0.2;
  int workers = 1;

  void validate() const;
};

struct ScoredProposal {
  RegionProposal proposal;
  ClassScores scores;
};

struct Detection {
  Box slide_box;
  double confidence = 0.0;  // max p_roi over merged contributors
  int contributor_count = 0;
};

struct SlideDetections {
  std::vector<Detection> detections;     // RasterOrder
  std::vector<ScoredProposal> positives;  // pre-merge survivors, tile order
  std::size_t tile_count = 0;
  std::size_t proposals_scored = 0;
  double uncovered_fraction = 0.0;  // slide area never fed to the classifier
};

// tile -> (center crop) -> propose -> crop+resize -> score -> threshold ->
// slide coordinates -> transitive IoU merge. Output is independent of
// config.workers. Non-thread-safe backends are cloned per worker.
SlideDetections detect_slide_detailed(const Slide& slide, ClassifierBackend& backend,
                                      const DetectorConfig& config);

std::vector<Detection> detect_slide(const Slide& slide, ClassifierBackend& backend,
                                    const DetectorConfig& config);

SlideAnnotation detections_to_annotation(const std::string& slide_id,
                                         const std::vector<Detection>& detections);

}  // namespace wsiroi

namespace wsiroi {

// Selective-search proposals for every tile of a slide, in slide
// coordinates; tiles row-major, proposals in propose() order.
std::vector<RegionProposal> propose_slide(const Slide& slide, const TilerConfig& tiler,
                                          const SelectiveSearchConfig& search, int workers = 1);

}  // namespace wsiroi
