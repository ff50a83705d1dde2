#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wsiroi/geometry.hpp"
#include "wsiroi/slide_io.hpp"

namespace wsiroi {

// Pixel-set IoU of the union of `pred` against the union of `ref`, by
// coordinate-compressed sweep. Both empty -> 1, exactly one empty -> 0.
double slide_iou(std::span<const Box> pred, std::span<const Box> ref);

struct MatchPair {
  Box ref;
  Box pred;
  double iou = 0.0;
};

struct SlideReport {
  std::string slide_id;
  double slide_iou = 0.0;
  int ref_count = 0;
  int pred_count = 0;
  int matched = 0;
  int ref_only = 0;
  int pred_only = 0;
  int discrepant = 0;  // ref_only + pred_only
  std::vector<MatchPair> matches;
};

// Greedy one-to-one matching by descending pairwise IoU; only pairs with
// IoU >= match_iou qualify. Ties fall to the lower (ref, pred) position in
// RasterOrder, so the result does not depend on input order.
SlideReport match_report(const SlideAnnotation& pred, const SlideAnnotation& ref,
                         double match_iou = 0.5);

struct ReportSummary {
  std::size_t slides = 0;
  double mean_iou = 0.0;
  int ref_total = 0;
  int pred_total = 0;
  int matched_total = 0;
  int discrepant_total = 0;

  double recall() const { return ref_total == 0 ? 1.0 : static_cast<double>(matched_total) / ref_total; }
};

ReportSummary aggregate_report(std::span<const SlideReport> reports);

// mode,mean_iou rows; one row per mode, base before center.
struct ModeRow {
  std::string mode;
  double mean_iou = 0.0;
};
std::string mode_iou_csv(std::span<const ModeRow> rows);
std::vector<ModeRow> parse_mode_iou_csv(std::string_view text);

// specimen,ref_total,pred_total,discrepant with a closing Total row.
std::string discrepancy_csv(std::span<const SlideReport> reports);

nlohmann::json report_json(std::string_view mode, std::span<const SlideReport> reports,
                           double match_iou);

}  // namespace wsiroi
