#include "wsiroi/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

#include "wsiroi/errors.hpp"

using nlohmann::json;

namespace wsiroi {

namespace {

std::vector<Coord> compress(std::span<const Box> a, std::span<const Box> b, bool along_x) {
  std::vector<Coord> v;
  v.reserve(2 * (a.size() + b.size()));
  for (auto boxes : {a, b}) {
    for (const auto& box : boxes) {
      v.push_back(along_x ? box.x0() : box.y0());
      v.push_back(along_x ? box.x1() : box.y1());
    }
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Coverage count per compressed cell via a 2-D difference array.
std::vector<int> coverage(std::span<const Box> boxes, const std::vector<Coord>& xs,
                          const std::vector<Coord>& ys) {
  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  std::vector<int> grid(nx * ny, 0);
  auto index = [](const std::vector<Coord>& axis, Coord v) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (const auto& b : boxes) {
    const std::size_t x0 = index(xs, b.x0()), x1 = index(xs, b.x1());
    const std::size_t y0 = index(ys, b.y0()), y1 = index(ys, b.y1());
    ++grid[y0 * nx + x0];
    --grid[y0 * nx + x1];
    --grid[y1 * nx + x0];
    ++grid[y1 * nx + x1];
  }
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 1; x < nx; ++x) grid[y * nx + x] += grid[y * nx + x - 1];
  }
  for (std::size_t y = 1; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) grid[y * nx + x] += grid[(y - 1) * nx + x];
  }
  return grid;
}

std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double slide_iou(std::span<const Box> pred, std::span<const Box> ref) {
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  const auto xs = compress(pred, ref, true);
  const auto ys = compress(pred, ref, false);
  const auto p = coverage(pred, xs, ys);
  const auto r = coverage(ref, xs, ys);
  const std::size_t nx = xs.size();
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (std::size_t y = 0; y + 1 < ys.size(); ++y) {
    const Coord h = ys[y + 1] - ys[y];
    for (std::size_t x = 0; x + 1 < nx; ++x) {
      const bool in_p = p[y * nx + x] > 0;
      const bool in_r = r[y * nx + x] > 0;
      if (!in_p && !in_r) continue;
      const std::int64_t cell = (xs[x + 1] - xs[x]) * h;
      uni += cell;
      if (in_p && in_r) inter += cell;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SlideReport match_report(const SlideAnnotation& pred, const SlideAnnotation& ref, double match_iou) {
  if (pred.slide_id != ref.slide_id) {
    throw ValidationError("cannot compare annotations of different slides ('" + pred.slide_id +
                          "' vs '" + ref.slide_id + "')");
  }
  if (!(match_iou > 0.0 && match_iou <= 1.0)) throw ValidationError("match iou must lie in (0,1]");

  auto sorted = [](const SlideAnnotation& a) {
    auto boxes = a.box_list();
    std::stable_sort(boxes.begin(), boxes.end(), RasterOrder{});
    return boxes;
  };
  const auto refs = sorted(ref);
  const auto preds = sorted(pred);

  struct Candidate {
    double iou;
    std::size_t r;
    std::size_t p;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const double v = iou(refs[r], preds[p]);
      if (v >= match_iou) candidates.push_back({v, r, p});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.r, a.p) < std::tie(a.iou, b.r, b.p);
  });

  SlideReport report;
  report.slide_id = ref.slide_id;
  report.slide_iou = slide_iou(preds, refs);
  report.ref_count = static_cast<int>(refs.size());
  report.pred_count = static_cast<int>(preds.size());
  std::vector<bool> ref_used(refs.size(), false);
  std::vector<bool> pred_used(preds.size(), false);
  for (const auto& c : candidates) {
    if (ref_used[c.r] || pred_used[c.p]) continue;
    ref_used[c.r] = pred_used[c.p] = true;
    report.matches.push_back({refs[c.r], preds[c.p], c.iou});
  }
  report.matched = static_cast<int>(report.matches.size());
  report.ref_only = report.ref_count - report.matched;
  report.pred_only = report.pred_count - report.matched;
  report.discrepant = report.ref_only + report.pred_only;
  return report;
}

ReportSummary aggregate_report(std::span<const SlideReport> reports) {
  if (reports.empty()) throw ValidationError("cannot aggregate an empty report list");
  ReportSummary s;
  s.slides = reports.size();
  double iou_sum = 0.0;
  for (const auto& r : reports) {
    iou_sum += r.slide_iou;
    s.ref_total += r.ref_count;
    s.pred_total += r.pred_count;
    s.matched_total += r.matched;
    s.discrepant_total += r.discrepant;
  }
  s.mean_iou = iou_sum / static_cast<double>(reports.size());
  return s;
}

std::string mode_iou_csv(std::span<const ModeRow> rows) {
  std::vector<ModeRow> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const ModeRow& a, const ModeRow& b) {
    auto rank = [](const std::string& m) { return m == "base" ? 0 : m == "center" ? 1 : 2; };
    return std::make_tuple(rank(a.mode), a.mode) < std::make_tuple(rank(b.mode), b.mode);
  });
  std::string out = "mode,mean_iou\n";
  for (const auto& r : sorted) out += r.mode + "," + format_fixed(r.mean_iou) + "\n";
  return out;
}

std::vector<ModeRow> parse_mode_iou_csv(std::string_view text) {
  std::vector<ModeRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "mode,mean_iou") {
    throw ValidationError("report.csv must start with the header mode,mean_iou");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("malformed report.csv row '" + line + "'");
    try {
      rows.push_back({line.substr(0, comma), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ValidationError("malformed report.csv row '" + line + "'");
    }
  }
  return rows;
}

std::string discrepancy_csv(std::span<const SlideReport> reports) {
  std::string out = "specimen,ref_total,pred_total,discrepant\n";
  for (const auto& r : reports) {
    out += r.slide_id + "," + std::to_string(r.ref_count) + "," + std::to_string(r.pred_count) +
           "," + std::to_string(r.discrepant) + "\n";
  }
  if (!reports.empty()) {
    const auto s = aggregate_report(reports);
    out += "Total," + std::to_string(s.ref_total) + "," + std::to_string(s.pred_total) + "," +
           std::to_string(s.discrepant_total) + "\n";
  }
  return out;
}

json report_json(std::string_view mode, std::span<const SlideReport> reports, double match_iou) {
  auto box = [](const Box& b) { return json::array({b.x0(), b.y0(), b.x1(), b.y1()}); };
  json slides = json::array();
  for (const auto& r : reports) {
    json matches = json::array();
    for (const auto& m : r.matches) {
      matches.push_back({{"ref", box(m.ref)}, {"pred", box(m.pred)}, {"iou", m.iou}});
    }
    slides.push_back({{"slide_id", r.slide_id},
                      {"slide_iou", r.slide_iou},
                      {"ref_count", r.ref_count},
                      {"pred_count", r.pred_count},
                      {"matched", r.matched},
                      {"ref_only", r.ref_only},
                      {"pred_only", r.pred_only},
                      {"discrepant", r.discrepant},
                      {"matches", matches}});
  }
  json doc = {{"mode", std::string(mode)},
              {"match_iou", match_iou},
              {"iou_definition", "per-slide IoU of the pixel unions of predicted and reference boxes, averaged over slides"},
              {"discrepancy_definition", "ref_only + pred_only under greedy one-to-one matching at match_iou"},
              {"slides", slides}};
  if (!reports.empty()) {
    const auto s = aggregate_report(reports);
    doc["summary"] = {{"slides", s.slides},
                      {"mean_iou", s.mean_iou},
                      {"ref_total", s.ref_total},
                      {"pred_total", s.pred_total},
                      {"matched_total", s.matched_total},
                      {"discrepant_total", s.discrepant_total},
                      {"recall", s.recall()}};
  }
  return doc;
}

}  // namespace wsiroi
