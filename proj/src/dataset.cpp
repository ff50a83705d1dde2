#include "wsiroi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "file_util.hpp"
#include "wsiroi/errors.hpp"
#include "wsiroi/tiler.hpp"

namespace fs = std::filesystem;

namespace wsiroi {

std::string_view to_string(ExampleLabel label) {
  switch (label) {
    case ExampleLabel::roi: return "roi";
    case ExampleLabel::background: return "background";
    case ExampleLabel::ignored: return "ignored";
  }
  return "ignored";
}

void LabelThresholds::validate() const {
  if (!(negative >= 0.0 && negative < positive && positive <= 1.0)) {
    throw ValidationError("label thresholds need 0 <= negative < positive <= 1 (got negative=" +
                          std::to_string(negative) + ", positive=" + std::to_string(positive) + ")");
  }
}

std::vector<LabeledBox> label_proposals(std::span<const Box> proposals, const SlideAnnotation& gt,
                                        const LabelThresholds& thresholds) {
  thresholds.validate();
  std::vector<LabeledBox> out;
  out.reserve(proposals.size() + gt.boxes.size());
  for (const auto& p : proposals) {
    double best = 0.0;
    for (const auto& g : gt.boxes) best = std::max(best, iou(p, g.box));
    ExampleLabel label = ExampleLabel::ignored;
    if (best >= thresholds.positive) {
      label = ExampleLabel::roi;
    } else if (best <= thresholds.negative) {
      label = ExampleLabel::background;
    }
    out.push_back({p, label, best});
  }
  for (const auto& g : gt.boxes) out.push_back({g.box, ExampleLabel::roi, 1.0});
  return out;
}

std::vector<LabeledBox> label_proposals(std::span<const RegionProposal> proposals,
                                        const SlideAnnotation& gt, const LabelThresholds& thresholds) {
  std::vector<Box> boxes;
  boxes.reserve(proposals.size());
  for (const auto& p : proposals) boxes.push_back(p.slide_box);
  return label_proposals(boxes, gt, thresholds);
}

namespace {

void check_slide_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos) {
    throw ValidationError("slide id '" + id + "' cannot be used as a directory name");
  }
}

std::string format_iou(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string index_csv(const DatasetIndex& index) {
  std::string out(kIndexHeader);
  out += "\n";
  for (const auto& r : index.rows) {
    out += r.path + "," + std::string(to_string(r.label)) + "," + r.slide_id + "," +
           std::to_string(r.box.x0()) + "," + std::to_string(r.box.y0()) + "," +
           std::to_string(r.box.x1()) + "," + std::to_string(r.box.y1()) + "," +
           format_iou(r.max_iou) + "\n";
  }
  return out;
}

DatasetIndex export_dataset(std::span<const SlideExamples> slides, const fs::path& out_dir,
                            const DatasetOptions& options) {
  if (!(options.balance_ratio >= 0.0)) throw ValidationError("balance ratio must be >= 0");

  struct Ref {
    std::size_t slide;
    std::size_t box;
  };
  std::vector<Ref> rois;
  std::vector<Ref> backgrounds;
  for (std::size_t s = 0; s < slides.size(); ++s) {
    if (slides[s].slide == nullptr) throw ValidationError("dataset slide entry has no slide");
    check_slide_id(slides[s].slide->id());
    for (std::size_t b = 0; b < slides[s].boxes.size(); ++b) {
      const auto label = slides[s].boxes[b].label;
      if (label == ExampleLabel::roi) rois.push_back({s, b});
      if (label == ExampleLabel::background) backgrounds.push_back({s, b});
    }
  }
  if (rois.empty()) throw ValidationError("dataset has no roi examples; nothing to train on");

  const auto cap = static_cast<std::size_t>(std::floor(options.balance_ratio * static_cast<double>(rois.size())));
  std::vector<bool> keep_background(backgrounds.size(), true);
  if (backgrounds.size() > cap) {
    // Partial Fisher-Yates with raw mt19937_64 draws: identical on every
    // standard library, unlike std::shuffle / uniform_int_distribution.
    std::vector<std::size_t> order(backgrounds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
      std::swap(order[i], order[j]);
    }
    std::fill(keep_background.begin(), keep_background.end(), false);
    for (std::size_t i = 0; i < cap; ++i) keep_background[order[i]] = true;
  }

  std::vector<std::vector<bool>> keep(slides.size());
  for (std::size_t s = 0; s < slides.size(); ++s) keep[s].assign(slides[s].boxes.size(), false);
  for (const auto& r : rois) keep[r.slide][r.box] = true;
  for (std::size_t i = 0; i < backgrounds.size(); ++i) {
    if (keep_background[i]) keep[backgrounds[i].slide][backgrounds[i].box] = true;
  }

  DatasetIndex index;
  for (std::size_t s = 0; s < slides.size(); ++s) {
    const Slide& slide = *slides[s].slide;
    int serial = 0;
    for (std::size_t b = 0; b < slides[s].boxes.size(); ++b) {
      if (!keep[s][b]) continue;
      const LabeledBox& lb = slides[s].boxes[b];
      char name[64];
      std::snprintf(name, sizeof name, "%06d_%s.png", serial++, std::string(to_string(lb.label)).c_str());
      const std::string rel = slide.id() + "/" + name;
      save_png(out_dir / slide.id() / name,
               resize_to_input(slide.read_region(lb.slide_box), options.input_size));
      index.rows.push_back({rel, lb.label, slide.id(), lb.slide_box, lb.max_iou});
      if (lb.label == ExampleLabel::roi) {
        ++index.roi_count;
      } else {
        ++index.background_count;
      }
    }
  }
  detail::write_text_file(out_dir / "index.csv", index_csv(index));
  return index;
}

}  // namespace wsiroi
