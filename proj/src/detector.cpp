#include "wsiroi/detector.hpp"

#include <algorithm>
#include <memory>
#include <optional>

#include "parallel.hpp"
#include "wsiroi/errors.hpp"

namespace wsiroi {

void DetectorConfig::validate() const {
  tiler.validate();
  search.validate();
  if (!(decision_threshold >= 0.0)) throw ValidationError("decision threshold must be >= 0");
  if (!(merge_iou > 0.0 && merge_iou <= 1.0)) throw ValidationError("merge iou must lie in (0,1]");
  if (workers < 1) throw ValidationError("workers must be >= 1");
}

namespace {

struct TileResult {
  std::vector<ScoredProposal> positives;
  std::size_t scored = 0;
};

struct PreparedTile {
  Image patch;
  Point origin;
  Point offset;
  Box on_slide_local;  // patch-local area that lies on the slide
  TileRef ref;
};

PreparedTile prepare_tile(const Slide& slide, const TileFootprint& footprint, const TilerConfig& tiler) {
  const Tile tile = extract_tile(slide, footprint);
  PreparedTile t{tiler.mode == PipelineMode::center ? center_crop(tile, tiler.center_size).pixels
                                                    : tile.pixels,
                 footprint.box.origin(), mode_crop_offset(tiler), Box(0, 0, 1, 1),
                 TileRef{footprint.slide_id, footprint.grid_row, footprint.grid_col}};
  const Point shift{t.origin.x + t.offset.x, t.origin.y + t.offset.y};
  const Box patch_in_slide = Box::from_origin_size(shift, t.patch.width(), t.patch.height());
  auto inside = intersection(patch_in_slide, slide.bounds());
  if (!inside) throw ValidationError("patch " + patch_in_slide.to_string() + " lies off the slide");
  t.on_slide_local = inside->translated({-shift.x, -shift.y});
  return t;
}

// Clips padded-edge proposals to the slide before translating.
std::optional<RegionProposal> place(const PreparedTile& t, const Proposal& p, const Slide& slide) {
  auto local = intersection(p.local_box, t.on_slide_local);
  if (!local) return std::nullopt;
  return to_slide_coords({*local, p.birth_step}, t.ref, t.origin, t.offset, slide.width(), slide.height());
}

TileResult process_tile(const Slide& slide, const TileFootprint& footprint, ClassifierBackend& backend,
                        const DetectorConfig& config) {
  const PreparedTile t = prepare_tile(slide, footprint, config.tiler);
  const auto proposals = propose(t.patch, config.search);
  std::vector<Image> inputs;
  inputs.reserve(proposals.size());
  for (const auto& p : proposals) {
    inputs.push_back(resize_to_input(t.patch.crop(p.local_box), config.tiler.input_size));
  }
  const auto scores = score_batch(backend, inputs);

  TileResult result;
  result.scored = proposals.size();
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (scores[i].p_roi < config.decision_threshold) continue;
    if (auto placed = place(t, proposals[i], slide)) result.positives.push_back({*placed, scores[i]});
  }
  return result;
}

std::string tile_context(const Slide& slide, const TileFootprint& fp) {
  return "slide '" + slide.id() + "' tile (row " + std::to_string(fp.grid_row) + ", col " +
         std::to_string(fp.grid_col) + "): ";
}

}  // namespace

SlideDetections detect_slide_detailed(const Slide& slide, ClassifierBackend& backend,
                                      const DetectorConfig& config) {
  config.validate();
  if (backend.input_size() != config.tiler.input_size) {
    throw ValidationError("backend input size " + std::to_string(backend.input_size()) +
                          " differs from configured input size " +
                          std::to_string(config.tiler.input_size));
  }
  const TileGrid grid = tile_grid(slide, config.tiler.tile_size, config.tiler.pad_edges);

  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(grid.tiles.size())));
  std::vector<std::unique_ptr<ClassifierBackend>> clones;
  std::vector<ClassifierBackend*> per_worker(static_cast<std::size_t>(workers), &backend);
  if (!backend.thread_safe()) {
    for (int w = 1; w < workers; ++w) {
      clones.push_back(backend.clone());
      per_worker[static_cast<std::size_t>(w)] = clones.back().get();
    }
  }

  std::vector<TileResult> results(grid.tiles.size());
  detail::parallel_for(grid.tiles.size(), workers, [&](std::size_t i, int w) {
    const auto& fp = grid.tiles[i];
    try {
      results[i] = process_tile(slide, fp, *per_worker[static_cast<std::size_t>(w)], config);
    } catch (const ShapeMismatchError& e) {
      throw ShapeMismatchError(tile_context(slide, fp) + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(tile_context(slide, fp) + e.what());
    }
  });

  SlideDetections out;
  out.tile_count = grid.tiles.size();
  for (auto& r : results) {
    out.proposals_scored += r.scored;
    for (auto& p : r.positives) out.positives.push_back(std::move(p));
  }

  std::vector<Box> boxes;
  boxes.reserve(out.positives.size());
  for (const auto& p : out.positives) boxes.push_back(p.proposal.slide_box);
  for (const auto& merged : merge_connected_members(boxes, config.merge_iou)) {
    double confidence = 0.0;
    for (std::size_t m : merged.members) confidence = std::max(confidence, out.positives[m].scores.p_roi);
    out.detections.push_back({merged.box, confidence, static_cast<int>(merged.members.size())});
  }

  const double slide_area = static_cast<double>(slide.bounds().area());
  const Coord patch = mode_patch_size(config.tiler);
  double covered = 0.0;
  for (const auto& fp : grid.tiles) {
    const Point offset = mode_crop_offset(config.tiler);
    const Box classified = Box::from_origin_size(
        {fp.box.x0() + offset.x, fp.box.y0() + offset.y}, patch, patch);
    covered += static_cast<double>(intersection_area(classified, slide.bounds()));
  }
  out.uncovered_fraction = 1.0 - covered / slide_area;
  return out;
}

std::vector<Detection> detect_slide(const Slide& slide, ClassifierBackend& backend,
                                    const DetectorConfig& config) {
  return detect_slide_detailed(slide, backend, config).detections;
}

SlideAnnotation detections_to_annotation(const std::string& slide_id,
                                         const std::vector<Detection>& detections) {
  SlideAnnotation ann;
  ann.slide_id = slide_id;
  ann.source = AnnotationSource::model;
  for (const auto& d : detections) {
    ann.boxes.push_back({d.slide_box, d.confidence, d.contributor_count});
  }
  return ann;
}

}  // namespace wsiroi

namespace wsiroi {

std::vector<RegionProposal> propose_slide(const Slide& slide, const TilerConfig& tiler,
                                          const SelectiveSearchConfig& search, int workers) {
  tiler.validate();
  search.validate();
  const TileGrid grid = tile_grid(slide, tiler.tile_size, tiler.pad_edges);
  std::vector<std::vector<RegionProposal>> per_tile(grid.tiles.size());
  detail::parallel_for(grid.tiles.size(), workers, [&](std::size_t i, int) {
    const auto& fp = grid.tiles[i];
    try {
      const PreparedTile t = prepare_tile(slide, fp, tiler);
      for (const auto& p : propose(t.patch, search)) {
        if (auto placed = place(t, p, slide)) per_tile[i].push_back(std::move(*placed));
      }
    } catch (const ValidationError& e) {
      throw ValidationError(tile_context(slide, fp) + e.what());
    }
  });
  std::vector<RegionProposal> out;
  for (auto& v : per_tile) {
    for (auto& p : v) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace wsiroi
