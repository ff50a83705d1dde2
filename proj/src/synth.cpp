#include "wsiroi/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "wsiroi/errors.hpp"

namespace fs = std::filesystem;

namespace wsiroi {

std::string_view to_string(BlobPlacement placement) {
  return placement == BlobPlacement::tile_centered ? "tile_centered" : "uniform";
}

BlobPlacement parse_blob_placement(std::string_view text) {
  if (text == "tile_centered") return BlobPlacement::tile_centered;
  if (text == "uniform") return BlobPlacement::uniform;
  throw ValidationError("unknown placement '" + std::string(text) + "' (expected tile_centered|uniform)");
}

void SynthOptions::validate() const {
  if (count < 1) throw ValidationError("synth count must be >= 1");
  if (width < 2 || height < 2) throw ValidationError("synth slides must be at least 2x2");
  if (min_blobs < 0 || max_blobs < min_blobs) throw ValidationError("synth blob count range is invalid");
  if (min_axis < 2 || max_axis < min_axis) throw ValidationError("synth axis range is invalid");
  if (max_axis >= std::min(width, height)) throw ValidationError("synth blobs do not fit the slide");
  if (min_intensity < 0 || max_intensity > 255 || max_intensity < min_intensity) {
    throw ValidationError("synth intensity range must lie in [0,255]");
  }
  if (noise < 0 || noise > 127) throw ValidationError("synth noise must lie in [0,127]");
  if (placement == BlobPlacement::tile_centered) {
    const int tiles = (width / tile_size) * (height / tile_size);
    if (tiles < max_blobs) {
      throw ValidationError("tile_centered placement needs at least " + std::to_string(max_blobs) +
                            " whole tiles, slide has " + std::to_string(tiles));
    }
    if (center_size < 1 || center_size > tile_size) throw ValidationError("synth center size is invalid");
  }
}

namespace {

// rng() % range keeps draws identical across standard libraries.
int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::uint64_t slide_seed(std::uint64_t seed, int index) {
  // splitmix64 step so neighbouring indices get unrelated streams
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Ellipse {
  int cx, cy;  // centre, pixels
  int ax, ay;  // full axis lengths
  int intensity;

  Box bounds() const { return Box(cx - ax / 2, cy - ay / 2, cx - ax / 2 + ax, cy - ay / 2 + ay); }
};

std::vector<Ellipse> place_blobs(const SynthOptions& o, std::mt19937_64& rng) {
  const int n = draw(rng, o.min_blobs, o.max_blobs);
  std::vector<Ellipse> blobs;
  if (o.placement == BlobPlacement::tile_centered) {
    const int cols = o.width / o.tile_size;
    const int rows = o.height / o.tile_size;
    std::vector<int> cells(static_cast<std::size_t>(rows * cols));
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    for (int i = 0; i < n; ++i) {
      const int j = draw(rng, i, static_cast<int>(cells.size()) - 1);
      std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    }
    const int jitter = (o.tile_size - o.center_size) / 2;
    for (int i = 0; i < n; ++i) {
      const int cell = cells[static_cast<std::size_t>(i)];
      Ellipse e{};
      e.ax = draw(rng, o.min_axis, o.max_axis);
      e.ay = draw(rng, o.min_axis, o.max_axis);
      e.cx = (cell % cols) * o.tile_size + o.tile_size / 2 + draw(rng, -jitter, jitter);
      e.cy = (cell / cols) * o.tile_size + o.tile_size / 2 + draw(rng, -jitter, jitter);
      e.intensity = draw(rng, o.min_intensity, o.max_intensity);
      blobs.push_back(e);
    }
    return blobs;
  }
  for (int attempt = 0; static_cast<int>(blobs.size()) < n && attempt < 1000; ++attempt) {
    Ellipse e{};
    e.ax = draw(rng, o.min_axis, o.max_axis);
    e.ay = draw(rng, o.min_axis, o.max_axis);
    e.cx = draw(rng, e.ax / 2 + 1, o.width - e.ax / 2 - 1);
    e.cy = draw(rng, e.ay / 2 + 1, o.height - e.ay / 2 - 1);
    e.intensity = draw(rng, o.min_intensity, o.max_intensity);
    const Box b = e.bounds();
    const bool clear = std::none_of(blobs.begin(), blobs.end(), [&](const Ellipse& other) {
      return intersection_area(b, other.bounds()) > 0;
    });
    if (clear) blobs.push_back(e);
  }
  return blobs;
}

std::uint8_t noisy(int base, int noise, std::mt19937_64& rng) {
  return static_cast<std::uint8_t>(std::clamp(base + draw(rng, -noise, noise), 0, 255));
}

}  // namespace

SynthSlide synth_slide(const SynthOptions& o, int index) {
  o.validate();
  std::mt19937_64 rng(slide_seed(o.seed, index));
  const auto blobs = place_blobs(o, rng);

  // Blob id per pixel (-1 = tissue); later blobs paint over earlier ones.
  std::vector<int> owner(static_cast<std::size_t>(o.width) * o.height, -1);
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const Ellipse& e = blobs[b];
    const double rx = e.ax / 2.0;
    const double ry = e.ay / 2.0;
    const auto bounds = intersection(e.bounds(), Box(0, 0, o.width, o.height));
    if (!bounds) continue;
    for (Coord y = bounds->y0(); y < bounds->y1(); ++y) {
      for (Coord x = bounds->x0(); x < bounds->x1(); ++x) {
        const double dx = (static_cast<double>(x) + 0.5 - e.cx) / rx;
        const double dy = (static_cast<double>(y) + 0.5 - e.cy) / ry;
        if (dx * dx + dy * dy <= 1.0) owner[static_cast<std::size_t>(y) * o.width + x] = static_cast<int>(b);
      }
    }
  }

  char id[32];
  std::snprintf(id, sizeof id, "synth_%03d", index);
  SynthSlide slide{id, Image(o.width, o.height), {id, AnnotationSource::ground_truth, {}}};
  struct Extent {
    Coord x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool any = false;
  };
  std::vector<Extent> extents(blobs.size());
  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      const int b = owner[static_cast<std::size_t>(y) * o.width + x];
      auto* p = slide.image.pixel_ptr(x, y);
      if (b < 0) {
        for (int c = 0; c < 3; ++c) p[c] = noisy(o.background[static_cast<std::size_t>(c)], o.noise, rng);
        continue;
      }
      const int level = blobs[static_cast<std::size_t>(b)].intensity;
      for (int c = 0; c < 3; ++c) p[c] = noisy(level, o.noise, rng);
      Extent& ext = extents[static_cast<std::size_t>(b)];
      if (!ext.any) {
        ext = {x, y, x + 1, y + 1, true};
      } else {
        ext.x0 = std::min<Coord>(ext.x0, x);
        ext.y0 = std::min<Coord>(ext.y0, y);
        ext.x1 = std::max<Coord>(ext.x1, x + 1);
        ext.y1 = std::max<Coord>(ext.y1, y + 1);
      }
    }
  }
  for (const auto& ext : extents) {
    if (ext.any) slide.ground_truth.boxes.push_back({Box(ext.x0, ext.y0, ext.x1, ext.y1), std::nullopt, std::nullopt});
  }
  return slide;
}

SynthSet write_synth_set(const SynthOptions& options, const fs::path& out_dir) {
  options.validate();
  SynthSet set;
  for (int i = 0; i < options.count; ++i) {
    SynthSlide s = synth_slide(options, i);
    const fs::path png = out_dir / "slides" / (s.id + ".png");
    save_png(png, s.image);
    const fs::path ann = out_dir / "annotations" / (s.id + ".json");
    save_annotation(ann, s.ground_truth);
    set.manifest.slides.push_back({s.id, png, s.image.width(), s.image.height(), std::nullopt});
    set.annotation_paths.push_back(ann);
  }
  save_manifest(out_dir / "manifest.json", set.manifest);
  return set;
}

}  // namespace wsiroi
