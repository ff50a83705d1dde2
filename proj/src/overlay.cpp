#include "wsiroi/overlay.hpp"

#include <algorithm>

#include "wsiroi/errors.hpp"

namespace wsiroi {

std::vector<Rgb> overlay_palette(std::span<const SlideAnnotation> annotations) {
  if (annotations.size() > 4) throw ValidationError("at most 4 annotation layers can be overlaid");
  std::vector<Rgb> colors;
  int references = 0;
  int models = 0;
  for (const auto& a : annotations) {
    if (a.source == AnnotationSource::model) {
      colors.push_back(models == 0 ? kModelBlue : models == 1 ? kSecondModelYellow : kExtraGreen);
      ++models;
    } else {
      colors.push_back(references == 0 ? kReferenceRed : kExtraGreen);
      ++references;
    }
  }
  return colors;
}

int default_overlay_factor(int width, int height, int max_side) {
  const int longest = std::max(width, height);
  return std::max(1, (longest + max_side - 1) / max_side);
}

namespace {

Coord scale_half_up(Coord v, int factor) { return (2 * v + factor) / (2 * static_cast<Coord>(factor)); }

void draw_outline(Image& img, const Box& box, int factor, Rgb color) {
  const Coord w = img.width();
  const Coord h = img.height();
  Coord x0 = std::clamp<Coord>(scale_half_up(box.x0(), factor), 0, w - 1);
  Coord y0 = std::clamp<Coord>(scale_half_up(box.y0(), factor), 0, h - 1);
  Coord x1 = std::clamp<Coord>(scale_half_up(box.x1(), factor), 0, w);
  Coord y1 = std::clamp<Coord>(scale_half_up(box.y1(), factor), 0, h);
  x1 = std::max(x1, x0 + 1);
  y1 = std::max(y1, y0 + 1);
  constexpr Coord kThickness = 2;
  for (Coord y = y0; y < y1; ++y) {
    const bool edge_row = y < y0 + kThickness || y >= y1 - kThickness;
    for (Coord x = x0; x < x1; ++x) {
      if (edge_row || x < x0 + kThickness || x >= x1 - kThickness) {
        std::copy(color.begin(), color.end(), img.pixel_ptr(static_cast<int>(x), static_cast<int>(y)));
      }
    }
  }
}

}  // namespace

Image render_overlay(const Image& thumbnail, std::span<const SlideAnnotation> annotations,
                     const std::vector<Rgb>& palette, int factor) {
  if (factor < 1) throw ValidationError("overlay factor must be >= 1");
  if (palette.size() != annotations.size()) throw ValidationError("one colour per annotation layer required");
  Image out = thumbnail;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    for (const auto& b : annotations[i].boxes) draw_outline(out, b.box, factor, palette[i]);
  }
  return out;
}

Image render_overlay(const Slide& slide, std::span<const SlideAnnotation> annotations, int factor) {
  if (factor < 1) throw ValidationError("overlay factor must be >= 1");
  for (const auto& a : annotations) {
    if (a.slide_id != slide.id()) {
      throw ValidationError("annotation for slide '" + a.slide_id + "' cannot be drawn on slide '" +
                            slide.id() + "'");
    }
  }
  const auto palette = overlay_palette(annotations);
  return render_overlay(downsample(slide, factor), annotations, palette, factor);
}

}  // namespace wsiroi
