#pragma once

#include <span>

#include "wsiroi/image.hpp"
#include "wsiroi/slide_io.hpp"

namespace wsiroi {

inline constexpr Rgb kReferenceRed{255, 0, 0};
inline constexpr Rgb kModelBlue{0, 0, 255};
inline constexpr Rgb kSecondModelYellow{255, 255, 0};
inline constexpr Rgb kExtraGreen{0, 200, 0};

// Outline colours for up to four annotation layers: the first ground-truth or
// human layer red, the first model layer blue, the second model layer yellow,
// anything else green.
std::vector<Rgb> overlay_palette(std::span<const SlideAnnotation> annotations);

// Smallest factor that brings the long side to at most max_side pixels.
int default_overlay_factor(int width, int height, int max_side = 2048);

// Downsampled slide with 2-px box outlines drawn inside each scaled box.
Image render_overlay(const Slide& slide, std::span<const SlideAnnotation> annotations, int factor);
Image render_overlay(const Image& thumbnail, std::span<const SlideAnnotation> annotations,
                     const std::vector<Rgb>& palette, int factor);

}  // namespace wsiroi
