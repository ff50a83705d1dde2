#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wsiroi/geometry.hpp"
#include "wsiroi/image.hpp"

namespace wsiroi {

// Pixel provider behind a Slide. Flat rasters today; a pyramidal reader only
// needs to implement this interface.
class SlideSource {
 public:
  virtual ~SlideSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  // `region` is already bounds-checked by Slide.
  virtual Image read_region(const Box& region) const = 0;
};

class RasterSlideSource final : public SlideSource {
 public:
  explicit RasterSlideSource(Image image) : image_(std::move(image)) {}
  int width() const override { return image_.width(); }
  int height() const override { return image_.height(); }
  Image read_region(const Box& region) const override { return image_.crop(region); }
  const Image& image() const noexcept { return image_; }

 private:
  Image image_;
};

// Immutable after construction; safe to share across reader threads.
class Slide {
 public:
  Slide(std::string id, std::shared_ptr<const SlideSource> source,
        std::optional<double> microns_per_pixel = std::nullopt);
  Slide(std::string id, Image image, std::optional<double> microns_per_pixel = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  int width() const noexcept { return source_->width(); }
  int height() const noexcept { return source_->height(); }
  Box bounds() const { return Box(0, 0, width(), height()); }
  std::optional<double> microns_per_pixel() const noexcept { return mpp_; }

  Image read_region(const Box& region) const;
  Image read_all() const { return read_region(bounds()); }

 private:
  std::string id_;
  std::shared_ptr<const SlideSource> source_;
  std::optional<double> mpp_;
};

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory on load
  int width = 0;
  int height = 0;
  std::optional<double> mpp;
};

struct SlideManifest {
  std::vector<ManifestEntry> slides;

  const ManifestEntry& find(std::string_view id) const;
};

SlideManifest load_manifest(const std::filesystem::path& path);
// Paths are written relative to the manifest directory when possible.
void save_manifest(const std::filesystem::path& path, const SlideManifest& manifest);

// Supported: .png, .tif, .tiff (8-bit). Raises IoError (missing file),
// FormatError (unsupported or undecodable), DimensionMismatchError.
Slide load_slide(const std::filesystem::path& path, const ManifestEntry& entry);
Slide load_slide(const ManifestEntry& entry);

Image load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);

enum class AnnotationSource { ground_truth, human, model };

std::string_view to_string(AnnotationSource source);
AnnotationSource parse_annotation_source(std::string_view text);

struct AnnotatedBox {
  Box box;
  // Optional detector metadata; only written for model annotations.
  std::optional<double> confidence;
  std::optional<int> contributors;
};

struct SlideAnnotation {
  std::string slide_id;
  AnnotationSource source = AnnotationSource::ground_truth;
  std::vector<AnnotatedBox> boxes;

  std::vector<Box> box_list() const;
};

SlideAnnotation load_annotation(const std::filesystem::path& path);
void save_annotation(const std::filesystem::path& path, const SlideAnnotation& annotation);
std::string annotation_to_json(const SlideAnnotation& annotation);
SlideAnnotation annotation_from_json(std::string_view text);

// Throws ValidationError when any box leaves [0,width) x [0,height).
void validate_annotation(const SlideAnnotation& annotation, int width, int height);

// Box-filter mean over factor x factor blocks (partial at the right/bottom
// edges), rounded half up. Output is ceil(w/f) x ceil(h/f).
Image downsample(const Image& image, int factor);
Image downsample(const Slide& slide, int factor);

}  // namespace wsiroi
