#include "wsiroi/slide_io.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "file_util.hpp"
#include "wsiroi/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsiroi {

Slide::Slide(std::string id, std::shared_ptr<const SlideSource> source,
             std::optional<double> microns_per_pixel)
    : id_(std::move(id)), source_(std::move(source)), mpp_(microns_per_pixel) {
  if (!source_) throw ValidationError("slide '" + id_ + "' has no pixel source");
  if (source_->width() < 1 || source_->height() < 1) {
    throw ValidationError("slide '" + id_ + "' has empty dimensions");
  }
}

Slide::Slide(std::string id, Image image, std::optional<double> microns_per_pixel)
    : Slide(std::move(id), std::make_shared<RasterSlideSource>(std::move(image)),
            microns_per_pixel) {}

Image Slide::read_region(const Box& region) const {
  if (!bounds().contains(region)) {
    throw ValidationError("region " + region.to_string() + " outside slide '" + id_ + "' (" +
                          std::to_string(width()) + "x" + std::to_string(height()) + ")");
  }
  return source_->read_region(region);
}

const ManifestEntry& SlideManifest::find(std::string_view id) const {
  auto it = std::find_if(slides.begin(), slides.end(),
                         [&](const ManifestEntry& e) { return e.id == id; });
  if (it == slides.end()) throw ValidationError("slide '" + std::string(id) + "' not in manifest");
  return *it;
}

SlideManifest load_manifest(const fs::path& path) {
  const std::string text = detail::read_text_file(path);
  SlideManifest manifest;
  try {
    const json doc = json::parse(text);
    for (const auto& item : doc.at("slides")) {
      ManifestEntry entry;
      entry.id = item.at("id").get<std::string>();
      fs::path p = item.at("path").get<std::string>();
      entry.path = p.is_absolute() ? p : path.parent_path() / p;
      entry.width = item.at("width").get<int>();
      entry.height = item.at("height").get<int>();
      if (item.contains("mpp") && !item.at("mpp").is_null()) entry.mpp = item.at("mpp").get<double>();
      if (entry.width < 1 || entry.height < 1) {
        throw ValidationError("manifest entry '" + entry.id + "' has non-positive dimensions");
      }
      manifest.slides.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed slide manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

void save_manifest(const fs::path& path, const SlideManifest& manifest) {
  json slides = json::array();
  const fs::path base = path.parent_path();
  for (const auto& e : manifest.slides) {
    fs::path p = e.path;
    if (!base.empty() && p.is_relative() == base.is_relative()) {
      const fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    json item = {{"id", e.id}, {"path", p.generic_string()}, {"width", e.width}, {"height", e.height}};
    if (e.mpp) item["mpp"] = *e.mpp;
    slides.push_back(std::move(item));
  }
  detail::write_text_file(path, json{{"slides", slides}}.dump(2) + "\n");
}

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

Image from_bgr_mat(const cv::Mat& bgr) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(bgr.cols) * bgr.rows * 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    auto* out = rgb.data() + 3 * static_cast<std::size_t>(y) * bgr.cols;
    for (int x = 0; x < bgr.cols; ++x) {
      out[3 * x] = row[x][2];
      out[3 * x + 1] = row[x][1];
      out[3 * x + 2] = row[x][0];
    }
  }
  return Image(bgr.cols, bgr.rows, std::move(rgb));
}

}  // namespace

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("image file not found", path);
  const std::string ext = lower_extension(path);
  if (ext != ".png" && ext != ".tif" && ext != ".tiff") {
    throw FormatError("unsupported raster format '" + ext + "'", path);
  }
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw FormatError(std::string("cannot decode raster (") + e.what() + ")", path);
  }
  if (mat.empty() || mat.type() != CV_8UC3) throw FormatError("cannot decode raster", path);
  return from_bgr_mat(mat);
}

void save_png(const fs::path& path, const Image& image) {
  if (image.empty()) throw ValidationError("refusing to write an empty image to " + path.string());
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const auto* p = image.pixel_ptr(x, y);
      row[x] = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr, {cv::IMWRITE_PNG_COMPRESSION, 3});
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw IoError("cannot write PNG", path);
}

Slide load_slide(const fs::path& path, const ManifestEntry& entry) {
  Image image = load_image(path);
  if (image.width() != entry.width || image.height() != entry.height) {
    throw DimensionMismatchError("slide '" + entry.id + "': manifest says " +
                                 std::to_string(entry.width) + "x" + std::to_string(entry.height) +
                                 " but " + path.string() + " is " + std::to_string(image.width()) +
                                 "x" + std::to_string(image.height()));
  }
  return Slide(entry.id, std::move(image), entry.mpp);
}

Slide load_slide(const ManifestEntry& entry) { return load_slide(entry.path, entry); }

std::string_view to_string(AnnotationSource source) {
  switch (source) {
    case AnnotationSource::ground_truth: return "ground_truth";
    case AnnotationSource::human: return "human";
    case AnnotationSource::model: return "model";
  }
  return "ground_truth";
}

AnnotationSource parse_annotation_source(std::string_view text) {
  if (text == "ground_truth") return AnnotationSource::ground_truth;
  if (text == "human") return AnnotationSource::human;
  if (text == "model") return AnnotationSource::model;
  throw ValidationError("unknown annotation source '" + std::string(text) + "'");
}

std::vector<Box> SlideAnnotation::box_list() const {
  std::vector<Box> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(b.box);
  return out;
}

std::string annotation_to_json(const SlideAnnotation& annotation) {
  json boxes = json::array();
  for (const auto& b : annotation.boxes) {
    json item = {{"x0", b.box.x0()}, {"y0", b.box.y0()}, {"x1", b.box.x1()},
                 {"y1", b.box.y1()}, {"label", "roi"}};
    if (b.confidence) item["confidence"] = *b.confidence;
    if (b.contributors) item["contributors"] = *b.contributors;
    boxes.push_back(std::move(item));
  }
  const json doc = {{"slide_id", annotation.slide_id},
                    {"source", std::string(to_string(annotation.source))},
                    {"boxes", boxes}};
  return doc.dump(2) + "\n";
}

SlideAnnotation annotation_from_json(std::string_view text) {
  SlideAnnotation ann;
  try {
    const json doc = json::parse(text);
    ann.slide_id = doc.at("slide_id").get<std::string>();
    ann.source = parse_annotation_source(doc.at("source").get<std::string>());
    for (const auto& item : doc.at("boxes")) {
      const std::string label = item.value("label", std::string("roi"));
      if (label != "roi") throw ValidationError("unsupported box label '" + label + "'");
      AnnotatedBox b{Box(item.at("x0").get<Coord>(), item.at("y0").get<Coord>(),
                         item.at("x1").get<Coord>(), item.at("y1").get<Coord>()),
                     std::nullopt, std::nullopt};
      if (item.contains("confidence")) b.confidence = item.at("confidence").get<double>();
      if (item.contains("contributors")) b.contributors = item.at("contributors").get<int>();
      ann.boxes.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed annotation JSON: ") + e.what());
  }
  return ann;
}

SlideAnnotation load_annotation(const fs::path& path) {
  try {
    return annotation_from_json(detail::read_text_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_annotation(const fs::path& path, const SlideAnnotation& annotation) {
  detail::write_text_file(path, annotation_to_json(annotation));
}

void validate_annotation(const SlideAnnotation& annotation, int width, int height) {
  const Box bounds(0, 0, width, height);
  for (const auto& b : annotation.boxes) {
    if (!bounds.contains(b.box)) {
      throw ValidationError("annotation box " + b.box.to_string() + " for slide '" +
                            annotation.slide_id + "' leaves the " + std::to_string(width) + "x" +
                            std::to_string(height) + " slide");
    }
  }
}

Image downsample(const Image& image, int factor) {
  if (factor < 1) throw ValidationError("downsample factor must be >= 1");
  if (factor == 1) return image;
  const int ow = (image.width() + factor - 1) / factor;
  const int oh = (image.height() + factor - 1) / factor;
  Image out(ow, oh);
  for (int by = 0; by < oh; ++by) {
    const int y0 = by * factor;
    const int y1 = std::min(y0 + factor, image.height());
    for (int bx = 0; bx < ow; ++bx) {
      const int x0 = bx * factor;
      const int x1 = std::min(x0 + factor, image.width());
      std::uint64_t sum[3] = {0, 0, 0};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const auto* p = image.pixel_ptr(x, y);
          sum[0] += p[0];
          sum[1] += p[1];
          sum[2] += p[2];
        }
      }
      const std::uint64_t n = static_cast<std::uint64_t>(x1 - x0) * (y1 - y0);
      auto* o = out.pixel_ptr(bx, by);
      // floor(sum/n + 1/2) in integers
      for (int c = 0; c < 3; ++c) o[c] = static_cast<std::uint8_t>((2 * sum[c] + n) / (2 * n));
    }
  }
  return out;
}

Image downsample(const Slide& slide, int factor) { return downsample(slide.read_all(), factor); }

}  // namespace wsiroi
