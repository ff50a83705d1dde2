#include "wsiroi/classifier.hpp"

#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "file_util.hpp"
#include "wsiroi/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsiroi {

std::vector<ClassScores> ClassifierBackend::score_many(std::span<const Image> patches) {
  std::vector<ClassScores> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(score(p));
  return out;
}

std::vector<ClassScores> score_batch(ClassifierBackend& backend, std::span<const Image> patches) {
  const int n = backend.input_size();
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].width() != n || patches[i].height() != n) {
      throw ValidationError("patch " + std::to_string(i) + " is " +
                            std::to_string(patches[i].width()) + "x" +
                            std::to_string(patches[i].height()) + ", backend '" + backend.name() +
                            "' expects " + std::to_string(n) + "x" + std::to_string(n));
    }
  }
  if (patches.empty()) return {};
  return backend.score_many(patches);
}

ClassScores StubBackend::score(const Image& patch) {
  std::uint64_t total = 0;
  const auto bytes = patch.bytes();
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const unsigned s = bytes[i] + bytes[i + 1] + bytes[i + 2];
    total += (s + 1) / 3;  // round(s/3); s/3 never lands on .5
  }
  const double mean_level = static_cast<double>(total) / static_cast<double>(patch.pixel_count());
  const double p_roi = 1.0 - mean_level / 255.0;
  return {p_roi, 1.0 - p_roi};
}

std::unique_ptr<ClassifierBackend> stub_backend(int input_size) {
  return std::make_unique<StubBackend>(input_size);
}

void ModelManifest::validate() const {
  if (input_size != 224) {
    throw ValidationError("model manifest input_size must be 224, got " + std::to_string(input_size));
  }
  if (channel_order != "RGB" && channel_order != "BGR") {
    throw ValidationError("model manifest channel_order must be RGB or BGR, got '" + channel_order + "'");
  }
  if (layout != "NCHW" && layout != "NHWC") {
    throw ValidationError("model manifest layout must be NCHW or NHWC, got '" + layout + "'");
  }
  if (class_order != std::vector<std::string>{"background", "roi"}) {
    throw ValidationError("model manifest class_order must be [\"background\", \"roi\"]");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("model manifest scale must be > 0");
  if (model_path.empty()) throw ValidationError("model manifest has no model_path");
}

ModelManifest model_manifest_from_json(const json& doc, const fs::path& base_dir) {
  ModelManifest m;
  try {
    m.input_size = doc.at("input_size").get<int>();
    m.channel_order = doc.at("channel_order").get<std::string>();
    const auto means = doc.at("means").get<std::vector<double>>();
    if (means.size() != 3) throw ValidationError("model manifest means must hold 3 values");
    std::copy(means.begin(), means.end(), m.means.begin());
    m.class_order = doc.at("class_order").get<std::vector<std::string>>();
    const fs::path model = doc.at("model_path").get<std::string>();
    m.model_path = model.is_absolute() ? model : base_dir / model;
    if (doc.contains("metadata")) m.metadata = doc.at("metadata");
    m.scale = doc.value("scale", 1.0);
    m.layout = doc.value("layout", std::string("NCHW"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model manifest: ") + e.what());
  }
  m.validate();
  return m;
}

ModelManifest load_model_manifest(const fs::path& path) {
  const std::string text = detail::read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("model manifest " + path.string() + " is not JSON: " + e.what());
  }
  return model_manifest_from_json(doc, path.parent_path());
}

namespace {

class OnnxBackend final : public ClassifierBackend {
 public:
  explicit OnnxBackend(ModelManifest manifest) : manifest_(std::move(manifest)) {
    manifest_.validate();
    if (!fs::exists(manifest_.model_path)) throw IoError("model file not found", manifest_.model_path);
    try {
      net_ = cv::dnn::readNetFromONNX(manifest_.model_path.string());
    } catch (const cv::Exception& e) {
      throw FormatError(std::string("cannot parse ONNX graph (") + e.what() + ")", manifest_.model_path);
    }
    if (net_.empty()) throw FormatError("cannot parse ONNX graph", manifest_.model_path);
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    probe();
  }

  std::string name() const override { return "onnx:" + manifest_.model_path.filename().string(); }
  int input_size() const override { return manifest_.input_size; }
  bool thread_safe() const override { return false; }
  std::unique_ptr<ClassifierBackend> clone() const override {
    return std::make_unique<OnnxBackend>(manifest_);
  }

  ClassScores score(const Image& patch) override {
    const cv::Mat out = run(to_blob(patch));
    const auto* v = out.ptr<float>();
    return {static_cast<double>(v[1]), static_cast<double>(v[0])};
  }

 private:
  cv::Mat to_blob(const Image& patch) const {
    const int s = manifest_.input_size;
    const bool nchw = manifest_.layout == "NCHW";
    const int dims[4] = {1, nchw ? 3 : s, s, nchw ? s : 3};
    cv::Mat blob(4, dims, CV_32F);
    auto* dst = blob.ptr<float>();
    const bool bgr = manifest_.channel_order == "BGR";
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const auto* p = patch.pixel_ptr(x, y);
        const std::size_t px = static_cast<std::size_t>(y) * s + x;
        for (int c = 0; c < 3; ++c) {
          const int src = bgr ? 2 - c : c;
          const float v = static_cast<float>((p[src] - manifest_.means[static_cast<std::size_t>(c)]) * manifest_.scale);
          dst[nchw ? c * plane + px : px * 3 + c] = v;
        }
      }
    }
    return blob;
  }

  cv::Mat run(const cv::Mat& blob) {
    net_.setInput(blob);
    cv::Mat out;
    try {
      out = net_.forward();
    } catch (const cv::Exception& e) {
      throw ShapeMismatchError("model " + manifest_.model_path.string() +
                               " rejected a 1x" + std::to_string(manifest_.input_size) + "x" +
                               std::to_string(manifest_.input_size) + "x3 input: " + e.what());
    }
    if (out.total() != 2 || out.depth() != CV_32F) {
      throw ShapeMismatchError("model " + manifest_.model_path.string() + " produced " +
                               std::to_string(out.total()) + " outputs, expected 2 class probabilities");
    }
    return out.isContinuous() ? out : out.clone();
  }

  // One forward pass on a mid-gray patch to check the graph's input/output contract.
  void probe() {
    const Image gray(manifest_.input_size, manifest_.input_size, Rgb{128, 128, 128});
    const cv::Mat out = run(to_blob(gray));
    const auto* v = out.ptr<float>();
    const double sum = static_cast<double>(v[0]) + v[1];
    if (v[0] < 0.0f || v[1] < 0.0f || std::abs(sum - 1.0) > 1e-4) {
      throw ShapeMismatchError("model " + manifest_.model_path.string() +
                               " does not end in a 2-way softmax (outputs " + std::to_string(v[0]) +
                               ", " + std::to_string(v[1]) + ")");
    }
  }

  ModelManifest manifest_;
  cv::dnn::Net net_;
};

}  // namespace

std::unique_ptr<ClassifierBackend> load_model_backend(const ModelManifest& manifest) {
  return std::make_unique<OnnxBackend>(manifest);
}

}  // namespace wsiroi
