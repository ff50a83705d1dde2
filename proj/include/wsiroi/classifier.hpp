#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsiroi/image.hpp"

namespace wsiroi {

struct ClassScores {
  double p_roi = 0.0;
  double p_background = 1.0;
};

// Scores input_size x input_size patches. Implementations that are not safe
// for concurrent use report thread_safe() == false; callers then clone one
// instance per worker.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual std::string name() const = 0;
  virtual int input_size() const = 0;
  virtual bool thread_safe() const = 0;
  virtual std::unique_ptr<ClassifierBackend> clone() const = 0;

  // Patches are already validated to input_size x input_size.
  virtual ClassScores score(const Image& patch) = 0;
  virtual std::vector<ClassScores> score_many(std::span<const Image> patches);
};

// Validates every patch size before the backend sees any of them. Output
// order matches input order.
std::vector<ClassScores> score_batch(ClassifierBackend& backend, std::span<const Image> patches);

// Deterministic stand-in: dark patches score as roi.
//   p_roi = 1 - mean_over_pixels(round((r+g+b)/3)) / 255
class StubBackend final : public ClassifierBackend {
 public:
  explicit StubBackend(int input_size = 224) : input_size_(input_size) {}

  std::string name() const override { return "stub"; }
  int input_size() const override { return input_size_; }
  bool thread_safe() const override { return true; }
  std::unique_ptr<ClassifierBackend> clone() const override {
    return std::make_unique<StubBackend>(*this);
  }
  ClassScores score(const Image& patch) override;

 private:
  int input_size_;
};

std::unique_ptr<ClassifierBackend> stub_backend(int input_size = 224);

// Sidecar describing how to feed an exported model.
struct ModelManifest {
  int input_size = 224;
  std::string channel_order = "RGB";        // order of the three input channels
  std::array<double, 3> means{0.0, 0.0, 0.0};  // subtracted per channel, in channel_order
  double scale = 1.0;                       // applied after mean subtraction
  std::string layout = "NCHW";              // or "NHWC"
  std::vector<std::string> class_order{"background", "roi"};
  std::filesystem::path model_path;         // resolved against the manifest directory
  nlohmann::json metadata = nlohmann::json::object();

  void validate() const;
};

ModelManifest load_model_manifest(const std::filesystem::path& path);
ModelManifest model_manifest_from_json(const nlohmann::json& doc,
                                       const std::filesystem::path& base_dir);

// ONNX graph run through OpenCV's DNN module. Not thread safe.
std::unique_ptr<ClassifierBackend> load_model_backend(const ModelManifest& manifest);

}  // namespace wsiroi
