#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "test_support.hpp"
#include "wsiroi/classifier.hpp"
#include "wsiroi/errors.hpp"

using namespace wsiroi;

namespace {

const std::filesystem::path kModelDir = testing::fixture_dir() / "model";

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("stub scores darkness") {
  auto stub = stub_backend();
  const ClassScores gray = stub->score(Image(224, 224, Rgb{128, 128, 128}));
  CHECK(gray.p_roi == doctest::Approx(127.0 / 255.0).epsilon(1e-12));
  CHECK(stub->score(Image(224, 224, Rgb{255, 255, 255})).p_roi == 0.0);
  CHECK(stub->score(Image(224, 224, Rgb{0, 0, 0})).p_roi == 1.0);
  // Per-pixel grey level is round((r+g+b)/3): (10+11+11)/3 = 10.67 -> 11.
  CHECK(stub->score(Image(224, 224, Rgb{10, 11, 11})).p_roi == doctest::Approx(1.0 - 11.0 / 255.0));
  CHECK(stub->thread_safe());
}

TEST_CASE("stub outputs are probability pairs and batch independent") {
  auto stub = stub_backend();
  std::mt19937_64 rng(12);
  std::vector<Image> batch;
  for (int i = 0; i < 12; ++i) batch.push_back(testing::noise_image(rng, 224, 224));
  const auto all = score_batch(*stub, batch);
  REQUIRE(all.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(all[i].p_roi >= 0.0);
    CHECK(all[i].p_roi <= 1.0);
    CHECK(std::abs(all[i].p_roi + all[i].p_background - 1.0) <= 1e-5);
    const auto single = score_batch(*stub, std::span<const Image>(&batch[i], 1));
    CHECK(std::abs(single[0].p_roi - all[i].p_roi) <= 1e-6);
  }
}

TEST_CASE("score_batch rejects mis-sized patches") {
  auto stub = stub_backend();
  const std::vector<Image> bad{Image(224, 224), Image(223, 224)};
  CHECK_THROWS_AS(score_batch(*stub, bad), ValidationError);
  CHECK(score_batch(*stub, std::span<const Image>{}).empty());
}

TEST_CASE("model manifest parsing") {
  const ModelManifest m = load_model_manifest(kModelDir / "tiny_roi.json");
  CHECK(m.input_size == 224);
  CHECK(m.channel_order == "RGB");
  CHECK(m.class_order == std::vector<std::string>{"background", "roi"});
  CHECK(m.model_path == kModelDir / "tiny_roi.onnx");
  CHECK(m.metadata["fixture"] == "tiny_roi");

  nlohmann::json doc = nlohmann::json::parse(testing::read_file(kModelDir / "tiny_roi.json"));
  auto bad = [&](auto mutate) {
    nlohmann::json d = doc;
    mutate(d);
    return d;
  };
  CHECK_THROWS_AS(model_manifest_from_json(bad([](auto& d) { d["input_size"] = 128; }), kModelDir),
                  ValidationError);
  CHECK_THROWS_AS(model_manifest_from_json(bad([](auto& d) { d["channel_order"] = "GRB"; }), kModelDir),
                  ValidationError);
  CHECK_THROWS_AS(model_manifest_from_json(bad([](auto& d) { d["means"] = {1, 2}; }), kModelDir),
                  ValidationError);
  CHECK_THROWS_AS(
      model_manifest_from_json(bad([](auto& d) { d["class_order"] = {"roi", "background"}; }), kModelDir),
      ValidationError);
  CHECK_THROWS_AS(model_manifest_from_json(bad([](auto& d) { d.erase("model_path"); }), kModelDir),
                  ValidationError);
}

TEST_CASE("onnx model reproduces its golden scores") {
  auto backend = load_model_backend(load_model_manifest(kModelDir / "tiny_roi.json"));
  const auto golden = nlohmann::json::parse(testing::read_file(kModelDir / "golden_scores.json"));
  const Image patch = load_image(kModelDir / golden["patch"].get<std::string>());
  const ClassScores s = backend->score(patch);
  CHECK(std::abs(s.p_roi - golden["p_roi"].get<double>()) <= 1e-4);
  CHECK(std::abs(s.p_background - golden["p_background"].get<double>()) <= 1e-4);
  CHECK_FALSE(backend->thread_safe());

  auto copy = backend->clone();
  CHECK(copy->score(patch).p_roi == s.p_roi);
}

TEST_CASE("onnx outputs sum to one on random inputs") {
  auto backend = load_model_backend(load_model_manifest(kModelDir / "tiny_roi.json"));
  std::mt19937_64 rng(100);
  std::vector<Image> batch;
  for (int i = 0; i < 100; ++i) batch.push_back(testing::noise_image(rng, 224, 224));
  const auto scores = score_batch(*backend, batch);
  for (const auto& s : scores) {
    CHECK(std::abs(s.p_roi + s.p_background - 1.0) <= 1e-5);
    CHECK(s.p_roi >= 0.0);
    CHECK(s.p_roi <= 1.0);
  }
  // Splitting the batch changes nothing.
  const auto head = score_batch(*backend, std::span<const Image>(batch.data(), 37));
  const auto tail = score_batch(*backend, std::span<const Image>(batch.data() + 37, 63));
  for (std::size_t i = 0; i < 37; ++i) CHECK(std::abs(head[i].p_roi - scores[i].p_roi) <= 1e-6);
  for (std::size_t i = 0; i < 63; ++i) CHECK(std::abs(tail[i].p_roi - scores[37 + i].p_roi) <= 1e-6);
}

TEST_CASE("onnx load failures") {
  CHECK_THROWS_AS(load_model_backend(load_model_manifest(kModelDir / "three_class.json")),
                  ShapeMismatchError);
  CHECK_THROWS_AS(load_model_backend(load_model_manifest(kModelDir / "corrupt.json")), FormatError);

  ModelManifest missing = load_model_manifest(kModelDir / "tiny_roi.json");
  missing.model_path = kModelDir / "absent.onnx";
  try {
    load_model_backend(missing);
    FAIL("expected IoError");
  } catch (const FormatError&) {
    FAIL("a missing model is an I/O error, not a format error");
  } catch (const IoError& e) {
    CHECK(e.path() == missing.model_path);
  }
  CHECK_THROWS_AS(load_model_manifest(kModelDir / "absent.json"), IoError);
}

}  // TEST_SUITE
