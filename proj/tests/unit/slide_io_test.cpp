#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "test_support.hpp"
#include "wsiroi/errors.hpp"
#include "wsiroi/slide_io.hpp"

using namespace wsiroi;

TEST_SUITE("slide_io") {

TEST_CASE("png round trip is lossless") {
  testing::TempDir dir("png");
  std::mt19937_64 rng(1);
  const Image img = testing::noise_image(rng, 37, 23);
  save_png(dir / "a/b.png", img);
  CHECK(load_image(dir / "a/b.png") == img);
}

TEST_CASE("image loading errors") {
  testing::TempDir dir("imgerr");
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
  try {
    load_image(dir / "missing.png");
  } catch (const FormatError&) {
    FAIL("missing file must not be a format error");
  } catch (const IoError& e) {
    CHECK(e.path() == dir / "missing.png");
  }

  save_png(dir / "ok.png", Image(64, 64, Rgb{9, 9, 9}));
  const std::string bytes = testing::read_file(dir / "ok.png");
  {
    std::ofstream out(dir / "cut.png", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_image(dir / "cut.png"), FormatError);

  { std::ofstream(dir / "x.jpg") << "not really"; }
  CHECK_THROWS_AS(load_image(dir / "x.jpg"), FormatError);
}

TEST_CASE("manifest round trip and dimension checks") {
  testing::TempDir dir("manifest");
  save_png(dir / "slides/s1.png", Image(40, 30, Rgb{1, 2, 3}));
  SlideManifest m;
  m.slides.push_back({"s1", dir / "slides/s1.png", 40, 30, 0.25});
  save_manifest(dir / "manifest.json", m);

  const auto doc = nlohmann::json::parse(testing::read_file(dir / "manifest.json"));
  CHECK(doc["slides"][0]["path"] == "slides/s1.png");

  const SlideManifest back = load_manifest(dir / "manifest.json");
  REQUIRE(back.slides.size() == 1);
  CHECK(back.find("s1").width == 40);
  CHECK(*back.find("s1").mpp == 0.25);
  CHECK_THROWS_AS(back.find("nope"), ValidationError);

  const Slide s = load_slide(back.slides[0]);
  CHECK(s.id() == "s1");
  CHECK(s.bounds() == Box(0, 0, 40, 30));

  ManifestEntry wrong = back.slides[0];
  wrong.width = 41;
  CHECK_THROWS_AS(load_slide(wrong), DimensionMismatchError);

  CHECK_THROWS_AS(load_manifest(dir / "nothing.json"), IoError);
}

TEST_CASE("slide region reads are bounds-checked") {
  std::mt19937_64 rng(2);
  const Image img = testing::noise_image(rng, 50, 40);
  const Slide s("s", img);
  CHECK(s.read_region(Box(10, 5, 20, 25)) == img.crop(Box(10, 5, 20, 25)));
  CHECK(s.read_all() == img);
  CHECK_THROWS_AS(s.read_region(Box(45, 0, 51, 10)), ValidationError);
  CHECK_THROWS_AS(s.read_region(Box(-1, 0, 5, 10)), ValidationError);
}

TEST_CASE("annotation JSON round trip") {
  SlideAnnotation a{"s9", AnnotationSource::model, {}};
  a.boxes.push_back({Box(1, 2, 3, 4), 0.75, 3});
  a.boxes.push_back({Box(10, 20, 30, 40), std::nullopt, std::nullopt});
  const SlideAnnotation back = annotation_from_json(annotation_to_json(a));
  CHECK(back.slide_id == "s9");
  CHECK(back.source == AnnotationSource::model);
  REQUIRE(back.boxes.size() == 2);
  CHECK(back.boxes[0].box == Box(1, 2, 3, 4));
  CHECK(*back.boxes[0].confidence == 0.75);
  CHECK(*back.boxes[0].contributors == 3);
  CHECK_FALSE(back.boxes[1].confidence.has_value());
  CHECK(back.box_list() == std::vector<Box>{Box(1, 2, 3, 4), Box(10, 20, 30, 40)});

  testing::TempDir dir("ann");
  save_annotation(dir / "x/s9.json", a);
  CHECK(annotation_to_json(load_annotation(dir / "x/s9.json")) == annotation_to_json(a));
}

TEST_CASE("malformed annotations are rejected") {
  CHECK_THROWS_AS(annotation_from_json("{"), ValidationError);
  CHECK_THROWS_AS(annotation_from_json(R"({"slide_id":"a","source":"robot","boxes":[]})"), ValidationError);
  CHECK_THROWS_AS(annotation_from_json(R"({"slide_id":"a","source":"human","boxes":[{"x0":0,"y0":0,"x1":0,"y1":5}]})"),
                  ValidationError);
  const auto a = testing::annotation("a", AnnotationSource::human, {Box(0, 0, 10, 10)});
  CHECK_NOTHROW(validate_annotation(a, 10, 10));
  CHECK_THROWS_AS(validate_annotation(a, 9, 10), ValidationError);
}

TEST_CASE("downsample rounds block means half up") {
  const Image img(2, 2, std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 255, 255, 255, 255, 255, 255});
  const Image d = downsample(img, 2);
  REQUIRE(d.width() == 1);
  CHECK(d.at(0, 0) == Rgb{128, 128, 128});
  CHECK(downsample(img, 1) == img);
  // Partial edge blocks average only the pixels present.
  const Image odd(3, 1, std::vector<std::uint8_t>{10, 10, 10, 20, 20, 20, 101, 0, 0});
  const Image od = downsample(odd, 2);
  CHECK(od.width() == 2);
  CHECK(od.at(0, 0)[0] == 15);
  CHECK(od.at(1, 0) == Rgb{101, 0, 0});
  CHECK_THROWS_AS(downsample(img, 0), ValidationError);
}

}  // TEST_SUITE
