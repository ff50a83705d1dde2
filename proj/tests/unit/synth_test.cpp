#include <doctest.h>

#include <set>

#include "test_support.hpp"
#include "wsiroi/errors.hpp"
#include "wsiroi/synth.hpp"
#include "wsiroi/tiler.hpp"

using namespace wsiroi;

TEST_SUITE("synth") {

TEST_CASE("synthetic slides are reproducible per seed and index") {
  SynthOptions opts;
  opts.seed = 7;
  const SynthSlide a = synth_slide(opts, 3);
  const SynthSlide b = synth_slide(opts, 3);
  CHECK(a.id == "synth_003");
  CHECK(a.image == b.image);
  CHECK(annotation_to_json(a.ground_truth) == annotation_to_json(b.ground_truth));
  CHECK_FALSE(synth_slide(opts, 4).image == a.image);
  opts.seed = 8;
  CHECK_FALSE(synth_slide(opts, 3).image == a.image);
}

TEST_CASE("ground truth boxes are tight around the dark blobs") {
  SynthOptions opts;
  opts.seed = 1;
  for (int i = 0; i < 4; ++i) {
    const SynthSlide s = synth_slide(opts, i);
    const auto& boxes = s.ground_truth.boxes;
    CHECK(boxes.size() >= 3);
    CHECK(boxes.size() <= 8);
    CHECK(s.ground_truth.source == AnnotationSource::ground_truth);
    CHECK_NOTHROW(validate_annotation(s.ground_truth, s.image.width(), s.image.height()));
    for (const auto& b : boxes) {
      CHECK(b.box.width() >= 70);
      CHECK(b.box.width() <= 170);
      // Dark pixels reach every edge of the box.
      auto dark = [&](Coord x, Coord y) {
        const auto p = s.image.at(static_cast<int>(x), static_cast<int>(y));
        return p[0] + p[1] + p[2] < 3 * 150;
      };
      bool top = false, bottom = false, left = false, right = false;
      for (Coord x = b.box.x0(); x < b.box.x1(); ++x) {
        top |= dark(x, b.box.y0());
        bottom |= dark(x, b.box.y1() - 1);
      }
      for (Coord y = b.box.y0(); y < b.box.y1(); ++y) {
        left |= dark(b.box.x0(), y);
        right |= dark(b.box.x1() - 1, y);
      }
      CHECK((top && bottom && left && right));
    }
    for (std::size_t i2 = 0; i2 < boxes.size(); ++i2)
      for (std::size_t j = i2 + 1; j < boxes.size(); ++j) CHECK(intersection_area(boxes[i2].box, boxes[j].box) == 0);
  }
}

TEST_CASE("tile-centred placement puts each blob in its own tile") {
  SynthOptions opts;
  opts.seed = 7;
  const TileGrid grid = tile_grid("x", opts.width, opts.height, opts.tile_size);
  for (int i = 0; i < 10; ++i) {
    const SynthSlide s = synth_slide(opts, i);
    std::set<std::size_t> used;
    for (const auto& b : s.ground_truth.boxes) {
      const Coord cx = (b.box.x0() + b.box.x1()) / 2, cy = (b.box.y0() + b.box.y1()) / 2;
      const std::size_t tile = static_cast<std::size_t>(cy / 244 * grid.cols + cx / 244);
      CHECK(used.insert(tile).second);
    }
  }
}

TEST_CASE("uniform placement is available") {
  SynthOptions opts;
  opts.placement = BlobPlacement::uniform;
  const SynthSlide s = synth_slide(opts, 0);
  CHECK(s.ground_truth.boxes.size() >= 3);
  CHECK(parse_blob_placement("uniform") == BlobPlacement::uniform);
  CHECK_THROWS_AS(parse_blob_placement("grid"), ValidationError);
}

TEST_CASE("synth option validation") {
  SynthOptions opts;
  opts.min_blobs = 9;
  CHECK_THROWS_AS(opts.validate(), ValidationError);
  opts = {};
  opts.count = 0;
  CHECK_THROWS_AS(opts.validate(), ValidationError);
  opts = {};
  opts.max_axis = 2000;
  CHECK_THROWS_AS(opts.validate(), ValidationError);
}

TEST_CASE("write_synth_set lays out slides, annotations and manifest") {
  testing::TempDir dir("synth");
  SynthOptions opts;
  opts.count = 2;
  opts.width = opts.height = 500;
  opts.max_blobs = 4;
  const SynthSet set = write_synth_set(opts, dir.path());
  REQUIRE(set.manifest.slides.size() == 2);
  const SlideManifest m = load_manifest(dir / "manifest.json");
  CHECK(m.slides[1].id == "synth_001");
  CHECK(load_slide(m.slides[1]).read_all() == synth_slide(opts, 1).image);
  CHECK(load_annotation(dir / "annotations/synth_001.json").boxes.size() ==
        synth_slide(opts, 1).ground_truth.boxes.size());
}

}  // TEST_SUITE
