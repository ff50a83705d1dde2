#include <doctest.h>

#include "test_support.hpp"
#include "wsiroi/errors.hpp"
#include "wsiroi/tiler.hpp"

using namespace wsiroi;

TEST_SUITE("tiler") {

TEST_CASE("1024 slide gives a 4x4 grid and drops the 48-px remainder") {
  const TileGrid g = tile_grid("s", 1024, 1024, 244);
  CHECK(g.rows == 4);
  CHECK(g.cols == 4);
  REQUIRE(g.tiles.size() == 16);
  CHECK(g.tiles[0].box == Box(0, 0, 244, 244));
  CHECK(g.tiles[1].box == Box(244, 0, 488, 244));
  CHECK(g.tiles[4].grid_row == 1);
  CHECK(g.tiles[4].grid_col == 0);
  CHECK(g.tiles[15].box == Box(732, 732, 976, 976));
  CHECK(g.warnings.empty());
}

TEST_CASE("pad_edges keeps the partial tiles") {
  const TileGrid g = tile_grid("s", 1024, 500, 244, true);
  CHECK(g.rows == 3);
  CHECK(g.cols == 5);
  CHECK(g.tiles.back().box == Box(976, 488, 1220, 732));
}

TEST_CASE("tiles are disjoint and row-major") {
  for (int w : {244, 300, 731, 1000}) {
    for (int h : {244, 500, 977}) {
      const TileGrid g = tile_grid("s", w, h, 244);
      CHECK(g.tiles.size() == static_cast<std::size_t>((w / 244) * (h / 244)));
      for (std::size_t i = 0; i < g.tiles.size(); ++i) {
        CHECK(Box(0, 0, w, h).contains(g.tiles[i].box));
        CHECK(g.tiles[i].grid_row * g.cols + g.tiles[i].grid_col == static_cast<int>(i));
        for (std::size_t j = i + 1; j < g.tiles.size(); ++j) CHECK(intersection_area(g.tiles[i].box, g.tiles[j].box) == 0);
      }
    }
  }
}

TEST_CASE("slide smaller than one tile yields no tiles without padding") {
  const TileGrid g = tile_grid("s", 200, 200, 244);
  CHECK(g.tiles.empty());
  CHECK_FALSE(g.warnings.empty());
  CHECK(tile_grid("s", 100, 100, 244, true).tiles.size() == 1);
}

TEST_CASE("center crop of the (row 1, col 2) tile") {
  Image img(1024, 1024, Rgb{10, 20, 30});
  const Slide slide("s", img);
  const TileGrid g = tile_grid(slide, 244);
  const TileFootprint& fp = g.tiles[1 * 4 + 2];
  REQUIRE(fp.box == Box(488, 244, 732, 488));
  const CenterCrop c = center_crop(extract_tile(slide, fp), 199);
  CHECK(c.box == Box(510, 266, 709, 465));
  CHECK(c.offset == Point{22, 22});
  CHECK(c.pixels.width() == 199);
  CHECK(fp.box.contains(c.box));
  CHECK(iou(c.box, fp.box) == doctest::Approx(39601.0 / 59536.0).epsilon(1e-15));

  CHECK(center_crop(extract_tile(slide, fp), 198).offset == Point{23, 23});
}

TEST_CASE("center crop pixels come from the right place") {
  std::mt19937_64 rng(4);
  const Slide slide("s", testing::noise_image(rng, 500, 500));
  const TileGrid g = tile_grid(slide, 244);
  const CenterCrop c = center_crop(extract_tile(slide, g.tiles[3]), 199);
  CHECK(c.pixels == slide.read_region(c.box));
}

TEST_CASE("mode offsets and patch sizes") {
  TilerConfig cfg;
  CHECK(mode_crop_offset(cfg) == Point{22, 22});
  CHECK(mode_patch_size(cfg) == 199);
  cfg.mode = PipelineMode::base;
  CHECK(mode_crop_offset(cfg) == Point{0, 0});
  CHECK(mode_patch_size(cfg) == 244);
  CHECK(parse_pipeline_mode("base") == PipelineMode::base);
  CHECK(to_string(PipelineMode::center) == "center");
  CHECK_THROWS_AS(parse_pipeline_mode("edge"), ValidationError);
}

TEST_CASE("tiler config validation") {
  CHECK_NOTHROW(TilerConfig{}.validate());
  CHECK_THROWS_AS((TilerConfig{244, PipelineMode::center, 244, 224, false}.validate()), ValidationError);
  CHECK_THROWS_AS((TilerConfig{0, PipelineMode::base, 199, 224, false}.validate()), ValidationError);
  CHECK_THROWS_AS((TilerConfig{244, PipelineMode::base, 199, 0, false}.validate()), ValidationError);
}

TEST_CASE("padded tiles are white beyond the slide") {
  const Slide slide("s", Image(300, 260, Rgb{1, 2, 3}));
  const TileGrid g = tile_grid(slide, 244, true);
  const Tile t = extract_tile(slide, g.tiles.back());
  CHECK(t.pixels.width() == 244);
  CHECK(t.pixels.at(0, 0) == Rgb{1, 2, 3});
  CHECK(t.pixels.at(55, 15) == Rgb{1, 2, 3});
  CHECK(t.pixels.at(56, 0) == Rgb{255, 255, 255});
  CHECK(t.pixels.at(0, 16) == Rgb{255, 255, 255});
}

TEST_CASE("extract_patch rejects boxes off the slide") {
  const Slide slide("s", Image(100, 100));
  CHECK_THROWS_AS(extract_patch(slide, Box(50, 50, 101, 60)), ValidationError);
  CHECK(extract_patch(slide, Box(0, 0, 100, 100)).width() == 100);
}

TEST_CASE("bilinear resize matches hand-computed values") {
  // Corner-aligned: target column j samples source x = j * (2-1)/(4-1).
  Image src(2, 2, std::vector<std::uint8_t>{0, 0, 0, 100, 100, 100, 0, 0, 0, 100, 100, 100});
  const Image out = resize_to_input(src, 4);
  CHECK(out.at(0, 0)[0] == 0);
  CHECK(out.at(1, 0)[0] == 33);   // 33.33
  CHECK(out.at(2, 0)[0] == 67);   // 66.67
  CHECK(out.at(3, 3)[0] == 100);

  // Diagonal 0/255 pattern: centre is 127.5, rounded half up.
  Image diag(2, 2, std::vector<std::uint8_t>{0, 0, 0, 255, 255, 255, 255, 255, 255, 0, 0, 0});
  const Image mid = resize_to_input(diag, 3);
  CHECK(mid.at(1, 1)[0] == 128);
  CHECK(mid.at(1, 0)[0] == 128);
  CHECK(mid.at(0, 0)[0] == 0);
  CHECK(mid.at(2, 0)[0] == 255);
}

TEST_CASE("resize keeps constant images and identity sizes") {
  std::mt19937_64 rng(6);
  const Image noise = testing::noise_image(rng, 224, 224);
  CHECK(resize_to_input(noise, 224) == noise);
  const Image flat(199, 199, Rgb{17, 99, 230});
  CHECK(resize_to_input(flat, 224) == Image(224, 224, Rgb{17, 99, 230}));
  CHECK_THROWS_AS(resize_to_input(Image(), 224), ValidationError);
}

}  // TEST_SUITE
