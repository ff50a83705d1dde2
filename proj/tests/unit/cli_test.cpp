#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "test_support.hpp"
#include "wsiroi/cli.hpp"
#include "wsiroi/slide_io.hpp"

using namespace wsiroi;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

// Two small slides keep the CLI tests fast.
void small_synth(const testing::TempDir& dir) {
  const Run r = run({"synth", "--out", (dir / "data").string(), "--seed", "3", "--count", "2", "--width",
                     "732", "--height", "732", "--config", (testing::fixture_dir() / "small_synth.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"detect", "--manifest", "m.json"}).code == 1);
  const Run bad_mode = run({"tile", "--manifest", "m.json", "--out", "o", "--mode", "edge"});
  CHECK(bad_mode.code == 1);
  CHECK(bad_mode.err.find("--mode") != std::string::npos);
}

TEST_CASE("help exits 0") {
  const Run r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("pipeline") != std::string::npos);
  CHECK(run({"pipeline", "--help"}).code == 0);
}

TEST_CASE("missing inputs exit 2") {
  testing::TempDir dir("cli_io");
  const Run r = run({"tile", "--manifest", (dir / "none.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("none.json") != std::string::npos);
}

TEST_CASE("detect requires a classifier") {
  testing::TempDir dir("cli_det");
  small_synth(dir);
  const Run r = run({"detect", "--manifest", (dir / "data/manifest.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--stub") != std::string::npos);
  const Run ok = run({"detect", "--manifest", (dir / "data/manifest.json").string(), "--out",
                      (dir / "o").string(), "--stub"});
  CHECK(ok.code == 0);
  CHECK(std::filesystem::exists(dir / "o/detections/synth_000.json"));
  CHECK(std::filesystem::exists(dir / "o/run_metadata.json"));
}

TEST_CASE("tile and propose write their listings") {
  testing::TempDir dir("cli_tile");
  small_synth(dir);
  const std::string manifest = (dir / "data/manifest.json").string();
  REQUIRE(run({"tile", "--manifest", manifest, "--out", (dir / "t").string(), "--write-png"}).code == 0);
  const std::string tiles = testing::read_file(dir / "t/tiles.csv");
  CHECK(tiles.starts_with("slide_id,grid_row,grid_col,x0,y0,x1,y1\nsynth_000,0,0,0,0,244,244\n"));
  CHECK(std::filesystem::exists(dir / "t/synth_001/r1_c1.png"));

  REQUIRE(run({"propose", "--manifest", manifest, "--out", (dir / "p").string(), "--workers", "2"}).code == 0);
  std::istringstream lines(testing::read_file(dir / "p/proposals.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto doc = nlohmann::json::parse(line);
    CHECK(doc.contains("slide_box"));
    ++n;
  }
  CHECK(n > 0);
}

TEST_CASE("build-dataset writes an index") {
  testing::TempDir dir("cli_ds");
  small_synth(dir);
  const Run r = run({"build-dataset", "--manifest", (dir / "data/manifest.json").string(), "--gt",
                     (dir / "data/annotations").string(), "--out", (dir / "ds").string(), "--seed", "5"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(testing::read_file(dir / "ds/index.csv").starts_with("path,label,slide_id,x0,y0,x1,y1,max_iou\n"));
}

TEST_CASE("pipeline writes every report and reruns byte-identically from its metadata") {
  testing::TempDir dir("cli_pipe");
  small_synth(dir);
  const std::string manifest = (dir / "data/manifest.json").string();
  const std::string gt = (dir / "data/annotations").string();
  for (const char* mode : {"center", "base"}) {
    const Run r = run({"pipeline", "--manifest", manifest, "--gt", gt, "--out", (dir / "run").string(), "--stub",
                       "--mode", mode});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  for (const char* f : {"center/report.json", "center/discrepancy.csv", "center/detections/synth_001.json",
                        "center/overlays/synth_001.png", "center/run_metadata.json", "base/report.json"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / "run" / f), f);
  }
  const std::string table = testing::read_file(dir / "run/report.csv");
  CHECK(table.starts_with("mode,mean_iou\nbase,"));
  CHECK(table.find("\ncenter,") != std::string::npos);

  const auto meta = nlohmann::json::parse(testing::read_file(dir / "run/center/run_metadata.json"));
  CHECK(meta["command"] == "pipeline");
  CHECK(meta["config"]["mode"] == "center");
  CHECK(meta["config"]["stub"] == true);
  CHECK(meta.contains("timings_ms"));

  // Replay with only the metadata file and a new output directory.
  const Run again = run({"pipeline", "--config", (dir / "run/center/run_metadata.json").string(), "--out",
                         (dir / "again").string()});
  REQUIRE_MESSAGE(again.code == 0, again.err);
  for (const char* f : {"center/report.json", "center/discrepancy.csv", "center/detections/synth_000.json",
                        "center/detections/synth_001.json", "center/overlays/synth_000.png",
                        "center/overlays/synth_001.png"}) {
    CHECK_MESSAGE(testing::read_file(dir / "run" / f) == testing::read_file(dir / "again" / f), f);
  }

  // eval on the stored detections reproduces the pipeline's numbers.
  const Run ev = run({"eval", "--manifest", manifest, "--pred", (dir / "run/center/detections").string(), "--gt",
                      gt, "--out", (dir / "ev").string(), "--mode", "center"});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(testing::read_file(dir / "ev/center/report.json") == testing::read_file(dir / "run/center/report.json"));

  const Run ov = run({"overlay", "--manifest", manifest, "--annotations", gt + "/synth_000.json",
                      (dir / "run/center/detections/synth_000.json").string(), "--out", (dir / "ov").string()});
  REQUIRE_MESSAGE(ov.code == 0, ov.err);
  CHECK(testing::read_file(dir / "ov/synth_000.png") == testing::read_file(dir / "run/center/overlays/synth_000.png"));
}

TEST_CASE("synth twice with one seed gives byte-identical sets") {
  testing::TempDir a("cli_sa"), b("cli_sb");
  for (const auto* dir : {&a, &b}) {
    REQUIRE(run({"synth", "--seed", "7", "--count", "2", "--out", dir->path().string()}).code == 0);
  }
  for (const char* f : {"manifest.json", "slides/synth_000.png", "slides/synth_001.png",
                        "annotations/synth_000.json", "annotations/synth_001.json"}) {
    CHECK_MESSAGE(testing::read_file(a / f) == testing::read_file(b / f), f);
  }
  const auto meta = nlohmann::json::parse(testing::read_file(a / "run_metadata.json"));
  CHECK(meta["seed"] == 7);
  CHECK(meta["config"]["count"] == "2");
}

TEST_CASE("config file values apply unless overridden on the command line") {
  testing::TempDir dir("cli_over");
  small_synth(dir);
  const auto meta = nlohmann::json::parse(testing::read_file(dir / "data/run_metadata.json"));
  CHECK(meta["config"]["count"] == "2");
  CHECK(meta["config"]["noise"] == "4");
  CHECK(load_manifest(dir / "data/manifest.json").slides.size() == 2);
}

TEST_CASE("config from another command is rejected") {
  testing::TempDir dir("cli_cfg");
  small_synth(dir);
  const Run r = run({"detect", "--config", (dir / "data/run_metadata.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("synth") != std::string::npos);
}

}  // TEST_SUITE
