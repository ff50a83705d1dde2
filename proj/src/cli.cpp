#include "wsiroi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "file_util.hpp"
#include "wsiroi/classifier.hpp"
#include "wsiroi/dataset.hpp"
#include "wsiroi/detector.hpp"
#include "wsiroi/errors.hpp"
#include "wsiroi/evaluate.hpp"
#include "wsiroi/overlay.hpp"
#include "wsiroi/synth.hpp"
#include "wsiroi/tiler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsiroi {

namespace {

constexpr std::string_view kToolVersion = "0.1.0";

struct TilerArgs {
  int tile_size = 244;
  std::string mode = "center";
  int center_size = 199;
  int input_size = 224;
  bool pad_edges = false;

  TilerConfig config() const {
    TilerConfig c{tile_size, parse_pipeline_mode(mode), center_size, input_size, pad_edges};
    c.validate();
    return c;
  }
};

struct SearchArgs {
  double k = 150.0;
  int min_size = 20;
  int max_proposals = 64;

  SelectiveSearchConfig config() const {
    SelectiveSearchConfig c{k, min_size, max_proposals};
    c.validate();
    return c;
  }
};

struct BackendArgs {
  bool stub = false;
  std::string model;
};

struct DetectArgs {
  std::string manifest;
  std::string out;
  TilerArgs tiler;
  SearchArgs search;
  BackendArgs backend;
  double threshold = 0.5;
  double merge_iou = 0.2;
  int workers = 1;
  std::uint64_t seed = 0;

  DetectorConfig config() const {
    DetectorConfig c{tiler.config(), search.config(), threshold, merge_iou, workers};
    c.validate();
    return c;
  }
};

void add_tiler_options(CLI::App* cmd, TilerArgs& a) {
  cmd->add_option("--tile-size", a.tile_size, "Tile edge in pixels");
  cmd->add_option("--mode", a.mode, "base: classify whole tiles; center: classify the centered crop")
      ->check(CLI::IsMember({"base", "center"}));
  cmd->add_option("--center-size", a.center_size, "Center crop edge in pixels (center mode)");
  cmd->add_option("--input-size", a.input_size, "Classifier input edge in pixels");
  cmd->add_flag("--pad-edges", a.pad_edges, "Keep partial edge tiles, white-filled");
}

void add_search_options(CLI::App* cmd, SearchArgs& a) {
  cmd->add_option("--k", a.k, "Graph segmentation scale parameter");
  cmd->add_option("--min-size", a.min_size, "Smallest initial segment, pixels");
  cmd->add_option("--max-proposals", a.max_proposals, "Proposals kept per patch");
}

void add_backend_options(CLI::App* cmd, BackendArgs& a) {
  cmd->add_flag("--stub", a.stub, "Use the deterministic darkness scorer");
  cmd->add_option("--model", a.model, "Model manifest JSON for the ONNX backend");
}

void add_detect_options(CLI::App* cmd, DetectArgs& a) {
  cmd->add_option("--manifest", a.manifest, "Slide manifest JSON")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  add_tiler_options(cmd, a.tiler);
  add_search_options(cmd, a.search);
  add_backend_options(cmd, a.backend);
  cmd->add_option("--threshold", a.threshold, "Minimum p_roi for a proposal to survive");
  cmd->add_option("--merge-iou", a.merge_iou, "IoU linking proposals into one ROI");
  cmd->add_option("--workers", a.workers, "Parallel tile workers")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Recorded in run metadata");
}

std::unique_ptr<ClassifierBackend> make_backend(const BackendArgs& a, int input_size) {
  if (a.stub && !a.model.empty()) throw ValidationError("give either --stub or --model, not both");
  if (a.stub) return stub_backend(input_size);
  if (a.model.empty()) throw ValidationError("a classifier is required: pass --model <manifest.json> or --stub");
  auto backend = load_model_backend(load_model_manifest(a.model));
  if (backend->input_size() != input_size) {
    throw ValidationError("model input size differs from --input-size");
  }
  return backend;
}

std::vector<Slide> load_slides(const fs::path& manifest_path) {
  const SlideManifest manifest = load_manifest(manifest_path);
  std::vector<Slide> slides;
  slides.reserve(manifest.slides.size());
  for (const auto& entry : manifest.slides) slides.push_back(load_slide(entry));
  return slides;
}

SlideAnnotation load_slide_annotation(const fs::path& dir, const Slide& slide) {
  SlideAnnotation ann = load_annotation(dir / (slide.id() + ".json"));
  if (ann.slide_id != slide.id()) {
    throw ValidationError("annotation in " + (dir / (slide.id() + ".json")).string() +
                          " belongs to slide '" + ann.slide_id + "'");
  }
  validate_annotation(ann, slide.width(), slide.height());
  return ann;
}

// Records every option of the subcommand so the run can be replayed with
// `--config run_metadata.json`.
json options_snapshot(const CLI::App* cmd) {
  json config = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_items_expected_max() == 0) {
      config[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->get_expected_max() > 1) {
      config[name] = opt->count() > 0 ? json(opt->results()) : json::array();
    } else {
      config[name] = opt->count() > 0 ? opt->results().front() : opt->get_default_str();
    }
  }
  return config;
}

class RunClock {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }
  json to_json() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> timings_;
};

void write_run_metadata(const fs::path& path, const CLI::App* cmd, std::uint64_t seed,
                        const RunClock& clock, json extra = json::object()) {
  json doc = {{"command", cmd->get_name()},
              {"tool_version", std::string(kToolVersion)},
              {"seed", seed},
              {"config", options_snapshot(cmd)},
              {"timings_ms", clock.to_json()}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  detail::write_text_file(path, doc.dump(2) + "\n");
}

void upsert_mode_row(const fs::path& path, const std::string& mode, double mean_iou) {
  std::vector<ModeRow> rows;
  if (fs::exists(path)) rows = parse_mode_iou_csv(detail::read_text_file(path));
  std::erase_if(rows, [&](const ModeRow& r) { return r.mode == mode; });
  rows.push_back({mode, mean_iou});
  detail::write_text_file(path, mode_iou_csv(rows));
}

struct EvalOutputs {
  std::vector<SlideReport> reports;
  ReportSummary summary;
};

EvalOutputs evaluate_to(const fs::path& out_dir, const std::string& mode,
                        const std::vector<SlideAnnotation>& preds,
                        const std::vector<SlideAnnotation>& refs, double match_iou) {
  EvalOutputs e;
  for (std::size_t i = 0; i < preds.size(); ++i) e.reports.push_back(match_report(preds[i], refs[i], match_iou));
  e.summary = aggregate_report(e.reports);
  detail::write_text_file(out_dir / mode / "discrepancy.csv", discrepancy_csv(e.reports));
  detail::write_text_file(out_dir / mode / "report.json", report_json(mode, e.reports, match_iou).dump(2) + "\n");
  upsert_mode_row(out_dir / "report.csv", mode, e.summary.mean_iou);
  return e;
}

void print_summary(std::ostream& out, const std::string& mode, const ReportSummary& s) {
  out << mode << ": slides=" << s.slides << " mean_iou=" << s.mean_iou << " ref=" << s.ref_total
      << " pred=" << s.pred_total << " matched=" << s.matched_total
      << " discrepant=" << s.discrepant_total << " recall=" << s.recall() << "\n";
}

// Splices options from `--config <file>` in front of the command-line
// arguments; anything given explicitly on the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty() || args.front().starts_with("-")) return args;
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].starts_with("--config=")) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  json doc;
  try {
    doc = json::parse(detail::read_text_file(config_path));
  } catch (const json::exception& e) {
    throw ValidationError("config file " + config_path + " is not JSON: " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config file " + config_path + " must hold a JSON object");
  if (doc.contains("command") && doc["command"] != args.front()) {
    throw ValidationError("config file " + config_path + " was written by '" +
                          doc["command"].get<std::string>() + "', not '" + args.front() + "'");
  }
  const json& values = doc.contains("config") ? doc["config"] : doc;

  auto given = [&](const std::string& key) {
    return std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
      return a == "--" + key || a.starts_with("--" + key + "=");
    });
  };
  auto scalar = [](const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  std::vector<std::string> injected;
  for (const auto& [key, value] : values.items()) {
    if (key == "config" || given(key) || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
    } else if (value.is_array()) {
      for (const auto& v : value) injected.push_back("--" + key + "=" + scalar(v));
    } else if (!(value.is_string() && value.get<std::string>().empty())) {
      injected.push_back("--" + key + "=" + scalar(value));
    }
  }
  std::vector<std::string> expanded{args.front()};
  expanded.insert(expanded.end(), injected.begin(), injected.end());
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

}  // namespace

int run_command(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-of-interest detection for whole slide images", "wsiroi"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_file;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON file supplying any flag; command-line flags win");
  };

  // synth
  SynthOptions synth_opts;
  std::string synth_out;
  std::string synth_placement = "tile_centered";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic slide set with ground truth");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_opts.seed, "Random seed");
  synth->add_option("--count", synth_opts.count, "Number of slides");
  synth->add_option("--width", synth_opts.width, "Slide width");
  synth->add_option("--height", synth_opts.height, "Slide height");
  synth->add_option("--noise", synth_opts.noise, "Per-channel noise amplitude");
  synth->add_option("--placement", synth_placement, "Blob placement: tile_centered|uniform")
      ->check(CLI::IsMember({"tile_centered", "uniform"}));
  add_config(synth);

  // tile
  std::string tile_manifest, tile_out;
  TilerArgs tile_args;
  bool tile_png = false;
  auto* tile = app.add_subcommand("tile", "List (and optionally write) the tile grid of each slide");
  tile->add_option("--manifest", tile_manifest, "Slide manifest JSON")->required();
  tile->add_option("--out", tile_out, "Output directory")->required();
  add_tiler_options(tile, tile_args);
  tile->add_flag("--write-png", tile_png, "Also write every tile as PNG");
  add_config(tile);

  // propose
  std::string prop_manifest, prop_out;
  TilerArgs prop_tiler;
  SearchArgs prop_search;
  int prop_workers = 1;
  auto* prop = app.add_subcommand("propose", "Dump selective-search proposals as JSON lines");
  prop->add_option("--manifest", prop_manifest, "Slide manifest JSON")->required();
  prop->add_option("--out", prop_out, "Output directory")->required();
  add_tiler_options(prop, prop_tiler);
  add_search_options(prop, prop_search);
  prop->add_option("--workers", prop_workers, "Parallel tile workers")->check(CLI::PositiveNumber);
  add_config(prop);

  // build-dataset
  std::string ds_manifest, ds_gt, ds_out;
  TilerArgs ds_tiler;
  SearchArgs ds_search;
  LabelThresholds ds_thresholds;
  DatasetOptions ds_opts;
  int ds_workers = 1;
  auto* ds = app.add_subcommand("build-dataset", "Label proposals against ground truth and export crops");
  ds->add_option("--manifest", ds_manifest, "Slide manifest JSON")->required();
  ds->add_option("--gt", ds_gt, "Directory of ground-truth annotation JSON files")->required();
  ds->add_option("--out", ds_out, "Dataset directory")->required();
  add_tiler_options(ds, ds_tiler);
  add_search_options(ds, ds_search);
  ds->add_option("--pos-iou", ds_thresholds.positive, "IoU at or above which a proposal is roi");
  ds->add_option("--neg-iou", ds_thresholds.negative, "IoU at or below which a proposal is background");
  ds->add_option("--balance-ratio", ds_opts.balance_ratio, "Max backgrounds per roi example");
  ds->add_option("--seed", ds_opts.seed, "Background subsampling seed");
  ds->add_option("--workers", ds_workers, "Parallel tile workers")->check(CLI::PositiveNumber);
  add_config(ds);

  // detect
  DetectArgs det_args;
  auto* det = app.add_subcommand("detect", "Detect ROIs on every slide");
  add_detect_options(det, det_args);
  add_config(det);

  // eval
  std::string ev_manifest, ev_pred, ev_gt, ev_out, ev_mode = "center";
  double ev_match = 0.5;
  auto* ev = app.add_subcommand("eval", "Score detections against reference annotations");
  ev->add_option("--manifest", ev_manifest, "Slide manifest JSON")->required();
  ev->add_option("--pred", ev_pred, "Directory of predicted annotation JSON files")->required();
  ev->add_option("--gt", ev_gt, "Directory of reference annotation JSON files")->required();
  ev->add_option("--out", ev_out, "Report directory")->required();
  ev->add_option("--mode", ev_mode, "Row label in report.csv");
  ev->add_option("--match-iou", ev_match, "IoU needed to match a predicted ROI to a reference ROI");
  add_config(ev);

  // overlay
  std::string ov_manifest, ov_out;
  std::vector<std::string> ov_annotations;
  int ov_factor = 0;
  auto* ov = app.add_subcommand("overlay", "Render annotation boxes over slide thumbnails");
  ov->add_option("--manifest", ov_manifest, "Slide manifest JSON")->required();
  ov->add_option("--annotations", ov_annotations, "Annotation JSON files (up to 4 per slide)")->required();
  ov->add_option("--out", ov_out, "Output directory")->required();
  ov->add_option("--overlay-factor", ov_factor, "Downsample factor; 0 = long side <= 2048");
  add_config(ov);

  // pipeline
  DetectArgs pipe_args;
  std::string pipe_gt;
  double pipe_match = 0.5;
  int pipe_factor = 0;
  auto* pipe = app.add_subcommand("pipeline", "detect + eval + overlay for one mode");
  add_detect_options(pipe, pipe_args);
  pipe->add_option("--gt", pipe_gt, "Directory of ground-truth annotation JSON files")->required();
  pipe->add_option("--match-iou", pipe_match, "IoU needed to match a predicted ROI to a reference ROI");
  pipe->add_option("--overlay-factor", pipe_factor, "Downsample factor; 0 = long side <= 2048");
  add_config(pipe);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  RunClock clock;
  try {
    if (synth->parsed()) {
      synth_opts.placement = parse_blob_placement(synth_placement);
      const SynthSet set = write_synth_set(synth_opts, synth_out);
      clock.lap("synth");
      write_run_metadata(fs::path(synth_out) / "run_metadata.json", synth, synth_opts.seed, clock);
      out << "wrote " << set.manifest.slides.size() << " slides to " << synth_out << "\n";
    } else if (tile->parsed()) {
      const TilerConfig cfg = tile_args.config();
      const SlideManifest manifest = load_manifest(tile_manifest);
      std::string csv = "slide_id,grid_row,grid_col,x0,y0,x1,y1\n";
      for (const auto& entry : manifest.slides) {
        const Slide slide = load_slide(entry);
        const TileGrid grid = tile_grid(slide, cfg.tile_size, cfg.pad_edges);
        for (const auto& w : grid.warnings) err << "warning: " << w << "\n";
        for (const auto& fp : grid.tiles) {
          csv += fp.slide_id + "," + std::to_string(fp.grid_row) + "," + std::to_string(fp.grid_col) +
                 "," + std::to_string(fp.box.x0()) + "," + std::to_string(fp.box.y0()) + "," +
                 std::to_string(fp.box.x1()) + "," + std::to_string(fp.box.y1()) + "\n";
          if (tile_png) {
            save_png(fs::path(tile_out) / slide.id() /
                         ("r" + std::to_string(fp.grid_row) + "_c" + std::to_string(fp.grid_col) + ".png"),
                     extract_tile(slide, fp).pixels);
          }
        }
      }
      detail::write_text_file(fs::path(tile_out) / "tiles.csv", csv);
      clock.lap("tile");
      write_run_metadata(fs::path(tile_out) / "run_metadata.json", tile, 0, clock);
    } else if (prop->parsed()) {
      const TilerConfig tcfg = prop_tiler.config();
      const SelectiveSearchConfig scfg = prop_search.config();
      std::string lines;
      std::size_t count = 0;
      for (const Slide& slide : load_slides(prop_manifest)) {
        for (const auto& p : propose_slide(slide, tcfg, scfg, prop_workers)) {
          lines += proposal_json_line(p) + "\n";
          ++count;
        }
      }
      detail::write_text_file(fs::path(prop_out) / "proposals.jsonl", lines);
      clock.lap("propose");
      write_run_metadata(fs::path(prop_out) / "run_metadata.json", prop, 0, clock);
      out << "wrote " << count << " proposals\n";
    } else if (ds->parsed()) {
      ds_thresholds.validate();
      const TilerConfig tcfg = ds_tiler.config();
      const SelectiveSearchConfig scfg = ds_search.config();
      ds_opts.input_size = tcfg.input_size;
      const std::vector<Slide> slides = load_slides(ds_manifest);
      std::vector<SlideExamples> examples;
      for (const Slide& slide : slides) {
        const SlideAnnotation gt = load_slide_annotation(ds_gt, slide);
        const auto proposals = propose_slide(slide, tcfg, scfg, ds_workers);
        examples.push_back({&slide, label_proposals(proposals, gt, ds_thresholds)});
      }
      clock.lap("label");
      const DatasetIndex index = export_dataset(examples, ds_out, ds_opts);
      clock.lap("export");
      write_run_metadata(fs::path(ds_out) / "run_metadata.json", ds, ds_opts.seed, clock);
      out << "exported " << index.roi_count << " roi and " << index.background_count
          << " background examples to " << ds_out << "\n";
    } else if (det->parsed()) {
      const DetectorConfig cfg = det_args.config();
      auto backend = make_backend(det_args.backend, cfg.tiler.input_size);
      std::size_t total = 0;
      for (const Slide& slide : load_slides(det_args.manifest)) {
        const auto dets = detect_slide(slide, *backend, cfg);
        total += dets.size();
        save_annotation(fs::path(det_args.out) / "detections" / (slide.id() + ".json"),
                        detections_to_annotation(slide.id(), dets));
      }
      clock.lap("detect");
      write_run_metadata(fs::path(det_args.out) / "run_metadata.json", det, det_args.seed, clock,
                         {{"backend", backend->name()}});
      out << "wrote " << total << " detections\n";
    } else if (ev->parsed()) {
      std::vector<SlideAnnotation> preds, refs;
      for (const Slide& slide : load_slides(ev_manifest)) {
        preds.push_back(load_slide_annotation(ev_pred, slide));
        refs.push_back(load_slide_annotation(ev_gt, slide));
      }
      const EvalOutputs e = evaluate_to(ev_out, ev_mode, preds, refs, ev_match);
      clock.lap("eval");
      write_run_metadata(fs::path(ev_out) / ev_mode / "run_metadata.json", ev, 0, clock);
      print_summary(out, ev_mode, e.summary);
    } else if (ov->parsed()) {
      std::vector<SlideAnnotation> layers;
      for (const auto& p : ov_annotations) layers.push_back(load_annotation(p));
      for (const Slide& slide : load_slides(ov_manifest)) {
        std::vector<SlideAnnotation> mine;
        for (const auto& a : layers) {
          if (a.slide_id == slide.id()) mine.push_back(a);
        }
        if (mine.empty()) continue;
        for (const auto& a : mine) validate_annotation(a, slide.width(), slide.height());
        const int factor = ov_factor > 0 ? ov_factor : default_overlay_factor(slide.width(), slide.height());
        save_png(fs::path(ov_out) / (slide.id() + ".png"), render_overlay(slide, mine, factor));
      }
      clock.lap("overlay");
      write_run_metadata(fs::path(ov_out) / "run_metadata.json", ov, 0, clock);
    } else if (pipe->parsed()) {
      const DetectorConfig cfg = pipe_args.config();
      auto backend = make_backend(pipe_args.backend, cfg.tiler.input_size);
      const std::string mode(to_string(cfg.tiler.mode));
      const fs::path root(pipe_args.out);
      const fs::path mode_dir = root / mode;
      const std::vector<Slide> slides = load_slides(pipe_args.manifest);

      std::vector<SlideAnnotation> preds, refs;
      json coverage = json::object();
      for (const Slide& slide : slides) {
        refs.push_back(load_slide_annotation(pipe_gt, slide));
        const SlideDetections d = detect_slide_detailed(slide, *backend, cfg);
        preds.push_back(detections_to_annotation(slide.id(), d.detections));
        save_annotation(mode_dir / "detections" / (slide.id() + ".json"), preds.back());
        coverage[slide.id()] = {{"tiles", d.tile_count},
                                {"proposals_scored", d.proposals_scored},
                                {"positives", d.positives.size()},
                                {"uncovered_fraction", d.uncovered_fraction}};
      }
      clock.lap("detect");
      const EvalOutputs e = evaluate_to(root, mode, preds, refs, pipe_match);
      clock.lap("eval");
      for (std::size_t i = 0; i < slides.size(); ++i) {
        const int factor = pipe_factor > 0 ? pipe_factor
                                           : default_overlay_factor(slides[i].width(), slides[i].height());
        const std::vector<SlideAnnotation> layers{refs[i], preds[i]};
        save_png(mode_dir / "overlays" / (slides[i].id() + ".png"), render_overlay(slides[i], layers, factor));
      }
      clock.lap("overlay");
      write_run_metadata(mode_dir / "run_metadata.json", pipe, pipe_args.seed, clock,
                         {{"backend", backend->name()}, {"coverage", coverage}});
      print_summary(out, mode, e.summary);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace wsiroi
