// dreamseg command-line driver: segment, evaluate, grid, ablate and the
// oracle data generators.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dreamseg/checkpoint.hpp"
#include "dreamseg/eval.hpp"
#include "dreamseg/image_io.hpp"
#include "dreamseg/optimizer.hpp"
#include "dreamseg/render.hpp"
#include "dreamseg/run_config.hpp"
#include "dreamseg/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dreamseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

/// Raised for anything the user can fix by changing the invocation.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- flag plumbing -------------------------------------------------------

/// Flags that override one config key when given.
class Overrides {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help + "  [" + key + "]");
    entries_.push_back({opt, key, [value] { return json(*value); }});
  }

  void add_switch(CLI::App* app, const std::string& flag, const std::string& key, bool value, const std::string& help) {
    auto seen = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(flag, *seen, help + "  [" + key + "]");
    entries_.push_back({opt, key, [value] { return json(value); }});
  }

  [[nodiscard]] json collect() const {
    json j = json::object();
    for (const auto& e : entries_) {
      if (e.opt->count() > 0) j[e.key] = e.value();
    }
    return j;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<json()> value;
  };
  std::vector<Entry> entries_;
};

struct Common {
  Overrides overrides;
  std::string config_file;
  std::string out = "out";
  std::string backend;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "JSON config with flat dotted keys (flags override it)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--backend", c.backend, "score model backend")->check(CLI::IsMember({"oracle", "external"}));
  auto& o = c.overrides;
  o.add<std::string>(app, "--model", "model", "bridge URL of the external model");
  o.add<std::string>(app, "--device", "device", "device requested from the bridge");
  o.add<double>(app, "--guidance-scale", "guidance_scale", "classifier-free guidance scale (external)");
  o.add<int>(app, "--iterations", "iterations", "optimization steps");
  o.add<double>(app, "--lr", "learning_rate", "SGD learning rate");
  o.add<int>(app, "--n-b", "n_b", "random backgrounds per mask per step");
  o.add<double>(app, "--t-min", "t_min", "lower end of the timestep range");
  o.add<double>(app, "--t-max", "t_max", "upper end of the timestep range");
  o.add<double>(app, "--lambda-dream", "loss.dream", "dream loss weight");
  o.add<double>(app, "--lambda-gravity", "loss.gravity", "gravity loss weight");
  o.add<double>(app, "--lambda-intersection", "loss.intersection", "intersection loss weight");
  o.add_switch(app, "--no-intersection", "loss.intersection_enabled", false, "disable the intersection loss");
  o.add<std::string>(app, "--task-mode", "task_mode", "referring | semantic");
  o.add<int>(app, "--bilateral-iters", "bilateral.iterations", "cross-bilateral passes (0 = off)");
  o.add<std::string>(app, "--bilateral-mode", "bilateral.mode", "init | per-step");
  o.add<std::string>(app, "--representation", "representation", "implicit | pixel");
  o.add<std::string>(app, "--schedule", "schedule", "cosine-vp | linear-vp | external-model-native (oracle)");
  o.add<int>(app, "--snapshot-every", "snapshot_every", "keep a mask snapshot every n steps");
  o.add<double>(app, "--threshold", "threshold", "binarization threshold");
  o.add<std::uint64_t>(app, "--seed", "seed", "random seed");
  o.add<int>(app, "--workers", "workers", "parallel evaluation workers");
}

/// defaults <- config file <- flags. The backend is settled first because
/// it picks the preset the other keys start from.
RunConfig resolve(const Common& c, RunKind kind, const json& inputs) {
  json file = json::object();
  if (!c.config_file.empty()) file = read_config_file(c.config_file);
  std::string backend = "oracle";
  if (file.contains("backend")) backend = file.at("backend").get<std::string>();
  if (!c.backend.empty()) backend = c.backend;
  RunConfig cfg = default_run_config(backend, kind);
  apply_json(cfg, file);
  cfg.backend = backend;
  apply_json(cfg, c.overrides.collect());
  apply_json(cfg, inputs);
  cfg.optim.validate();
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  return cfg;
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

json input(const RunConfig& cfg, const std::string& name) {
  const auto it = cfg.inputs.find(name);
  if (it == cfg.inputs.end()) throw UsageError("missing input '" + name + "'");
  return it->second;
}

json input_or(const RunConfig& cfg, const std::string& name, json fallback) {
  const auto it = cfg.inputs.find(name);
  return it == cfg.inputs.end() ? fallback : it->second;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_plane(const fs::path& p, const Plane& plane) {
  fs::create_directories(p.parent_path());
  write_gray_png(p.string(), plane);
}

void write_rgb(const fs::path& p, const RasterImage& img) {
  fs::create_directories(p.parent_path());
  write_rgb_png(p.string(), img);
}

void write_trace(const fs::path& dir, const std::string& stem, const OptimTrace& trace) {
  write_text(dir / (stem + ".jsonl"), trace_jsonl(trace));
  write_text(dir / (stem + "_timing.jsonl"), timing_jsonl(trace));
}

// ---- task flags shared by segment and ablate -------------------------------

struct TaskFlags {
  std::string image;
  std::vector<std::string> prompts;
  std::vector<std::string> oracle_targets;
  std::vector<std::string> gt;
};

void add_task_flags(CLI::App* app, TaskFlags& t) {
  app->add_option("--image", t.image, "input image (PNG)");
  app->add_option("--prompt", t.prompts, "caption to segment (repeatable)");
  app->add_option("--oracle-target", t.oracle_targets, "oracle target image per prompt (repeatable)");
  app->add_option("--gt", t.gt, "ground-truth mask per prompt, for reporting IoU (repeatable)");
}

json task_inputs(const TaskFlags& t) {
  json j = json::object();
  if (!t.image.empty()) j["input.image"] = absolute(t.image);
  if (!t.prompts.empty()) j["input.prompts"] = t.prompts;
  if (!t.oracle_targets.empty()) {
    json list = json::array();
    for (const auto& p : t.oracle_targets) list.push_back(absolute(p));
    j["input.oracle_targets"] = list;
  }
  if (!t.gt.empty()) {
    json list = json::array();
    for (const auto& p : t.gt) list.push_back(absolute(p));
    j["input.gt"] = list;
  }
  return j;
}

struct LoadedTask {
  SegmentationTask task;
  std::unique_ptr<ScoreModel> model;
};

LoadedTask load_task(const RunConfig& cfg) {
  LoadedTask lt;
  lt.task.image = read_rgb_png(input(cfg, "image").get<std::string>());
  lt.task.captions = input(cfg, "prompts").get<std::vector<std::string>>();
  if (lt.task.captions.empty()) throw UsageError("at least one --prompt is required");
  const auto gts = input_or(cfg, "gt", json::array()).get<std::vector<std::string>>();
  if (!gts.empty() && gts.size() != lt.task.captions.size()) throw UsageError("give one --gt per --prompt");
  for (const auto& g : gts) lt.task.ground_truth.push_back(read_mask_png(g));

  std::map<std::string, RasterImage> targets;
  if (cfg.backend == "oracle") {
    const auto paths = input_or(cfg, "oracle_targets", json::array()).get<std::vector<std::string>>();
    if (paths.size() != lt.task.captions.size()) {
      throw UsageError("the oracle backend needs one --oracle-target per --prompt");
    }
    for (std::size_t i = 0; i < paths.size(); ++i) targets.emplace(lt.task.captions[i], read_rgb_png(paths[i]));
  }
  lt.model = make_score_model(cfg, std::move(targets));
  return lt;
}

std::string index_name(const std::string& stem, std::size_t i) { return stem + "_" + std::to_string(i) + ".png"; }

// ---- commands -------------------------------------------------------------

int cmd_segment(const Common& c, const TaskFlags& t) {
  const RunConfig cfg = resolve(c, RunKind::Segment, task_inputs(t));
  const fs::path out(c.out);
  fs::create_directories(out);
  write_config_file(out / "config.json", cfg);
  LoadedTask lt = load_task(cfg);

  const SegmentResult r = segment(lt.task, *lt.model, cfg.optim);

  json outputs = json::array();
  for (std::size_t i = 0; i < lt.task.captions.size(); ++i) {
    const Plane m = r.masks.plane_copy(static_cast<int>(i));
    write_plane(out / "masks" / index_name("mask", i), m);
    write_rgb(out / "overlays" / index_name("overlay", i), overlay(lt.task.image, m));
    json o = {{"index", i}, {"prompt", lt.task.captions[i]}, {"mask", "masks/" + index_name("mask", i)},
              {"overlay", "overlays/" + index_name("overlay", i)}};
    if (!lt.task.ground_truth.empty()) {
      const double v = iou(binarize(m, cfg.threshold), lt.task.ground_truth[i]);
      o["iou"] = v;
      std::cout << "prompt " << i << " \"" << lt.task.captions[i] << "\": IoU " << std::fixed << std::setprecision(4) << v << "\n";
    }
    outputs.push_back(std::move(o));
  }
  write_text(out / "outputs.json", outputs.dump(2) + "\n");
  write_trace(out, "trace", r.trace);
  for (const auto& [it, snap] : r.trace.snapshots) {
    for (int i = 0; i < snap.k; ++i) {
      write_plane(out / "snapshots" / ("iter" + std::to_string(it) + "_mask_" + std::to_string(i) + ".png"), snap.plane_copy(i));
    }
  }
  save_checkpoint(out / "params.json", Checkpoint{lt.task.image.height(), lt.task.image.width(), r.params});
  std::cout << "wrote " << lt.task.captions.size() << " mask(s) to " << (out / "masks").string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& manifest_flag, const std::string& predict_flag) {
  json inputs = json::object();
  if (!manifest_flag.empty()) inputs["input.manifest"] = absolute(manifest_flag);
  if (!predict_flag.empty()) inputs["input.predict"] = predict_flag;
  const RunConfig cfg = resolve(c, RunKind::Segment, inputs);
  const std::string predict = input_or(cfg, "predict", "optimize").get<std::string>();
  if (predict != "optimize" && predict != "whole-image") throw UsageError("--predict must be optimize or whole-image");
  const fs::path out(c.out);
  fs::create_directories(out);
  write_config_file(out / "config.json", cfg);
  const DatasetManifest manifest = load_manifest(input(cfg, "manifest").get<std::string>());

  EvalConfig ec;
  ec.threshold = cfg.threshold;
  ec.workers = cfg.workers;
  ec.sink = [&out](const ManifestEntry& e, const std::vector<Plane>& masks) {
    for (std::size_t i = 0; i < masks.size(); ++i) write_plane(out / "masks" / (e.id + "_" + std::to_string(i) + ".png"), masks[i]);
  };

  EvalReport report;
  if (predict == "whole-image") {
    report = evaluate(manifest, [](const SampleInput& in) {
      return std::vector<Plane>(in.entry.captions.size(), Plane(in.image.height(), in.image.width(), 1.0));
    }, ec);
  } else {
    report = evaluate(manifest, [&cfg](const SampleInput& in) {
      std::map<std::string, RasterImage> targets;
      if (cfg.backend == "oracle") {
        if (in.entry.oracle_targets.size() != in.entry.captions.size()) {
          throw std::invalid_argument("entry has no oracle_target for the oracle backend");
        }
        for (std::size_t i = 0; i < in.entry.captions.size(); ++i) {
          targets.emplace(in.entry.captions[i], read_rgb_png(in.entry.oracle_targets[i].string()));
        }
      }
      const auto model = make_score_model(cfg, std::move(targets));
      const SegmentResult r = segment(SegmentationTask{in.image, in.entry.captions, {}}, *model, cfg.optim);
      std::vector<Plane> planes;
      for (int i = 0; i < r.masks.k; ++i) planes.push_back(r.masks.plane_copy(i));
      return planes;
    }, ec);
  }
  write_report(out / "report.json", report);
  write_runtime(out / "runtime.json", report);

  std::cout << std::fixed << std::setprecision(1);
  for (const auto& [tau, v] : report.prec_at) std::cout << "Prec@" << std::setprecision(1) << tau << "\t";
  std::cout << "mIoU\n";
  for (const auto& [tau, v] : report.prec_at) std::cout << std::setprecision(1) << 100.0 * v << "\t";
  std::cout << std::setprecision(3) << report.miou << "\n";
  if (!report.per_class.empty()) {
    std::cout << "per class:";
    for (const auto& [name, v] : report.per_class) std::cout << " " << name << "=" << v;
    std::cout << "\n";
  }
  std::cout << "samples " << report.samples.size() << ", failures " << report.failures << "\n";
  return kExitOk;
}

struct GridFlags {
  std::vector<std::string> fg;
  std::vector<std::string> bg;
  int n_fg = 0;
  int n_bg = 0;
  std::string caption_template;
  int size = 0;
};

int cmd_grid(const Common& c, const GridFlags& g) {
  json inputs = json::object();
  if (!g.fg.empty()) inputs["input.fg"] = g.fg;
  if (!g.bg.empty()) inputs["input.bg"] = g.bg;
  if (g.n_fg > 0) inputs["input.n_fg"] = g.n_fg;
  if (g.n_bg > 0) inputs["input.n_bg"] = g.n_bg;
  if (!g.caption_template.empty()) inputs["input.template"] = g.caption_template;
  if (g.size > 0) inputs["input.size"] = g.size;
  const RunConfig cfg = resolve(c, RunKind::Grid, inputs);
  const fs::path out(c.out);
  fs::create_directories(out);
  write_config_file(out / "config.json", cfg);

  GridExperimentSpec spec;
  spec.caption_template = input_or(cfg, "template", spec.caption_template).get<std::string>();
  spec.height = spec.width = input_or(cfg, "size", 32).get<int>();
  spec.fg_prompts = input_or(cfg, "fg", json::array()).get<std::vector<std::string>>();
  spec.bg_prompts = input_or(cfg, "bg", json::array()).get<std::vector<std::string>>();
  if (spec.fg_prompts.empty()) {
    const int n = input_or(cfg, "n_fg", 2).get<int>();
    for (int i = 0; i < n; ++i) spec.fg_prompts.push_back("object" + std::to_string(i));
  }
  if (spec.bg_prompts.empty()) {
    const int m = input_or(cfg, "n_bg", 2).get<int>();
    for (int i = 0; i < m; ++i) spec.bg_prompts.push_back("place" + std::to_string(i));
  }
  spec.validate();
  const int n_fg = static_cast<int>(spec.fg_prompts.size());
  const int n_bg = static_cast<int>(spec.bg_prompts.size());

  std::map<std::string, RasterImage> targets;
  if (cfg.backend == "oracle") {
    const GridOracle oracle = make_grid_oracle(n_fg, n_bg, spec.height, spec.width, cfg.optim.seed, spec.caption_template);
    for (int n = 0; n < n_fg; ++n) {
      for (int m = 0; m < n_bg; ++m) {
        targets.emplace(grid_caption(spec.caption_template, spec.fg_prompts[n], spec.bg_prompts[m]),
                        oracle.targets.at(grid_caption(spec.caption_template, oracle.fg_prompts[n], oracle.bg_prompts[m])));
      }
    }
  }
  const auto model = make_score_model(cfg, targets);
  const GridResult r = run_grid_experiment(spec, *model, cfg.optim);

  std::vector<RasterImage> tiles;
  json cells = json::array();
  for (const auto& cell : r.cells) {
    const std::string file = "cells/cell_" + std::to_string(cell.fg_index) + "_" + std::to_string(cell.bg_index) + ".png";
    write_rgb(out / file, cell.composite);
    tiles.push_back(cell.composite);
    json o = {{"fg_index", cell.fg_index}, {"bg_index", cell.bg_index}, {"fg", spec.fg_prompts[cell.fg_index]},
              {"bg", spec.bg_prompts[cell.bg_index]}, {"caption", cell.caption}, {"file", file}};
    if (const auto it = targets.find(cell.caption); it != targets.end()) {
      double s = 0.0;
      const auto& a = it->second.pixels().values;
      const auto& b = cell.composite.pixels().values;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      o["rmse"] = std::sqrt(s / static_cast<double>(a.size()));
    }
    cells.push_back(std::move(o));
  }
  write_rgb(out / "grid.png", tile(tiles, n_fg, n_bg));
  for (int n = 0; n < n_fg; ++n) {
    write_rgb(out / "foregrounds" / index_name("fg", n), r.foregrounds[n]);
    write_plane(out / "alphas" / index_name("alpha", n), r.alphas[n]);
  }
  for (int m = 0; m < n_bg; ++m) write_rgb(out / "backgrounds" / index_name("bg", m), r.backgrounds[m]);
  write_text(out / "cells.json", json{{"template", spec.caption_template}, {"rows", n_fg}, {"cols", n_bg}, {"cells", cells}}.dump(2) + "\n");
  write_trace(out, "trace", r.trace);
  std::cout << "wrote " << r.cells.size() << "-cell grid to " << (out / "grid.png").string() << "\n";
  return kExitOk;
}

/// Mask (or overlay) frames of every prompt: one row per prompt.
RasterImage strip(const OptimTrace& trace, const RasterImage* image) {
  std::vector<RasterImage> frames;
  int k = 0;
  for (const auto& [it, snap] : trace.snapshots) k = snap.k;
  for (int i = 0; i < k; ++i) {
    for (const auto& [it, snap] : trace.snapshots) {
      const Plane p = snap.plane_copy(i);
      frames.push_back(image ? overlay(*image, p) : gray_to_rgb(p));
    }
  }
  return tile(frames, k, static_cast<int>(trace.snapshots.size()));
}

std::vector<double> variance_series(const OptimTrace& t) {
  std::vector<double> v;
  for (const auto& r : t.records) v.push_back(r.variance);
  return v;
}

int cmd_ablate(const Common& c, const std::string& mode_flag, const TaskFlags& t) {
  json inputs = task_inputs(t);
  if (!mode_flag.empty()) inputs["input.mode"] = mode_flag;
  RunConfig cfg = resolve(c, RunKind::Segment, inputs);
  const std::string mode = input(cfg, "mode").get<std::string>();
  if (mode != "representation" && mode != "bilateral") throw UsageError("ablation mode must be representation or bilateral");
  if (cfg.optim.snapshot_every == 0) cfg.optim.snapshot_every = std::max(1, cfg.optim.iterations / 8);
  const fs::path out(c.out);
  fs::create_directories(out);
  write_config_file(out / "config.json", cfg);
  LoadedTask lt = load_task(cfg);

  if (mode == "representation") {
    const RepresentationAblation a = ablate_representation(lt.task, *lt.model, cfg.optim);
    write_trace(out, "trace_implicit", a.implicit_run.trace);
    write_trace(out, "trace_pixel", a.pixel_run.trace);
    write_rgb(out / "variance.png", line_plot({{"implicit", variance_series(a.implicit_run.trace)},
                                               {"pixel", variance_series(a.pixel_run.trace)}}));
    write_rgb(out / "strip_implicit.png", strip(a.implicit_run.trace, nullptr));
    write_rgb(out / "strip_pixel.png", strip(a.pixel_run.trace, nullptr));
  } else {
    const BilateralAblation a = ablate_bilateral(lt.task, *lt.model, cfg.optim);
    write_trace(out, "trace_with", a.with_filter.trace);
    write_trace(out, "trace_without", a.without_filter.trace);
    write_rgb(out / "variance.png", line_plot({{"with filter", variance_series(a.with_filter.trace)},
                                               {"without filter", variance_series(a.without_filter.trace)}}));
    write_rgb(out / "strip_overlay_with.png", strip(a.with_filter.trace, &lt.task.image));
    write_rgb(out / "strip_overlay_without.png", strip(a.without_filter.trace, &lt.task.image));
    write_rgb(out / "strip_mask_with.png", strip(a.with_filter.trace, nullptr));
    write_rgb(out / "strip_mask_without.png", strip(a.without_filter.trace, nullptr));
  }
  std::cout << mode << " ablation written to " << out.string() << "\n";
  return kExitOk;
}

int cmd_make_scene(const std::string& out_dir, int size, std::uint64_t seed, const std::string& caption) {
  const fs::path out(out_dir);
  const OracleScene s = make_oracle_scene(size, size, seed, caption);
  write_rgb(out / "image.png", s.image);
  write_rgb(out / "target.png", s.target);
  fs::create_directories(out);
  write_mask_png((out / "mask.png").string(), s.ground_truth);
  write_text(out / "scene.json", json{{"image", "image.png"}, {"oracle_target", "target.png"}, {"mask", "mask.png"},
                                      {"caption", s.caption}, {"seed", seed}, {"size", size}}.dump(2) + "\n");
  std::cout << "dreamseg segment --image " << (out / "image.png").string() << " --prompt \"" << s.caption
            << "\" --oracle-target " << (out / "target.png").string() << " --gt " << (out / "mask.png").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-prompted segmentation by score distillation through alpha compositing."};
  app.require_subcommand(1);

  Common seg_c;
  TaskFlags seg_t;
  auto* seg = app.add_subcommand("segment", "optimize one mask per prompt for an image");
  add_common(seg, seg_c);
  add_task_flags(seg, seg_t);

  Common eval_c;
  std::string manifest;
  std::string predict;
  auto* ev = app.add_subcommand("evaluate", "segment every manifest entry and score it");
  add_common(ev, eval_c);
  ev->add_option("--manifest", manifest, "JSON-lines dataset manifest");
  ev->add_option("--predict", predict, "optimize | whole-image");

  Common grid_c;
  GridFlags grid_f;
  auto* grid = app.add_subcommand("grid", "composite-grid experiment: N foregrounds x M backgrounds");
  add_common(grid, grid_c);
  grid->add_option("--fg", grid_f.fg, "foreground prompt (repeatable)");
  grid->add_option("--bg", grid_f.bg, "background prompt (repeatable)");
  grid->add_option("--n-fg", grid_f.n_fg, "number of generated foreground prompts when --fg is absent");
  grid->add_option("--n-bg", grid_f.n_bg, "number of generated background prompts when --bg is absent");
  grid->add_option("--template", grid_f.caption_template, "caption template with {fg} and {bg}");
  grid->add_option("--size", grid_f.size, "cell resolution in pixels");

  Common abl_c;
  TaskFlags abl_t;
  std::string abl_mode;
  auto* abl = app.add_subcommand("ablate", "paired runs: representation (implicit vs pixel) or bilateral (on vs off)");
  add_common(abl, abl_c);
  add_task_flags(abl, abl_t);
  abl->add_option("mode", abl_mode, "representation | bilateral");

  std::string scene_out = "scene";
  int scene_size = 64;
  std::uint64_t scene_seed = 0;
  std::string scene_caption = "a bright object";
  auto* scene = app.add_subcommand("make-oracle-scene", "write a synthetic scene with its oracle target and mask");
  scene->add_option("--out", scene_out, "output directory")->capture_default_str();
  scene->add_option("--size", scene_size, "side length in pixels")->capture_default_str();
  scene->add_option("--seed", scene_seed, "scene seed")->capture_default_str();
  scene->add_option("--caption", scene_caption, "caption for the scene")->capture_default_str();

  std::string ds_out = "oracle_dataset";
  int ds_count = 20;
  int ds_size = 64;
  std::uint64_t ds_seed = 0;
  auto* ds = app.add_subcommand("make-oracle-dataset", "write a manifest-formatted synthetic dataset");
  ds->add_option("--out", ds_out, "output directory")->capture_default_str();
  ds->add_option("--count", ds_count, "number of scenes")->capture_default_str();
  ds->add_option("--size", ds_size, "side length in pixels")->capture_default_str();
  ds->add_option("--seed", ds_seed, "dataset seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*seg) return cmd_segment(seg_c, seg_t);
    if (*ev) return cmd_evaluate(eval_c, manifest, predict);
    if (*grid) return cmd_grid(grid_c, grid_f);
    if (*abl) return cmd_ablate(abl_c, abl_mode, abl_t);
    if (*scene) return cmd_make_scene(scene_out, scene_size, scene_seed, scene_caption);
    if (*ds) {
      std::cout << write_oracle_dataset(ds_out, ds_count, ds_size, ds_size, ds_seed) << "\n";
      return kExitOk;
    }
  } catch (const OptimizationAborted& e) {
    std::cerr << "error: optimization aborted: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ImageIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ModelLoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UnknownCaption& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInput;
}
