#include <doctest.h>

#include <json.hpp>

#include <fstream>

#include "dreamseg/checkpoint.hpp"
#include "dreamseg/image_io.hpp"
#include "dreamseg/render.hpp"
#include "dreamseg/run_config.hpp"
#include "dreamseg/wire.hpp"
#include "helpers.hpp"

using namespace dreamseg;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_CASE("png round trips") {
  const fs::path dir = testing::scratch_dir("png");
  const RasterImage img = testing::random_image(5, 7, 1);
  write_rgb_png((dir / "rgb.png").string(), img);
  const RasterImage back = read_rgb_png((dir / "rgb.png").string());
  CHECK(testing::max_abs_diff(back.pixels().values, img.pixels().values) <= 0.5 / 255.0 + 1e-12);
  const PngInfo info = probe_png((dir / "rgb.png").string());
  CHECK(info.height == 5);
  CHECK(info.width == 7);
  CHECK(info.channels == 3);

  Plane p(3, 4);
  for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = i / 11.0;
  write_gray_png((dir / "gray.png").string(), p);
  CHECK(probe_png((dir / "gray.png").string()).channels == 1);
  CHECK(testing::max_abs_diff(read_gray_png((dir / "gray.png").string()).values, p.values) <= 0.5 / 255.0 + 1e-12);
  // a gray file reads as rgb too
  CHECK(read_rgb_png((dir / "gray.png").string()).height() == 3);

  BinaryMask m(3, 3);
  m.at(1, 1) = 1;
  write_mask_png((dir / "mask.png").string(), m);
  CHECK(read_mask_png((dir / "mask.png").string()).values == m.values);

  CHECK_THROWS_AS(read_rgb_png((dir / "nope.png").string()), ImageIoError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(read_rgb_png((dir / "junk.png").string()), ImageIoError);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = testing::scratch_dir("ckpt");
  FieldConfig f;
  f.n_freq = 12;
  f.hidden = {9, 8, 7};
  f.fourier_scale = 3.5;
  f.train_frequencies = true;
  Checkpoint ck{16, 12, {}};
  ck.parts.emplace_back(init_fourier_params(2, 16, 12, f, 5));
  ck.parts.emplace_back(init_fourier_params(1, 16, 12, FieldConfig{}, 6));
  AlphaMaskStack a(1, 16, 12, 0.3);
  a.alphas[7] = 0.9;
  ck.parts.emplace_back(PixelMaskParams::from_alphas(a));
  save_checkpoint(dir / "params.json", ck);
  CHECK(fs::exists(dir / "params.bin"));

  const Checkpoint back = load_checkpoint(dir / "params.json");
  CHECK(back.height == 16);
  CHECK(back.width == 12);
  REQUIRE(back.parts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto x = param_data(ck.parts[i]);
    const auto y = param_data(back.parts[i]);
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    CHECK(rasterize(ck.parts[i], 16, 12).alphas == rasterize(back.parts[i], 16, 12).alphas);
  }
  const auto& fp = std::get<FourierMaskParams>(back.parts[0]);
  CHECK(fp.config().train_frequencies);
  CHECK(fp.config().hidden == f.hidden);
  CHECK(fp.seed() == 5);

  const json header = json::parse(std::ifstream(dir / "params.json"));
  CHECK(header.at("dtype") == "float64");
  CHECK(header.at("byte_order") == "little");
  CHECK(fs::file_size(dir / "params.bin") == 8 * header.at("total").get<std::size_t>());

  fs::resize_file(dir / "params.bin", 16);
  CHECK_THROWS_AS(load_checkpoint(dir / "params.json"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.json"), CheckpointError);
}

TEST_CASE("run config defaults and precedence") {
  const RunConfig oracle = default_run_config("oracle");
  CHECK(oracle.optim.learning_rate == oracle_preset().learning_rate);
  CHECK(default_run_config("oracle", RunKind::Grid).optim.learning_rate == oracle_grid_preset().learning_rate);
  const RunConfig ext = default_run_config("external");
  CHECK(ext.schedule == ScheduleKind::ExternalNative);
  CHECK(ext.optim.learning_rate == external_preset().learning_rate);
  CHECK_THROWS_AS(default_run_config("magic"), ConfigError);

  // preset <- file <- flags
  RunConfig cfg = default_run_config("oracle");
  apply_json(cfg, json{{"iterations", 50}, {"loss.gravity", 2.0}, {"bilateral.iterations", 3}});
  apply_json(cfg, json{{"iterations", 70}});
  CHECK(cfg.optim.iterations == 70);
  CHECK(cfg.optim.weights.gravity == 2.0);
  CHECK(cfg.optim.bilateral.iterations == 3);
  CHECK(cfg.optim.weights.dream == oracle_preset().weights.dream);

  CHECK_THROWS_AS(apply_json(cfg, json{{"iteratons", 5}}), ConfigError);
  CHECK_THROWS_AS(apply_json(cfg, json{{"iterations", "many"}}), ConfigError);
  CHECK_THROWS_AS(apply_json(cfg, json{{"schedule", "sqrt"}}), ConfigError);
}

TEST_CASE("run config serializes losslessly") {
  RunConfig cfg = default_run_config("oracle");
  cfg.optim.seed = 12345678901234ULL;
  cfg.optim.learning_rate = 0.1 + 0.2;
  cfg.optim.representation = Representation::Pixel;
  cfg.optim.bilateral_mode = BilateralMode::PerStep;
  cfg.inputs["image"] = "/data/x.png";
  cfg.inputs["prompts"] = json::array({"a", "b"});
  const json j = to_json(cfg);
  CHECK(j.at("input.image") == "/data/x.png");

  RunConfig back = default_run_config("external");
  apply_json(back, j);
  CHECK(to_json(back) == j);
  CHECK(back.optim.seed == 12345678901234ULL);
  CHECK(back.optim.learning_rate == 0.1 + 0.2);

  const fs::path dir = testing::scratch_dir("config");
  write_config_file(dir / "c.json", cfg);
  CHECK(read_config_file(dir / "c.json") == j);
  std::ofstream(dir / "bad.json") << "{oops";
  CHECK_THROWS_AS(read_config_file(dir / "bad.json"), ConfigError);
}

TEST_CASE("score model factory") {
  RunConfig cfg = default_run_config("external");
  CHECK_THROWS_AS(make_score_model(cfg), ConfigError);
  cfg.model = "not-a-url";
  CHECK_THROWS_AS(make_score_model(cfg), ModelLoadError);
  RunConfig oracle = default_run_config("oracle");
  oracle.schedule = ScheduleKind::LinearVp;
  const auto m = make_score_model(oracle, {{"c", RasterImage(2, 2)}});
  CHECK(m->name() == "oracle");
  CHECK(m->schedule().kind() == ScheduleKind::LinearVp);
}

TEST_CASE("wire encodings round trip") {
  const RasterImage img = testing::random_image(2, 3, 4);
  CHECK(wire::decode_image(wire::encode(img)).pixels().values == img.pixels().values);
  Latent z{Tensor3(2, 2, 4, 0.25), 8};
  const Latent back = wire::decode_latent(wire::encode(z), 8);
  CHECK(back.values.values == z.values.values);
  CHECK(back.downsample == 8);
  const TextEmbedding e{"cap", 2, 2, {1, 2, 3, 4}};
  CHECK(wire::decode_embedding(wire::encode(e)).values == e.values);
  json bad = wire::encode(z);
  bad["values"].erase(0);
  CHECK_THROWS(wire::decode_latent(bad, 8));
}

TEST_CASE("render helpers") {
  const RasterImage img = testing::flat_image(4, 4, 0.2, 0.4, 0.6);
  const RasterImage same = overlay(img, Plane(4, 4, 0.0));
  CHECK(same.pixels().values == img.pixels().values);
  const RasterImage full = overlay(img, Plane(4, 4, 1.0), 1.0);
  for (double v : full.pixels().values) CHECK(v == doctest::Approx(1.0));

  const RasterImage t = tile({img, img, img, img, img, img}, 2, 3, 2);
  CHECK(t.height() == 2 * 4 + 2);
  CHECK(t.width() == 3 * 4 + 2 * 2);
  CHECK(hstack({img, img}, 1).width() == 9);
  CHECK_THROWS(tile({img, img, img}, 1, 2));
  CHECK(tile({img}, 2, 2).height() == 10);

  const RasterImage plot = line_plot({{"a", {0.0, 1.0, 0.5}}, {"b", {0.2, 0.2}}}, 60, 100);
  CHECK(plot.height() == 60);
  CHECK(plot.width() == 100);
}
