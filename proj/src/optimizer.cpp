#include "dreamseg/optimizer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

#include "dreamseg/compositing.hpp"
#include "dreamseg/rng.hpp"

namespace dreamseg {

Representation parse_representation(std::string_view name) {
  if (name == "implicit") return Representation::Implicit;
  if (name == "pixel") return Representation::Pixel;
  throw std::invalid_argument("unknown representation '" + std::string(name) + "'");
}

std::string to_string(Representation r) { return r == Representation::Implicit ? "implicit" : "pixel"; }

BilateralMode parse_bilateral_mode(std::string_view name) {
  if (name == "init") return BilateralMode::Init;
  if (name == "per-step") return BilateralMode::PerStep;
  throw std::invalid_argument("unknown bilateral mode '" + std::string(name) + "'");
}

std::string to_string(BilateralMode m) { return m == BilateralMode::Init ? "init" : "per-step"; }

void OptimConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (n_b < 1) throw std::invalid_argument("n_b must be >= 1");
  if (!(t_min > 0.0 && t_min <= t_max && t_max < 1.0)) {
    throw std::invalid_argument("t range must satisfy 0 < t_min <= t_max < 1");
  }
  if (weights.dream < 0.0 || weights.gravity < 0.0 || weights.intersection < 0.0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
  bilateral.validate();
}

OptimConfig external_preset() { return OptimConfig{}; }

OptimConfig oracle_preset() {
  OptimConfig c;
  c.learning_rate = 1e-5 * kOracleLrScale;
  c.weights.dream = 7.5;
  c.n_b = 8;
  c.per_composite_noise = true;
  c.field.fourier_scale = 4.0;
  return c;
}

OptimConfig oracle_grid_preset() {
  OptimConfig c;
  c.learning_rate = 1e-5 * kOracleGridLrScale;
  c.per_composite_noise = true;
  c.field.fourier_scale = 4.0;
  return c;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

/// The k masks of one task, held by one shared network or one network per
/// caption.
class MaskModel {
 public:
  MaskModel(int k, int height, int width, const OptimConfig& config) : k_(k), height_(height), width_(width) {
    if (config.representation == Representation::Pixel) {
      parts_.emplace_back(PixelMaskParams(k, height, width, 0.0));
    } else if (config.shared_network) {
      parts_.emplace_back(init_fourier_params(k, height, width, config.field, config.seed));
    } else {
      for (int i = 0; i < k; ++i) {
        parts_.emplace_back(init_fourier_params(1, height, width, config.field, derive_seed(config.seed, 100 + i)));
      }
    }
    caches_.resize(parts_.size());
  }

  void bilateral_init(const RasterImage& image, const OptimConfig& config) {
    for (auto& part : parts_) part = init_mask_with_bilateral(part, image, config.bilateral, config.fit);
  }

  AlphaMaskStack forward() {
    AlphaMaskStack out(k_, height_, width_);
    int offset = 0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const AlphaMaskStack r = rasterize(parts_[i], height_, width_, &caches_[i]);
      caches_[i].height = height_;
      caches_[i].width = width_;
      std::copy(r.alphas.begin(), r.alphas.end(), out.alphas.begin() + offset * out.plane_size());
      offset += r.k;
    }
    return out;
  }

  void sgd_step(const AlphaMaskStack& upstream, double lr) {
    int offset = 0;
    std::vector<Eigen::VectorXd> grads;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const int k = mask_count(parts_[i]);
      AlphaMaskStack slice(k, height_, width_);
      std::copy(upstream.alphas.begin() + offset * upstream.plane_size(),
                upstream.alphas.begin() + (offset + k) * upstream.plane_size(), slice.alphas.begin());
      offset += k;
      grads.push_back(raster_vjp(parts_[i], caches_[i], slice));
      if (!grads.back().allFinite()) throw OptimizationAborted("non-finite parameter gradient");
    }
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      auto data = param_data(parts_[i]);
      for (std::size_t p = 0; p < data.size(); ++p) data[p] -= lr * grads[i][static_cast<Eigen::Index>(p)];
    }
  }

  [[nodiscard]] const std::vector<MaskParams>& parts() const { return parts_; }

 private:
  int k_;
  int height_;
  int width_;
  std::vector<MaskParams> parts_;
  std::vector<RasterCache> caches_;
};

void filter_planes(AlphaMaskStack& masks, const BilateralOperator& op) {
  for (int k = 0; k < masks.k; ++k) masks.set_plane(k, op.apply(masks.plane_copy(k)));
}

void filter_planes_adjoint(AlphaMaskStack& grads, const BilateralOperator& op) {
  for (int k = 0; k < grads.k; ++k) grads.set_plane(k, op.apply_adjoint(grads.plane_copy(k)));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_finite(const AlphaMaskStack& g) {
  for (double v : g.alphas) {
    if (!std::isfinite(v)) throw OptimizationAborted("non-finite mask gradient");
  }
}

}  // namespace

SegmentResult segment(const SegmentationTask& task, const ScoreModel& model, const OptimConfig& config) {
  config.validate();
  if (task.captions.empty()) throw std::invalid_argument("segmentation task needs at least one caption");
  for (const auto& c : task.captions) {
    if (c.empty()) throw std::invalid_argument("captions must be non-empty");
  }
  const int height = task.image.height();
  const int width = task.image.width();
  const int f = model.downsample();
  if (height % f != 0 || width % f != 0) {
    throw std::invalid_argument("image dimensions must be divisible by the encoder factor " + std::to_string(f));
  }
  const int k = static_cast<int>(task.captions.size());
  const ObjectiveWeights weights = effective_weights(config.weights, config.task_mode);

  MaskModel masks_model(k, height, width, config);
  if (config.bilateral.iterations > 0 && config.bilateral_mode == BilateralMode::Init) {
    masks_model.bilateral_init(task.image, config);
  }
  std::unique_ptr<BilateralOperator> per_step;
  if (config.bilateral.iterations > 0 && config.bilateral_mode == BilateralMode::PerStep) {
    per_step = std::make_unique<BilateralOperator>(task.image, config.bilateral);
  }

  std::vector<TextEmbedding> embeddings;
  embeddings.reserve(task.captions.size());
  for (const auto& c : task.captions) embeddings.push_back(model.encode_text(c));
  const Latent latent_shape = model.encode_image(task.image);

  Rng rng(derive_seed(config.seed, 1));
  SegmentResult result;
  result.trace.records.reserve(static_cast<std::size_t>(config.iterations));

  for (int it = 0; it < config.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    double t = uniform(rng, config.t_min, config.t_max);
    Latent eps = sample_noise_like(latent_shape, rng);
    const auto backgrounds = sample_backgrounds(config.n_b, rng);

    AlphaMaskStack masks = masks_model.forward();
    if (per_step) filter_planes(masks, *per_step);

    AlphaMaskStack dream_grad(k, height, width, 0.0);
    double dream_loss = 0.0;
    for (int ki = 0; ki < k; ++ki) {
      for (const auto& bg : backgrounds) {
        if (config.per_composite_noise) {
          t = uniform(rng, config.t_min, config.t_max);
          eps = sample_noise_like(latent_shape, rng);
        }
        const RasterImage comp = composite(task.image, masks.plane(ki), bg);
        const DreamGradSample s = dream_pixel_grad(comp, embeddings[ki], model, t, eps, config.latent_grad_mode);
        dream_loss += s.loss;
        const Plane g = composite_mask_vjp(s.pixel_grad, task.image, bg);
        auto dst = dream_grad.plane(ki);
        for (std::size_t p = 0; p < g.values.size(); ++p) dst[p] += g.values[p];
      }
    }

    AlphaMaskStack grad = assemble_mask_gradient(dream_grad, masks, weights);
    check_finite(grad);
    if (per_step) filter_planes_adjoint(grad, *per_step);

    IterationRecord rec;
    rec.iteration = it + 1;
    rec.t = t;
    rec.loss = total_objective(dream_loss, gravity_loss(masks), intersection_loss(masks), weights, height, width);
    rec.variance = pixel_variance(masks);
    rec.mean_alpha = mean_of(masks.alphas);
    if (config.snapshot_every > 0 && it % config.snapshot_every == 0) {
      result.trace.snapshots.emplace_back(it, masks);
    }

    masks_model.sgd_step(grad, config.learning_rate);
    rec.wall_ms = elapsed_ms(start);
    result.trace.records.push_back(rec);
  }

  result.masks = masks_model.forward();
  if (per_step) filter_planes(result.masks, *per_step);
  if (config.snapshot_every > 0) result.trace.snapshots.emplace_back(config.iterations, result.masks);
  result.params = masks_model.parts();
  return result;
}

RepresentationAblation ablate_representation(const SegmentationTask& task, const ScoreModel& model,
                                             OptimConfig config) {
  RepresentationAblation out;
  config.representation = Representation::Implicit;
  out.implicit_run = segment(task, model, config);
  config.representation = Representation::Pixel;
  out.pixel_run = segment(task, model, config);
  return out;
}

BilateralAblation ablate_bilateral(const SegmentationTask& task, const ScoreModel& model, OptimConfig config) {
  if (config.bilateral.iterations == 0) config.bilateral.iterations = BilateralConfig{}.iterations;
  BilateralAblation out;
  out.with_filter = segment(task, model, config);
  config.bilateral.iterations = 0;
  out.without_filter = segment(task, model, config);
  return out;
}

void GridExperimentSpec::validate() const {
  if (fg_prompts.empty() || bg_prompts.empty()) throw std::invalid_argument("grid needs N, M >= 1");
  if (height <= 0 || width <= 0) throw std::invalid_argument("grid resolution must be positive");
  if (caption_template.find("{fg}") == std::string::npos || caption_template.find("{bg}") == std::string::npos) {
    throw std::invalid_argument("caption template must contain {fg} and {bg}");
  }
}

std::string grid_caption(const std::string& caption_template, const std::string& fg, const std::string& bg) {
  std::string out;
  for (std::size_t i = 0; i < caption_template.size();) {
    if (caption_template.compare(i, 4, "{fg}") == 0) {
      out += fg;
      i += 4;
    } else if (caption_template.compare(i, 4, "{bg}") == 0) {
      out += bg;
      i += 4;
    } else {
      out += caption_template[i++];
    }
  }
  return out;
}

GridResult run_grid_experiment(const GridExperimentSpec& spec, const ScoreModel& model, const OptimConfig& config) {
  spec.validate();
  config.validate();
  const int n_fg = static_cast<int>(spec.fg_prompts.size());
  const int n_bg = static_cast<int>(spec.bg_prompts.size());
  const int height = spec.height;
  const int width = spec.width;
  const int f = model.downsample();
  if (height % f != 0 || width % f != 0) {
    throw std::invalid_argument("grid resolution must be divisible by the encoder factor " + std::to_string(f));
  }
  const std::size_t npx = static_cast<std::size_t>(height) * width;

  FourierMaskParams fg_net = init_fourier_params(4 * n_fg, height, width, config.field, derive_seed(config.seed, 200));
  FourierMaskParams bg_net = init_fourier_params(3 * n_bg, height, width, config.field, derive_seed(config.seed, 201));

  std::vector<std::string> captions;
  std::vector<TextEmbedding> embeddings;
  for (int n = 0; n < n_fg; ++n) {
    for (int m = 0; m < n_bg; ++m) {
      captions.push_back(grid_caption(spec.caption_template, spec.fg_prompts[n], spec.bg_prompts[m]));
      embeddings.push_back(model.encode_text(captions.back()));
    }
  }
  const Latent latent_shape = model.encode_image(RasterImage(height, width, 0.5));
  Rng rng(derive_seed(config.seed, 2));
  RasterCache fg_cache;
  RasterCache bg_cache;
  GridResult result;

  auto compose = [&](const AlphaMaskStack& fg, const AlphaMaskStack& bg, int n, int m) {
    Tensor3 px(height, width, 3);
    const auto a = fg.plane(4 * n + 3);
    for (std::size_t p = 0; p < npx; ++p) {
      for (int c = 0; c < 3; ++c) {
        px.values[p * 3 + c] = std::clamp(a[p] * fg.plane(4 * n + c)[p] + (1.0 - a[p]) * bg.plane(3 * m + c)[p], 0.0, 1.0);
      }
    }
    return RasterImage(std::move(px));
  };

  for (int it = 0; it < config.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    double t = uniform(rng, config.t_min, config.t_max);
    Latent eps = sample_noise_like(latent_shape, rng);

    const AlphaMaskStack fg = rasterize(fg_net, height, width, &fg_cache);
    const AlphaMaskStack bg = rasterize(bg_net, height, width, &bg_cache);
    AlphaMaskStack d_fg(fg.k, height, width, 0.0);
    AlphaMaskStack d_bg(bg.k, height, width, 0.0);
    double dream_loss = 0.0;

    for (int n = 0; n < n_fg; ++n) {
      for (int m = 0; m < n_bg; ++m) {
        if (config.per_composite_noise) {
          t = uniform(rng, config.t_min, config.t_max);
          eps = sample_noise_like(latent_shape, rng);
        }
        const RasterImage comp = compose(fg, bg, n, m);
        const DreamGradSample s =
            dream_pixel_grad(comp, embeddings[static_cast<std::size_t>(n * n_bg + m)], model, t, eps, config.latent_grad_mode);
        dream_loss += s.loss;
        const auto a = fg.plane(4 * n + 3);
        auto da = d_fg.plane(4 * n + 3);
        for (std::size_t p = 0; p < npx; ++p) {
          for (int c = 0; c < 3; ++c) {
            const double g = config.weights.dream * s.pixel_grad.values[p * 3 + c];
            d_fg.plane(4 * n + c)[p] += a[p] * g;
            d_bg.plane(3 * m + c)[p] += (1.0 - a[p]) * g;
            da[p] += g * (fg.plane(4 * n + c)[p] - bg.plane(3 * m + c)[p]);
          }
        }
      }
    }

    const Eigen::VectorXd g_fg = raster_vjp(fg_net, fg_cache, d_fg);
    const Eigen::VectorXd g_bg = raster_vjp(bg_net, bg_cache, d_bg);
    if (!g_fg.allFinite() || !g_bg.allFinite()) throw OptimizationAborted("non-finite parameter gradient");
    for (std::size_t p = 0; p < fg_net.parameter_count(); ++p) {
      fg_net.data()[p] -= config.learning_rate * g_fg[static_cast<Eigen::Index>(p)];
    }
    for (std::size_t p = 0; p < bg_net.parameter_count(); ++p) {
      bg_net.data()[p] -= config.learning_rate * g_bg[static_cast<Eigen::Index>(p)];
    }

    IterationRecord rec;
    rec.iteration = it + 1;
    rec.t = t;
    rec.loss.dream = config.weights.dream * dream_loss;
    rec.loss.total = rec.loss.dream;
    rec.variance = pixel_variance(fg);
    rec.mean_alpha = mean_of(fg.alphas);
    rec.wall_ms = elapsed_ms(start);
    result.trace.records.push_back(rec);
  }

  const AlphaMaskStack fg = rasterize(fg_net, height, width);
  const AlphaMaskStack bg = rasterize(bg_net, height, width);
  for (int n = 0; n < n_fg; ++n) {
    Tensor3 px(height, width, 3);
    for (std::size_t p = 0; p < npx; ++p) {
      for (int c = 0; c < 3; ++c) px.values[p * 3 + c] = fg.plane(4 * n + c)[p];
    }
    result.foregrounds.emplace_back(std::move(px));
    result.alphas.push_back(fg.plane_copy(4 * n + 3));
  }
  for (int m = 0; m < n_bg; ++m) {
    Tensor3 px(height, width, 3);
    for (std::size_t p = 0; p < npx; ++p) {
      for (int c = 0; c < 3; ++c) px.values[p * 3 + c] = bg.plane(3 * m + c)[p];
    }
    result.backgrounds.emplace_back(std::move(px));
  }
  for (int n = 0; n < n_fg; ++n) {
    for (int m = 0; m < n_bg; ++m) {
      result.cells.push_back({n, m, captions[static_cast<std::size_t>(n * n_bg + m)], compose(fg, bg, n, m)});
    }
  }
  return result;
}

std::string trace_jsonl(const OptimTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    const nlohmann::json j = {{"iteration", r.iteration},
                              {"t", r.t},
                              {"loss",
                               {{"total", r.loss.total},
                                {"dream", r.loss.dream},
                                {"gravity", r.loss.gravity},
                                {"intersection", r.loss.intersection}}},
                              {"variance", r.variance},
                              {"mean_alpha", r.mean_alpha}};
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::string timing_jsonl(const OptimTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    out += nlohmann::json{{"iteration", r.iteration}, {"wall_ms", r.wall_ms}}.dump();
    out += "\n";
  }
  return out;
}

}  // namespace dreamseg
