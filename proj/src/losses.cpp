#include "dreamseg/losses.hpp"

#include <stdexcept>

namespace dreamseg {

LatentGradMode parse_latent_grad_mode(std::string_view name) {
  if (name == "through-encoder") return LatentGradMode::ThroughEncoder;
  if (name == "nearest-pixel") return LatentGradMode::NearestPixel;
  throw std::invalid_argument("unknown latent_grad_mode '" + std::string(name) + "'");
}

std::string to_string(LatentGradMode mode) {
  return mode == LatentGradMode::ThroughEncoder ? "through-encoder" : "nearest-pixel";
}

TaskMode parse_task_mode(std::string_view name) {
  if (name == "referring") return TaskMode::Referring;
  if (name == "semantic") return TaskMode::Semantic;
  throw std::invalid_argument("unknown task mode '" + std::string(name) + "'");
}

std::string to_string(TaskMode mode) { return mode == TaskMode::Referring ? "referring" : "semantic"; }

namespace {

Tensor3 nearest_pixel_pullback(const Latent& residual, int height, int width) {
  const int f = residual.downsample;
  const int channels = residual.values.channels;
  Tensor3 out(height, width, 3);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const int li = std::min(i / f, residual.values.height - 1);
      const int lj = std::min(j / f, residual.values.width - 1);
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) out.at(i, j, c) = residual.values.at(li, lj, c);
      } else {
        double mean = 0.0;
        for (int c = 0; c < channels; ++c) mean += residual.values.at(li, lj, c);
        mean /= channels;
        for (int c = 0; c < 3; ++c) out.at(i, j, c) = mean;
      }
    }
  }
  return out;
}

}  // namespace

DreamGradSample dream_pixel_grad(const RasterImage& composite, const TextEmbedding& text,
                                 const ScoreModel& model, double t, const Latent& eps,
                                 LatentGradMode mode) {
  const NoiseSchedule& schedule = model.schedule();
  const Latent z = model.encode_image(composite);
  if (!z.values.same_shape(eps.values)) {
    throw std::invalid_argument("noise draw does not match the latent shape");
  }
  const Latent z_t = add_noise(z, eps, t, schedule);
  const Latent eps_hat = model.predict_noise(z_t, text, t);

  DreamGradSample s;
  s.t = t;
  s.weight = schedule.weight(t);
  s.eps = eps;
  s.residual = eps_hat;
  double sq = 0.0;
  for (std::size_t i = 0; i < s.residual.values.values.size(); ++i) {
    s.residual.values.values[i] -= eps.values.values[i];
    sq += s.residual.values.values[i] * s.residual.values.values[i];
  }
  s.loss = s.weight * sq;

  if (mode == LatentGradMode::ThroughEncoder) {
    s.pixel_grad = model.encode_image_vjp(composite, s.residual);
    const double scale = s.weight * schedule.alpha(t);
    for (double& v : s.pixel_grad.values) v *= scale;
  } else {
    s.pixel_grad = nearest_pixel_pullback(s.residual, composite.height(), composite.width());
    for (double& v : s.pixel_grad.values) v *= s.weight;
  }
  return s;
}

DreamGradSample dream_pixel_grad(const RasterImage& composite, const std::string& caption,
                                 const ScoreModel& model, double t, const Latent& eps,
                                 LatentGradMode mode) {
  return dream_pixel_grad(composite, model.encode_text(caption), model, t, eps, mode);
}

Eigen::VectorXd dream_param_grad(const DreamGradSample& sample, const RasterImage& image,
                                 const UniformBackground& background, const MaskParams& params,
                                 int mask_index, const RasterCache& cache) {
  const int k = mask_count(params);
  if (mask_index < 0 || mask_index >= k) throw std::invalid_argument("mask index out of range");
  if (cache.height != image.height() || cache.width != image.width()) {
    throw std::invalid_argument("raster cache does not match image size");
  }
  const Plane mask_grad = composite_mask_vjp(sample.pixel_grad, image, background);
  AlphaMaskStack upstream(k, image.height(), image.width(), 0.0);
  upstream.set_plane(mask_index, mask_grad);
  return raster_vjp(params, cache, upstream);
}

Eigen::VectorXd dream_param_grad(const DreamGradSample& sample, const RasterImage& image,
                                 const UniformBackground& background, const MaskParams& params,
                                 int mask_index) {
  RasterCache cache;
  (void)rasterize(params, image.height(), image.width(), &cache);
  cache.height = image.height();
  cache.width = image.width();
  return dream_param_grad(sample, image, background, params, mask_index, cache);
}

double gravity_loss(const AlphaMaskStack& masks) {
  double acc = 0.0;
  for (double v : masks.alphas) acc += v;
  return acc;
}

double intersection_loss(const AlphaMaskStack& masks) {
  double acc = 0.0;
  const std::size_t n = masks.plane_size();
  for (int a = 0; a < masks.k; ++a) {
    for (int b = a + 1; b < masks.k; ++b) {
      for (std::size_t p = 0; p < n; ++p) acc += masks.alphas[a * n + p] * masks.alphas[b * n + p];
    }
  }
  return acc;
}

AlphaMaskStack gravity_grad(const AlphaMaskStack& masks) {
  return AlphaMaskStack(masks.k, masks.height, masks.width, 1.0);
}

AlphaMaskStack intersection_grad(const AlphaMaskStack& masks) {
  AlphaMaskStack g(masks.k, masks.height, masks.width, 0.0);
  const std::size_t n = masks.plane_size();
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (int k = 0; k < masks.k; ++k) s += masks.alphas[k * n + p];
    for (int k = 0; k < masks.k; ++k) g.alphas[k * n + p] = s - masks.alphas[k * n + p];
  }
  return g;
}

ObjectiveWeights effective_weights(ObjectiveWeights weights, TaskMode mode) {
  if (mode == TaskMode::Referring) {
    weights.intersection_enabled = false;
    weights.intersection = 0.0;
  }
  return weights;
}

ObjectiveTerms total_objective(double dream, double gravity, double intersection,
                               const ObjectiveWeights& weights, int height, int width) {
  ObjectiveTerms t;
  t.dream = weights.dream * dream;
  t.gravity = weights.gravity * gravity;
  if (weights.normalize_gravity) t.gravity /= static_cast<double>(height) * width;
  t.intersection = weights.intersection_enabled ? weights.intersection * intersection : 0.0;
  t.total = t.dream + t.gravity + t.intersection;
  return t;
}

AlphaMaskStack assemble_mask_gradient(const AlphaMaskStack& dream_grad, const AlphaMaskStack& masks,
                                      const ObjectiveWeights& weights) {
  if (dream_grad.k != masks.k || dream_grad.height != masks.height || dream_grad.width != masks.width) {
    throw std::invalid_argument("dream gradient shape does not match masks");
  }
  AlphaMaskStack g = dream_grad;
  double gravity = weights.gravity;
  if (weights.normalize_gravity) gravity /= static_cast<double>(masks.height) * masks.width;
  const bool overlap = weights.intersection_enabled && weights.intersection != 0.0 && masks.k > 1;
  const AlphaMaskStack inter = overlap ? intersection_grad(masks) : AlphaMaskStack{};
  for (std::size_t i = 0; i < g.alphas.size(); ++i) {
    g.alphas[i] = weights.dream * g.alphas[i] + gravity;
    if (overlap) g.alphas[i] += weights.intersection * inter.alphas[i];
  }
  return g;
}

}  // namespace dreamseg
