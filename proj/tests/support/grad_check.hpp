#pragma once

// Finite-difference check of the dream parameter gradient on small oracle
// instances. The residual eps_hat - eps is frozen, so the surrogate
//   L(theta) = sum_k weight * alpha * <residual_k, E(composite_k(theta))>
// has exactly the gradient the optimizer applies.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dreamseg/compositing.hpp"
#include "dreamseg/implicit_mask.hpp"
#include "dreamseg/losses.hpp"
#include "dreamseg/score_model.hpp"

namespace dreamseg::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

inline RasterImage seeded_image(int h, int w, Rng& rng) {
  RasterImage img(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c) img.set(i, j, c, uniform(rng));
  return img;
}

inline GradCheckResult dream_grad_check(std::uint64_t seed, int k, bool train_frequencies, int size = 8) {
  Rng rng(seed);
  const RasterImage image = seeded_image(size, size, rng);
  std::map<std::string, RasterImage> targets;
  std::vector<std::string> captions;
  for (int i = 0; i < k; ++i) {
    captions.push_back("caption " + std::to_string(i));
    targets.emplace(captions.back(), seeded_image(size, size, rng));
  }
  const auto model = oracle_score_model(targets, NoiseSchedule::cosine());
  const UniformBackground bg{{uniform(rng), uniform(rng), uniform(rng)}};

  FieldConfig field;
  field.fourier_scale = 4.0;
  field.train_frequencies = train_frequencies;
  FourierMaskParams params = init_fourier_params(k, size, size, field, seed);

  // Frozen residuals from the current parameters.
  const AlphaMaskStack masks = rasterize(params, size, size);
  std::vector<DreamGradSample> samples;
  for (int i = 0; i < k; ++i) {
    const RasterImage x = composite(image, masks.plane_copy(i), bg);
    const Latent eps = sample_noise_like(model->encode_image(x), rng);
    samples.push_back(dream_pixel_grad(x, captions[i], *model, uniform(rng, 0.02, 0.98), eps));
  }

  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));
  for (int i = 0; i < k; ++i) analytic += dream_param_grad(samples[i], image, bg, MaskParams(params), i);

  auto surrogate = [&](const FourierMaskParams& p) {
    const AlphaMaskStack m = rasterize(p, size, size);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      const Latent z = model->encode_image(composite(image, m.plane_copy(i), bg));
      const double scale = samples[i].weight * model->schedule().alpha(samples[i].t);
      for (std::size_t n = 0; n < z.values.size(); ++n) total += scale * samples[i].residual.values.values[n] * z.values.values[n];
    }
    return total;
  };

  // A few coordinates from every block of the layout.
  std::vector<std::size_t> coords;
  auto pick = [&](std::size_t begin, std::size_t count, int n) {
    for (int i = 0; i < n && count > 0; ++i) coords.push_back(begin + static_cast<std::size_t>(uniform(rng) * count));
  };
  if (train_frequencies) pick(0, params.frequency_count(), 6);
  const auto widths = params.widths();
  for (int l = 0; l < kFieldLayers; ++l) {
    pick(params.weight_offset(l), static_cast<std::size_t>(widths[l]) * widths[l + 1], 8);
    pick(params.bias_offset(l), static_cast<std::size_t>(widths[l + 1]), 3);
  }

  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-300);
  const double h = 1e-5;
  GradCheckResult out;
  auto data = params.data();
  for (std::size_t c : coords) {
    const double keep = data[c];
    data[c] = keep + h;
    const double up = surrogate(params);
    data[c] = keep - h;
    const double down = surrogate(params);
    data[c] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double an = analytic[static_cast<Eigen::Index>(c)];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-6 * scale});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - an) / denom);
    ++out.checked;
  }
  return out;
}

}  // namespace dreamseg::testing
