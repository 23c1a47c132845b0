#include "dreamseg/compositing.hpp"

#include <algorithm>
#include <stdexcept>

namespace dreamseg {

std::vector<UniformBackground> sample_backgrounds(int n_b, Rng& rng) {
  if (n_b < 1) throw std::invalid_argument("n_b must be >= 1");
  std::vector<UniformBackground> out(static_cast<std::size_t>(n_b));
  for (auto& bg : out) {
    for (double& c : bg.color) c = uniform(rng);
  }
  return out;
}

RasterImage composite(const RasterImage& image, std::span<const double> mask,
                      const UniformBackground& background) {
  const std::size_t n = static_cast<std::size_t>(image.height()) * image.width();
  if (mask.size() != n) throw std::invalid_argument("mask shape does not match image");
  Tensor3 out(image.height(), image.width(), 3);
  const auto& x = image.pixels().values;
  for (std::size_t p = 0; p < n; ++p) {
    const double y = mask[p];
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("mask entries must be in [0,1]");
    for (int c = 0; c < 3; ++c) {
      out.values[p * 3 + c] =
          std::clamp(y * x[p * 3 + c] + (1.0 - y) * background.color[c], 0.0, 1.0);
    }
  }
  return RasterImage(std::move(out));
}

RasterImage composite(const RasterImage& image, const Plane& mask,
                      const UniformBackground& background) {
  if (mask.height != image.height() || mask.width != image.width()) {
    throw std::invalid_argument("mask shape does not match image");
  }
  return composite(image, std::span<const double>(mask.values), background);
}

CompositeBatch composite_batch(const RasterImage& image, const AlphaMaskStack& masks,
                               std::span<const UniformBackground> backgrounds) {
  if (backgrounds.empty()) throw std::invalid_argument("composite_batch needs at least one background");
  if (masks.height != image.height() || masks.width != image.width()) {
    throw std::invalid_argument("mask stack shape does not match image");
  }
  CompositeBatch batch;
  batch.n_b = static_cast<int>(backgrounds.size());
  batch.composites.reserve(static_cast<std::size_t>(masks.k) * backgrounds.size());
  for (int k = 0; k < masks.k; ++k) {
    for (int j = 0; j < batch.n_b; ++j) {
      batch.composites.push_back({composite(image, masks.plane(k), backgrounds[j]), k, j});
    }
  }
  return batch;
}

Plane composite_mask_vjp(const Tensor3& pixel_grad, const RasterImage& image,
                         const UniformBackground& background) {
  if (!pixel_grad.same_shape(image.pixels())) {
    throw std::invalid_argument("pixel gradient shape does not match image");
  }
  Plane out(image.height(), image.width());
  const auto& x = image.pixels().values;
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) acc += pixel_grad.values[p * 3 + c] * (x[p * 3 + c] - background.color[c]);
    out.values[p] = acc;
  }
  return out;
}

}  // namespace dreamseg
