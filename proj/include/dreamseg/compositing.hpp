#pragma once

#include <array>
#include <span>
#include <vector>

#include "dreamseg/rng.hpp"
#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// Flat background color, each channel in [0,1].
struct UniformBackground {
  std::array<double, 3> color{0.0, 0.0, 0.0};
};

struct CompositeEntry {
  RasterImage image;
  int mask_index = 0;
  int background_index = 0;
};

/// One composite per (mask, background) pair, mask-major.
struct CompositeBatch {
  std::vector<CompositeEntry> composites;
  int n_b = 0;
};

/// n_b colors uniform over the RGB cube, 3 draws each.
std::vector<UniformBackground> sample_backgrounds(int n_b, Rng& rng);

/// y * x + (1 - y) * b per pixel.
RasterImage composite(const RasterImage& image, std::span<const double> mask,
                      const UniformBackground& background);
RasterImage composite(const RasterImage& image, const Plane& mask,
                      const UniformBackground& background);

CompositeBatch composite_batch(const RasterImage& image, const AlphaMaskStack& masks,
                               std::span<const UniformBackground> backgrounds);

/// Pulls an upstream gradient on the composite back onto its mask:
/// dL/dy(p) = sum_c dL/dx_hat(p,c) * (x(p,c) - b_c).
Plane composite_mask_vjp(const Tensor3& pixel_grad, const RasterImage& image,
                         const UniformBackground& background);

}  // namespace dreamseg
