#include "dreamseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dreamseg {

namespace {

void check_dims(int h, int w) {
  if (h <= 0 || w <= 0) {
    throw std::invalid_argument("grid dimensions must be positive, got " + std::to_string(h) +
                                "x" + std::to_string(w));
  }
}

}  // namespace

Tensor3::Tensor3(int h, int w, int c, double fill)
    : height(h), width(w), channels(c) {
  check_dims(h, w);
  if (c <= 0) throw std::invalid_argument("channel count must be positive");
  values.assign(static_cast<std::size_t>(h) * w * c, fill);
}

Plane::Plane(int h, int w, double fill) : height(h), width(w) {
  check_dims(h, w);
  values.assign(static_cast<std::size_t>(h) * w, fill);
}

RasterImage::RasterImage(int height, int width, double fill)
    : pixels_(height, width, 3, std::clamp(fill, 0.0, 1.0)) {}

RasterImage::RasterImage(Tensor3 pixels) : pixels_(std::move(pixels)) {
  if (pixels_.channels != 3) throw std::invalid_argument("RasterImage needs 3 channels");
  check_dims(pixels_.height, pixels_.width);
  if (pixels_.values.size() != static_cast<std::size_t>(pixels_.height) * pixels_.width * 3) {
    throw std::invalid_argument("RasterImage buffer size does not match shape");
  }
  for (double v : pixels_.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("RasterImage entries must be in [0,1]");
  }
}

void RasterImage::set(int i, int j, int c, double v) { pixels_.at(i, j, c) = std::clamp(v, 0.0, 1.0); }

BinaryMask::BinaryMask(int h, int w, std::uint8_t fill) : height(h), width(w) {
  check_dims(h, w);
  values.assign(static_cast<std::size_t>(h) * w, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

AlphaMaskStack::AlphaMaskStack(int k_, int h, int w, double fill) : k(k_), height(h), width(w) {
  check_dims(h, w);
  if (k_ <= 0) throw std::invalid_argument("mask count must be positive");
  alphas.assign(static_cast<std::size_t>(k_) * h * w, fill);
}

Plane AlphaMaskStack::plane_copy(int index) const {
  Plane p(height, width);
  auto src = plane(index);
  std::copy(src.begin(), src.end(), p.values.begin());
  return p;
}

void AlphaMaskStack::set_plane(int index, const Plane& p) {
  if (p.height != height || p.width != width) throw std::invalid_argument("plane shape mismatch");
  std::copy(p.values.begin(), p.values.end(), plane(index).begin());
}

double pixel_variance(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("pixel_variance of an empty grid");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / n;
}

double pixel_variance(const AlphaMaskStack& mask) { return pixel_variance(mask.alphas); }

double pixel_variance(const RasterImage& image) { return pixel_variance(image.pixels().values); }

}  // namespace dreamseg
