#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dreamseg {

/// Dense height x width x channels grid of doubles, row-major with
/// interleaved channels. Used for latents, pixel gradients and any
/// image-shaped quantity that is not range-restricted.
struct Tensor3 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(int h, int w, int c, double fill = 0.0);

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] bool same_shape(const Tensor3& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  double& at(int i, int j, int c) {
    return values[(static_cast<std::size_t>(i) * width + j) * channels + c];
  }
  [[nodiscard]] double at(int i, int j, int c) const {
    return values[(static_cast<std::size_t>(i) * width + j) * channels + c];
  }
};

/// Single-channel H x W plane (alpha masks, filtered masks, gradients).
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int h, int w, double fill = 0.0);

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * width + j]; }
  [[nodiscard]] double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * width + j];
  }
};

/// RGB image with every entry in [0,1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int height, int width, double fill = 0.0);
  /// Validates shape (3 channels) and range; throws std::invalid_argument.
  explicit RasterImage(Tensor3 pixels);

  [[nodiscard]] int height() const { return pixels_.height; }
  [[nodiscard]] int width() const { return pixels_.width; }
  [[nodiscard]] const Tensor3& pixels() const { return pixels_; }
  [[nodiscard]] double at(int i, int j, int c) const { return pixels_.at(i, j, c); }
  /// Writes one channel value, clamped to [0,1].
  void set(int i, int j, int c, double v);

 private:
  Tensor3 pixels_;
};

/// Binary segmentation mask (0/1 per pixel).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0);

  [[nodiscard]] std::size_t count() const;
  std::uint8_t& at(int i, int j) { return values[static_cast<std::size_t>(i) * width + j]; }
  [[nodiscard]] std::uint8_t at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * width + j];
  }
};

/// k x H x W stack of alpha masks. Rasterized masks have every entry in
/// [0,1]; the same layout carries gradients with respect to the masks.
struct AlphaMaskStack {
  int k = 0;
  int height = 0;
  int width = 0;
  std::vector<double> alphas;

  AlphaMaskStack() = default;
  AlphaMaskStack(int k, int h, int w, double fill = 0.0);

  [[nodiscard]] std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }
  [[nodiscard]] std::span<const double> plane(int index) const {
    return {alphas.data() + index * plane_size(), plane_size()};
  }
  std::span<double> plane(int index) { return {alphas.data() + index * plane_size(), plane_size()}; }
  [[nodiscard]] Plane plane_copy(int index) const;
  void set_plane(int index, const Plane& p);
};

/// Population variance over all entries; throws on empty input.
double pixel_variance(std::span<const double> values);
double pixel_variance(const AlphaMaskStack& mask);
double pixel_variance(const RasterImage& image);

}  // namespace dreamseg
