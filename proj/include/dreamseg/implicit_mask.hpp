#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// Architecture of the coordinate network that renders the masks.
struct FieldConfig {
  int n_freq = 256;
  double fourier_scale = 10.0;
  std::array<int, 3> hidden = {256, 256, 256};
  /// Frequencies are part of the parameter vector either way; when false
  /// their gradient is reported as zero and SGD leaves them fixed.
  bool train_frequencies = false;
};

inline constexpr int kFieldLayers = 4;

/// Parameters of the Fourier-feature MLP psi: (u,v) -> k logits -> sigmoid.
///
/// All parameters live in one contiguous vector:
///   frequencies (n_freq x 2, column-major), then for each of the 4 layers
///   its weight (out x in, column-major) followed by its bias (out).
class FourierMaskParams {
 public:
  FourierMaskParams() = default;

  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] int n_freq() const { return config_.n_freq; }
  [[nodiscard]] const FieldConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  /// Input/output width of every layer: {2*n_freq, h1, h2, h3, k}.
  [[nodiscard]] std::array<int, kFieldLayers + 1> widths() const;

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }
  [[nodiscard]] std::size_t parameter_count() const { return data_.size(); }

  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> frequencies() const;
  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  [[nodiscard]] std::size_t weight_offset(int layer) const { return weight_offsets_[layer]; }
  [[nodiscard]] std::size_t bias_offset(int layer) const { return bias_offsets_[layer]; }
  [[nodiscard]] std::size_t frequency_count() const {
    return static_cast<std::size_t>(config_.n_freq) * 2;
  }

  /// Rebuilds a parameter set from a flat vector (checkpoint loading).
  static FourierMaskParams from_data(int k, const FieldConfig& config, std::uint64_t seed,
                                     std::vector<double> data);

  friend FourierMaskParams init_fourier_params(int k, int height, int width,
                                               const FieldConfig& config, std::uint64_t seed);

 private:
  void build_layout();

  int k_ = 0;
  FieldConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;
  std::array<std::size_t, kFieldLayers> weight_offsets_{};
  std::array<std::size_t, kFieldLayers> bias_offsets_{};
};

/// Direct per-pixel parameterization: k x H x W logits.
class PixelMaskParams {
 public:
  PixelMaskParams() = default;
  PixelMaskParams(int k, int height, int width, double logit = 0.0);
  /// Logits taken from an existing raster (alpha clamped away from {0,1}).
  static PixelMaskParams from_alphas(const AlphaMaskStack& alphas);

  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] std::span<double> data() { return logits_; }
  [[nodiscard]] std::span<const double> data() const { return logits_; }
  [[nodiscard]] std::size_t parameter_count() const { return logits_.size(); }

 private:
  int k_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> logits_;
};

using MaskParams = std::variant<FourierMaskParams, PixelMaskParams>;

/// Seeded initialization. Frequencies ~ N(0, fourier_scale^2); weights
/// N(0, 2/fan_in) for hidden layers and N(0, 1/fan_in) for the output
/// layer; biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
FourierMaskParams init_fourier_params(int k, int height, int width, const FieldConfig& config,
                                      std::uint64_t seed);

/// Intermediate values kept by a forward pass for the backward pass.
struct RasterCache {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd coords;    // N x 2, (u, v) per pixel
  Eigen::MatrixXd phase;     // N x n_freq, 2*pi*(B p)
  Eigen::MatrixXd features;  // N x 2*n_freq
  Eigen::MatrixXd feature_freqs;  // frequencies the features were built from
  std::array<Eigen::MatrixXd, kFieldLayers> pre;   // pre-activations
  std::array<Eigen::MatrixXd, kFieldLayers> post;  // activations (post[3] = sigmoid output)
  std::array<Eigen::MatrixXd, kFieldLayers> slope;  // activation derivative at pre (hidden layers)
};

/// Pixel-center coordinates ((i+0.5)/H, (j+0.5)/W), row-major pixel order.
Eigen::MatrixXd pixel_centers(int height, int width);

AlphaMaskStack rasterize(const FourierMaskParams& params, int height, int width,
                         RasterCache* cache = nullptr);
AlphaMaskStack rasterize(const PixelMaskParams& params, int height, int width,
                         RasterCache* cache = nullptr);
AlphaMaskStack rasterize(const MaskParams& params, int height, int width,
                         RasterCache* cache = nullptr);

/// Vector-Jacobian product of the rasterizer: given dL/d(alpha) for every
/// entry of the raster produced with `cache`, returns dL/d(params) in the
/// flat data() layout.
Eigen::VectorXd raster_vjp(const FourierMaskParams& params, const RasterCache& cache,
                           const AlphaMaskStack& upstream);
Eigen::VectorXd raster_vjp(const PixelMaskParams& params, const RasterCache& cache,
                           const AlphaMaskStack& upstream);
Eigen::VectorXd raster_vjp(const MaskParams& params, const RasterCache& cache,
                           const AlphaMaskStack& upstream);

std::span<double> param_data(MaskParams& params);
std::span<const double> param_data(const MaskParams& params);
int mask_count(const MaskParams& params);

double sigmoid(double x);
double logit(double p);

}  // namespace dreamseg
