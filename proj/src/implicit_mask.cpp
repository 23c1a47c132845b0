#include "dreamseg/implicit_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dreamseg/rng.hpp"

namespace dreamseg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;


void check_config(int k, const FieldConfig& config) {
  if (k < 1) throw std::invalid_argument("mask count k must be >= 1");
  if (config.n_freq < 0) throw std::invalid_argument("n_freq must be >= 0");
  if (!(config.fourier_scale > 0.0)) throw std::invalid_argument("fourier_scale must be > 0");
  for (int h : config.hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
}

AlphaMaskStack to_stack(const Eigen::MatrixXd& y, int k, int height, int width) {
  AlphaMaskStack out(k, height, width);
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  for (int c = 0; c < k; ++c) {
    auto plane = out.plane(c);
    for (Eigen::Index p = 0; p < n; ++p) plane[p] = y(p, c);
  }
  return out;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  const double q = std::clamp(p, 1e-6, 1.0 - 1e-6);
  return std::log(q / (1.0 - q));
}

std::array<int, kFieldLayers + 1> FourierMaskParams::widths() const {
  return {2 * config_.n_freq, config_.hidden[0], config_.hidden[1], config_.hidden[2], k_};
}

void FourierMaskParams::build_layout() {
  const auto w = widths();
  std::size_t offset = frequency_count();
  for (int l = 0; l < kFieldLayers; ++l) {
    weight_offsets_[l] = offset;
    offset += static_cast<std::size_t>(w[l + 1]) * w[l];
    bias_offsets_[l] = offset;
    offset += static_cast<std::size_t>(w[l + 1]);
  }
  data_.resize(offset, 0.0);
}

Eigen::Map<const Eigen::MatrixXd> FourierMaskParams::frequencies() const {
  return {data_.data(), config_.n_freq, 2};
}

Eigen::Map<const Eigen::MatrixXd> FourierMaskParams::weight(int layer) const {
  const auto w = widths();
  return {data_.data() + weight_offsets_[layer], w[layer + 1], w[layer]};
}

Eigen::Map<const Eigen::VectorXd> FourierMaskParams::bias(int layer) const {
  return {data_.data() + bias_offsets_[layer], widths()[layer + 1]};
}

FourierMaskParams FourierMaskParams::from_data(int k, const FieldConfig& config,
                                               std::uint64_t seed, std::vector<double> data) {
  check_config(k, config);
  FourierMaskParams p;
  p.k_ = k;
  p.config_ = config;
  p.seed_ = seed;
  p.build_layout();
  if (data.size() != p.data_.size()) {
    throw std::invalid_argument("parameter blob has " + std::to_string(data.size()) +
                                " entries, layout expects " + std::to_string(p.data_.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw std::invalid_argument("parameter blob contains non-finite values");
  }
  p.data_ = std::move(data);
  return p;
}

FourierMaskParams init_fourier_params(int k, int height, int width, const FieldConfig& config,
                                      std::uint64_t seed) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("raster dimensions must be positive");
  check_config(k, config);
  FourierMaskParams p;
  p.k_ = k;
  p.config_ = config;
  p.seed_ = seed;
  p.build_layout();

  Rng rng(seed);
  for (std::size_t i = 0; i < p.frequency_count(); ++i) {
    p.data_[i] = standard_normal(rng) * config.fourier_scale;
  }
  const auto w = p.widths();
  for (int l = 0; l < kFieldLayers; ++l) {
    // He-normal for the SiLU layers, LeCun-normal for the output layer.
    const double gain = l + 1 < kFieldLayers ? 2.0 : 1.0;
    const double std_dev = w[l] > 0 ? std::sqrt(gain / w[l]) : 0.0;
    const std::size_t n_weights = static_cast<std::size_t>(w[l + 1]) * w[l];
    for (std::size_t i = 0; i < n_weights; ++i) {
      p.data_[p.weight_offsets_[l] + i] = standard_normal(rng) * std_dev;
    }
    const double bound = w[l] > 0 ? 1.0 / std::sqrt(static_cast<double>(w[l])) : 1.0;
    for (int i = 0; i < w[l + 1]; ++i) p.data_[p.bias_offsets_[l] + i] = uniform(rng, -bound, bound);
  }
  return p;
}

PixelMaskParams::PixelMaskParams(int k, int height, int width, double logit_value)
    : k_(k), height_(height), width_(width) {
  if (k < 1 || height <= 0 || width <= 0) {
    throw std::invalid_argument("pixel mask dimensions must be positive");
  }
  if (!std::isfinite(logit_value)) throw std::invalid_argument("logits must be finite");
  logits_.assign(static_cast<std::size_t>(k) * height * width, logit_value);
}

PixelMaskParams PixelMaskParams::from_alphas(const AlphaMaskStack& alphas) {
  PixelMaskParams p(alphas.k, alphas.height, alphas.width);
  std::transform(alphas.alphas.begin(), alphas.alphas.end(), p.logits_.begin(),
                 [](double a) { return logit(a); });
  return p;
}

Eigen::MatrixXd pixel_centers(int height, int width) {
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(height) * width, 2);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const Eigen::Index n = static_cast<Eigen::Index>(i) * width + j;
      coords(n, 0) = (i + 0.5) / height;
      coords(n, 1) = (j + 0.5) / width;
    }
  }
  return coords;
}

AlphaMaskStack rasterize(const FourierMaskParams& params, int height, int width,
                         RasterCache* cache) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("raster dimensions must be positive");
  RasterCache local;
  RasterCache& c = cache ? *cache : local;
  const int n_freq = params.n_freq();
  const bool reuse = c.height == height && c.width == width && c.feature_freqs.rows() == n_freq &&
                     c.feature_freqs == params.frequencies();
  if (!reuse) {
    c.height = height;
    c.width = width;
    c.coords = pixel_centers(height, width);
    const Eigen::Index n = c.coords.rows();
    c.phase = kTwoPi * (c.coords * params.frequencies().transpose());
    c.features.resize(n, 2 * n_freq);
    c.features.leftCols(n_freq) = c.phase.array().sin().matrix();
    c.features.rightCols(n_freq) = c.phase.array().cos().matrix();
    c.feature_freqs = params.frequencies();
  }

  for (int l = 0; l < kFieldLayers; ++l) {
    const Eigen::MatrixXd& input = l == 0 ? c.features : c.post[l - 1];
    c.pre[l].noalias() = input * params.weight(l).transpose();
    c.pre[l].rowwise() += params.bias(l).transpose();
    if (l + 1 < kFieldLayers) {
      // SiLU: x * s(x), slope s(x) * (1 + x * (1 - s(x)))
      const auto x = c.pre[l].array();
      const Eigen::ArrayXXd s = (1.0 + (-x).exp()).inverse();
      c.post[l] = (x * s).matrix();
      c.slope[l] = (s * (1.0 + x * (1.0 - s))).matrix();
    } else {
      c.post[l] = c.pre[l].unaryExpr(&sigmoid);
    }
  }
  return to_stack(c.post[kFieldLayers - 1], params.k(), height, width);
}

AlphaMaskStack rasterize(const PixelMaskParams& params, int height, int width, RasterCache*) {
  if (height != params.height() || width != params.width()) {
    throw std::invalid_argument("pixel parameterization is " + std::to_string(params.height()) +
                                "x" + std::to_string(params.width()) + ", requested " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  AlphaMaskStack out(params.k(), height, width);
  std::transform(params.data().begin(), params.data().end(), out.alphas.begin(), &sigmoid);
  return out;
}

AlphaMaskStack rasterize(const MaskParams& params, int height, int width, RasterCache* cache) {
  return std::visit([&](const auto& p) { return rasterize(p, height, width, cache); }, params);
}

Eigen::VectorXd raster_vjp(const FourierMaskParams& params, const RasterCache& cache,
                           const AlphaMaskStack& upstream) {
  const int k = params.k();
  const Eigen::Index n = static_cast<Eigen::Index>(cache.height) * cache.width;
  if (upstream.k != k || upstream.height != cache.height || upstream.width != cache.width) {
    throw std::invalid_argument("upstream gradient shape does not match the cached raster");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));

  const Eigen::MatrixXd& y = cache.post[kFieldLayers - 1];
  Eigen::MatrixXd delta(n, k);
  for (int c = 0; c < k; ++c) {
    auto plane = upstream.plane(c);
    for (Eigen::Index p = 0; p < n; ++p) delta(p, c) = plane[p] * y(p, c) * (1.0 - y(p, c));
  }

  const auto widths = params.widths();
  for (int l = kFieldLayers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = l == 0 ? cache.features : cache.post[l - 1];
    Eigen::Map<Eigen::MatrixXd> g_w(grad.data() + params.weight_offset(l), widths[l + 1], widths[l]);
    g_w.noalias() = delta.transpose() * input;
    Eigen::Map<Eigen::VectorXd> g_b(grad.data() + params.bias_offset(l), widths[l + 1]);
    g_b = delta.colwise().sum().transpose();

    if (l > 0) {
      Eigen::MatrixXd d_in = delta * params.weight(l);
      delta = d_in.cwiseProduct(cache.slope[l - 1]);
    } else if (params.config().train_frequencies && params.n_freq() > 0) {
      const int nf = params.n_freq();
      Eigen::MatrixXd d_feat = delta * params.weight(0);
      Eigen::MatrixXd d_phase =
          d_feat.leftCols(nf).cwiseProduct(cache.phase.array().cos().matrix()) -
          d_feat.rightCols(nf).cwiseProduct(cache.phase.array().sin().matrix());
      Eigen::Map<Eigen::MatrixXd> g_freq(grad.data(), nf, 2);
      g_freq.noalias() = kTwoPi * (d_phase.transpose() * cache.coords);
    }
  }
  return grad;
}

Eigen::VectorXd raster_vjp(const PixelMaskParams& params, const RasterCache&,
                           const AlphaMaskStack& upstream) {
  if (upstream.k != params.k() || upstream.height != params.height() ||
      upstream.width != params.width()) {
    throw std::invalid_argument("upstream gradient shape does not match the pixel grid");
  }
  const auto logits = params.data();
  Eigen::VectorXd grad(static_cast<Eigen::Index>(logits.size()));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double y = sigmoid(logits[i]);
    grad[static_cast<Eigen::Index>(i)] = upstream.alphas[i] * y * (1.0 - y);
  }
  return grad;
}

Eigen::VectorXd raster_vjp(const MaskParams& params, const RasterCache& cache,
                           const AlphaMaskStack& upstream) {
  return std::visit([&](const auto& p) { return raster_vjp(p, cache, upstream); }, params);
}

std::span<double> param_data(MaskParams& params) {
  return std::visit([](auto& p) { return p.data(); }, params);
}

std::span<const double> param_data(const MaskParams& params) {
  return std::visit([](const auto& p) { return std::span<const double>(p.data()); }, params);
}

int mask_count(const MaskParams& params) {
  return std::visit([](const auto& p) { return p.k(); }, params);
}

}  // namespace dreamseg
