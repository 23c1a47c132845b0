#include "dreamseg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace dreamseg {

void BilateralConfig::validate() const {
  if (kernel_size < 1 || kernel_size % 2 == 0) throw std::invalid_argument("kernel_size must be odd and >= 1");
  if (iterations < 0) throw std::invalid_argument("bilateral iterations must be >= 0");
  if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0)) throw std::invalid_argument("bilateral sigmas must be > 0");
}

BilateralOperator::BilateralOperator(const RasterImage& guide, const BilateralConfig& config)
    : height_(guide.height()), width_(guide.width()), iterations_(config.iterations) {
  config.validate();
  const int r = config.kernel_size / 2;
  taps_ = config.kernel_size * config.kernel_size;
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  index_.resize(n * taps_);
  weight_.resize(n * taps_);
  const double inv_s = 1.0 / (2.0 * config.sigma_spatial * config.sigma_spatial);
  const double inv_r = 1.0 / (2.0 * config.sigma_range * config.sigma_range);

  for (int i = 0; i < height_; ++i) {
    for (int j = 0; j < width_; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * width_ + j;
      double total = 0.0;
      int tap = 0;
      for (int di = -r; di <= r; ++di) {
        for (int dj = -r; dj <= r; ++dj, ++tap) {
          const int qi = std::clamp(i + di, 0, height_ - 1);
          const int qj = std::clamp(j + dj, 0, width_ - 1);
          double dist2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double d = guide.at(i, j, c) - guide.at(qi, qj, c);
            dist2 += d * d;
          }
          const double w = std::exp(-(di * di + dj * dj) * inv_s - dist2 * inv_r);
          index_[p * taps_ + tap] = qi * width_ + qj;
          weight_[p * taps_ + tap] = w;
          total += w;
        }
      }
      // the center tap has weight 1, so total >= 1
      for (int t = 0; t < taps_; ++t) weight_[p * taps_ + t] /= total;
    }
  }
}

void BilateralOperator::pass(const std::vector<double>& in, std::vector<double>& out) const {
  const std::size_t n = in.size();
  for (std::size_t p = 0; p < n; ++p) {
    double acc = 0.0;
    for (int t = 0; t < taps_; ++t) acc += weight_[p * taps_ + t] * in[index_[p * taps_ + t]];
    out[p] = acc;
  }
}

void BilateralOperator::pass_adjoint(const std::vector<double>& in, std::vector<double>& out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = in.size();
  for (std::size_t p = 0; p < n; ++p) {
    for (int t = 0; t < taps_; ++t) out[index_[p * taps_ + t]] += weight_[p * taps_ + t] * in[p];
  }
}

Plane BilateralOperator::apply(const Plane& mask) const {
  if (mask.height != height_ || mask.width != width_) {
    throw std::invalid_argument("mask shape does not match the bilateral guide");
  }
  Plane cur = mask;
  std::vector<double> next(cur.values.size());
  for (int it = 0; it < iterations_; ++it) {
    pass(cur.values, next);
    cur.values.swap(next);
  }
  return cur;
}

Plane BilateralOperator::apply_adjoint(const Plane& grad) const {
  if (grad.height != height_ || grad.width != width_) {
    throw std::invalid_argument("gradient shape does not match the bilateral guide");
  }
  Plane cur = grad;
  std::vector<double> next(cur.values.size());
  for (int it = 0; it < iterations_; ++it) {
    pass_adjoint(cur.values, next);
    cur.values.swap(next);
  }
  return cur;
}

Plane cross_bilateral(const Plane& mask, const RasterImage& guide, const BilateralConfig& config) {
  if (mask.height != guide.height() || mask.width != guide.width()) {
    throw std::invalid_argument("mask shape does not match the bilateral guide");
  }
  config.validate();
  if (config.iterations == 0) return mask;
  return BilateralOperator(guide, config).apply(mask);
}

namespace {

double raster_rmse(const AlphaMaskStack& a, const AlphaMaskStack& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.alphas.size(); ++i) {
    const double d = a.alphas[i] - b.alphas[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.alphas.size()));
}

void solve_output_layer(FourierMaskParams& params, const RasterCache& cache,
                        const AlphaMaskStack& target) {
  const Eigen::MatrixXd& hidden = cache.post[kFieldLayers - 2];
  const Eigen::Index n = hidden.rows();
  const Eigen::Index h = hidden.cols();
  Eigen::MatrixXd design(n, h + 1);
  design.leftCols(h) = hidden;
  design.col(h).setOnes();
  Eigen::MatrixXd gram = design.transpose() * design;
  const double ridge = 1e-8 * gram.diagonal().mean() + 1e-12;
  gram.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);

  Eigen::MatrixXd rhs(n, params.k());
  for (int c = 0; c < params.k(); ++c) {
    const auto plane = target.plane(c);
    for (Eigen::Index p = 0; p < n; ++p) rhs(p, c) = logit(std::clamp(plane[p], 1e-4, 1.0 - 1e-4));
  }
  const Eigen::MatrixXd sol = solver.solve(design.transpose() * rhs);  // (h+1) x k

  const int last = kFieldLayers - 1;
  auto data = params.data();
  Eigen::Map<Eigen::MatrixXd> w(data.data() + params.weight_offset(last), params.k(), h);
  Eigen::Map<Eigen::VectorXd> b(data.data() + params.bias_offset(last), params.k());
  w = sol.topRows(h).transpose();
  b = sol.row(h).transpose();
}

}  // namespace

FitReport fit_to_raster(FourierMaskParams& params, const AlphaMaskStack& target, const FitConfig& fit) {
  if (target.k != params.k()) throw std::invalid_argument("fit target has the wrong mask count");
  const int height = target.height;
  const int width = target.width;
  RasterCache cache;
  (void)rasterize(params, height, width, &cache);

  FourierMaskParams candidate = params;
  solve_output_layer(candidate, cache, target);

  FitReport report;
  AlphaMaskStack raster = rasterize(candidate, height, width, &cache);
  double rmse = raster_rmse(raster, target);
  std::vector<double> best(candidate.data().begin(), candidate.data().end());
  double best_rmse = rmse;

  const auto count = static_cast<Eigen::Index>(candidate.parameter_count());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(count);
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  int it = 0;
  while (rmse > fit.tolerance_rmse && it < fit.max_iterations) {
    AlphaMaskStack upstream = raster;
    for (std::size_t i = 0; i < upstream.alphas.size(); ++i) upstream.alphas[i] -= target.alphas[i];
    const Eigen::VectorXd g = raster_vjp(candidate, cache, upstream);
    ++it;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, it);
    const double c2 = 1.0 - std::pow(beta2, it);
    auto data = candidate.data();
    const bool frozen_freq = !candidate.config().train_frequencies;
    for (Eigen::Index i = 0; i < count; ++i) {
      if (frozen_freq && static_cast<std::size_t>(i) < candidate.frequency_count()) continue;
      data[i] -= fit.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
    raster = rasterize(candidate, height, width, &cache);
    rmse = raster_rmse(raster, target);
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best.assign(candidate.data().begin(), candidate.data().end());
    }
  }

  std::copy(best.begin(), best.end(), params.data().begin());
  report.rmse = best_rmse;
  report.iterations = it;
  report.converged = best_rmse <= fit.tolerance_rmse;
  if (!report.converged) {
    std::cerr << "warning: implicit mask fit stopped at RMSE " << best_rmse << " after " << it
              << " iterations (tolerance " << fit.tolerance_rmse << "); keeping best iterate\n";
  }
  return report;
}

MaskParams init_mask_with_bilateral(const MaskParams& params, const RasterImage& image,
                                    const BilateralConfig& config, const FitConfig& fit,
                                    FitReport* report) {
  config.validate();
  if (config.iterations == 0) {
    if (report) *report = FitReport{0.0, 0, true};
    return params;
  }
  const int height = image.height();
  const int width = image.width();
  AlphaMaskStack raster = rasterize(params, height, width);
  const BilateralOperator op(image, config);
  for (int k = 0; k < raster.k; ++k) raster.set_plane(k, op.apply(raster.plane_copy(k)));

  if (std::holds_alternative<PixelMaskParams>(params)) {
    if (report) *report = FitReport{0.0, 0, true};
    return PixelMaskParams::from_alphas(raster);
  }
  FourierMaskParams fitted = std::get<FourierMaskParams>(params);
  const FitReport r = fit_to_raster(fitted, raster, fit);
  if (report) *report = r;
  return fitted;
}

}  // namespace dreamseg
