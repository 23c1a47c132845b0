#pragma once

#include <vector>

#include "dreamseg/implicit_mask.hpp"
#include "dreamseg/tensor.hpp"

namespace dreamseg {

struct BilateralConfig {
  int kernel_size = 3;
  int iterations = 40;
  double sigma_spatial = 1.0;
  double sigma_range = 0.1;

  void validate() const;
};

/// The cross-bilateral pass as a fixed linear operator: weights depend only
/// on the guide, so one pass is out(p) = sum_q W(p,q) in(q) with rows of W
/// summing to 1. Neighborhoods clamp to the image edge.
class BilateralOperator {
 public:
  BilateralOperator(const RasterImage& guide, const BilateralConfig& config);

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }

  /// `config.iterations` sequential passes.
  [[nodiscard]] Plane apply(const Plane& mask) const;
  /// Transpose of apply(); pulls a gradient on the filtered plane back onto
  /// the unfiltered one.
  [[nodiscard]] Plane apply_adjoint(const Plane& grad) const;

 private:
  void pass(const std::vector<double>& in, std::vector<double>& out) const;
  void pass_adjoint(const std::vector<double>& in, std::vector<double>& out) const;

  int height_ = 0;
  int width_ = 0;
  int taps_ = 0;
  int iterations_ = 0;
  std::vector<int> index_;      // N x taps neighbor indices
  std::vector<double> weight_;  // N x taps normalized weights
};

Plane cross_bilateral(const Plane& mask, const RasterImage& guide, const BilateralConfig& config);

/// Budget for refitting an implicit mask to a filtered raster.
struct FitConfig {
  int max_iterations = 200;
  double tolerance_rmse = 0.05;
  double learning_rate = 1e-3;
};

struct FitReport {
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares fit of the parameters to a target raster. The output
/// layer is solved in closed form (logit space); the whole network is then
/// refined with Adam on the alpha-space squared error while the RMSE is
/// above tolerance. Keeps the best iterate.
FitReport fit_to_raster(FourierMaskParams& params, const AlphaMaskStack& target,
                        const FitConfig& fit = {});

/// Rasterize, filter each plane against the image, and refit the
/// representation to the filtered raster.
MaskParams init_mask_with_bilateral(const MaskParams& params, const RasterImage& image,
                                    const BilateralConfig& config, const FitConfig& fit = {},
                                    FitReport* report = nullptr);

}  // namespace dreamseg
