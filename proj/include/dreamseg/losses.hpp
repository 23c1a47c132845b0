#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

#include "dreamseg/compositing.hpp"
#include "dreamseg/implicit_mask.hpp"
#include "dreamseg/score_model.hpp"

namespace dreamseg {

/// How the noise residual reaches pixel space.
///  ThroughEncoder: weight * alpha * J_E(x)^T (eps_hat - eps).
///  NearestPixel:   weight * (eps_hat - eps) upsampled to pixels, ignoring
///                  the encoder (latent channels averaged when C != 3).
enum class LatentGradMode { ThroughEncoder, NearestPixel };

LatentGradMode parse_latent_grad_mode(std::string_view name);
std::string to_string(LatentGradMode mode);

struct DreamGradSample {
  double t = 0.0;
  double weight = 0.0;
  Latent eps;
  Latent residual;    // eps_hat - eps
  Tensor3 pixel_grad; // H x W x 3
  double loss = 0.0;  // weight * ||eps_hat - eps||^2
};

DreamGradSample dream_pixel_grad(const RasterImage& composite, const std::string& caption,
                                 const ScoreModel& model, double t, const Latent& eps,
                                 LatentGradMode mode = LatentGradMode::ThroughEncoder);
/// Same, with the caption already encoded.
DreamGradSample dream_pixel_grad(const RasterImage& composite, const TextEmbedding& text,
                                 const ScoreModel& model, double t, const Latent& eps,
                                 LatentGradMode mode = LatentGradMode::ThroughEncoder);

/// Chains a dream sample through the blend and the rasterizer for mask
/// `mask_index`. `cache` must come from rasterizing `params` at image size.
Eigen::VectorXd dream_param_grad(const DreamGradSample& sample, const RasterImage& image,
                                 const UniformBackground& background, const MaskParams& params,
                                 int mask_index, const RasterCache& cache);
Eigen::VectorXd dream_param_grad(const DreamGradSample& sample, const RasterImage& image,
                                 const UniformBackground& background, const MaskParams& params,
                                 int mask_index);

double gravity_loss(const AlphaMaskStack& masks);
/// Pairwise overlap: sum over pixels of sum_{k < k'} y_k * y_k'.
double intersection_loss(const AlphaMaskStack& masks);
AlphaMaskStack gravity_grad(const AlphaMaskStack& masks);
AlphaMaskStack intersection_grad(const AlphaMaskStack& masks);

enum class TaskMode { Referring, Semantic };

TaskMode parse_task_mode(std::string_view name);
std::string to_string(TaskMode mode);

struct ObjectiveWeights {
  double dream = 1.0;
  double gravity = 1.0;
  double intersection = 1.0;
  bool intersection_enabled = true;
  /// Divide the gravity term by H * W.
  bool normalize_gravity = false;
};

/// Referring segmentation drops the intersection term.
ObjectiveWeights effective_weights(ObjectiveWeights weights, TaskMode mode);

struct ObjectiveTerms {
  double dream = 0.0;
  double gravity = 0.0;
  double intersection = 0.0;
  double total = 0.0;
};

/// L_f = w_d * dream + w_g * gravity (/HW if normalized) + w_i * intersection.
ObjectiveTerms total_objective(double dream, double gravity, double intersection,
                               const ObjectiveWeights& weights, int height = 1, int width = 1);

/// d L_f / d alpha given the accumulated dream mask gradient.
AlphaMaskStack assemble_mask_gradient(const AlphaMaskStack& dream_grad, const AlphaMaskStack& masks,
                                      const ObjectiveWeights& weights);

}  // namespace dreamseg
