#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dreamseg/implicit_mask.hpp"
#include "dreamseg/losses.hpp"
#include "dreamseg/refine.hpp"
#include "dreamseg/score_model.hpp"

namespace dreamseg {

enum class Representation { Implicit, Pixel };
enum class BilateralMode { Init, PerStep };

Representation parse_representation(std::string_view name);
std::string to_string(Representation r);
BilateralMode parse_bilateral_mode(std::string_view name);
std::string to_string(BilateralMode m);

struct OptimConfig {
  int iterations = 200;
  double learning_rate = 1e-5;
  int n_b = 1;
  double t_min = 0.02;
  double t_max = 0.98;
  ObjectiveWeights weights;
  TaskMode task_mode = TaskMode::Referring;
  BilateralConfig bilateral;
  BilateralMode bilateral_mode = BilateralMode::Init;
  FitConfig fit;
  std::uint64_t seed = 0;
  LatentGradMode latent_grad_mode = LatentGradMode::ThroughEncoder;
  FieldConfig field;
  Representation representation = Representation::Implicit;
  /// One implicit network with k heads (true) or one network per caption.
  bool shared_network = true;
  /// Draw t and eps per composite instead of once per iteration.
  bool per_composite_noise = false;
  /// Keep a raster snapshot every n iterations (0 = off).
  int snapshot_every = 0;

  void validate() const;
};

/// Settings tuned for the closed-form oracle backend on 64x64 scenes.
///  - lr is the external default times kOracleLrScale.
///  - dream weight 7.5 with n_b = 8 puts the caption-free equilibrium of a
///    clutter pixel well below 0.5 while foreground pixels settle near 0.9.
///  - per-composite t draws average the schedule weight over the batch.
///  - fourier_scale is in cycles per image; 4 at 64 px gives roughly the
///    same kernel width in pixels as a much larger scale at 512 px.
OptimConfig oracle_preset();
inline constexpr double kOracleLrScale = 3.0;
/// Grid experiment on the oracle: no gravity term pulls against the dream
/// loss, so a much larger step is stable.
OptimConfig oracle_grid_preset();
inline constexpr double kOracleGridLrScale = 300.0;
/// Settings for a pre-trained latent model: SGD, lr 1e-5,
/// 200 iterations, unit loss weights.
OptimConfig external_preset();

struct SegmentationTask {
  RasterImage image;
  std::vector<std::string> captions;
  std::vector<BinaryMask> ground_truth;  // optional, one per caption
};

struct IterationRecord {
  int iteration = 0;
  double t = 0.0;
  ObjectiveTerms loss;
  double variance = 0.0;
  double mean_alpha = 0.0;
  double wall_ms = 0.0;
};

struct OptimTrace {
  std::vector<IterationRecord> records;
  std::vector<std::pair<int, AlphaMaskStack>> snapshots;
};

struct SegmentResult {
  AlphaMaskStack masks;
  OptimTrace trace;
  std::vector<MaskParams> params;
};

class OptimizationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SegmentResult segment(const SegmentationTask& task, const ScoreModel& model, const OptimConfig& config);

struct RepresentationAblation {
  SegmentResult implicit_run;
  SegmentResult pixel_run;
};

RepresentationAblation ablate_representation(const SegmentationTask& task, const ScoreModel& model,
                                             OptimConfig config);

struct BilateralAblation {
  SegmentResult with_filter;
  SegmentResult without_filter;
};

BilateralAblation ablate_bilateral(const SegmentationTask& task, const ScoreModel& model,
                                   OptimConfig config);

struct GridExperimentSpec {
  std::vector<std::string> fg_prompts;
  std::vector<std::string> bg_prompts;
  std::string caption_template = "a {fg} by a {bg}";
  int height = 32;
  int width = 32;

  void validate() const;
};

/// Substitutes {fg} and {bg} in the template.
std::string grid_caption(const std::string& caption_template, const std::string& fg, const std::string& bg);

struct GridCell {
  int fg_index = 0;
  int bg_index = 0;
  std::string caption;
  RasterImage composite;
};

struct GridResult {
  std::vector<RasterImage> foregrounds;
  std::vector<RasterImage> backgrounds;
  std::vector<Plane> alphas;
  std::vector<GridCell> cells;  // fg-major
  OptimTrace trace;
};

/// Learns N foregrounds and their alpha masks (one shared network, 4N
/// outputs) and M backgrounds (one network, 3M outputs) so that every
/// composite cell matches its caption under the dream loss.
GridResult run_grid_experiment(const GridExperimentSpec& spec, const ScoreModel& model,
                               const OptimConfig& config);

/// One JSON object per iteration: iteration, t, loss {total, dream,
/// gravity, intersection}, variance, mean_alpha. Wall-clock times are left
/// out so that reruns produce identical files; see timing_jsonl.
std::string trace_jsonl(const OptimTrace& trace);
std::string timing_jsonl(const OptimTrace& trace);

}  // namespace dreamseg
