#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dreamseg/optimizer.hpp"
#include "dreamseg/schedule.hpp"
#include "dreamseg/score_model.hpp"

namespace dreamseg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run depends on. Serialized as one flat JSON object with
/// dotted keys ("loss.gravity", "bilateral.iterations", ...).
struct RunConfig {
  std::string backend = "oracle";  // oracle | external
  std::string model;               // bridge URL for the external backend
  std::string device = "cpu";
  double guidance_scale = 7.5;
  ScheduleKind schedule = ScheduleKind::CosineVp;  // oracle backend only
  WeightKind weighting = WeightKind::SigmaSquared;
  double threshold = 0.5;
  int workers = 1;
  OptimConfig optim;
  /// Command inputs (image, prompts, manifest, ...) stored as "input.<name>"
  /// so that the emitted file alone reruns the command.
  std::map<std::string, nlohmann::json> inputs;
};

enum class RunKind { Segment, Grid };

/// Backend preset: oracle_preset()/oracle_grid_preset() or external_preset().
RunConfig default_run_config(const std::string& backend, RunKind kind = RunKind::Segment);

nlohmann::json to_json(const RunConfig& config);
/// Overwrites the fields named in `flat`; unknown keys are an error.
void apply_json(RunConfig& config, const nlohmann::json& flat);

NoiseSchedule make_schedule(ScheduleKind kind, WeightKind weighting);

/// Oracle backend: closed-form model over `oracle_targets` (caption ->
/// target image). External backend: bridge adapter at config.model.
std::unique_ptr<ScoreModel> make_score_model(const RunConfig& config,
                                             std::map<std::string, RasterImage> oracle_targets = {});

nlohmann::json read_config_file(const std::filesystem::path& path);
void write_config_file(const std::filesystem::path& path, const RunConfig& config);

}  // namespace dreamseg
