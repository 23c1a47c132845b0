#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dreamseg/rng.hpp"
#include "dreamseg/schedule.hpp"
#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// Encoder output: (H/f) x (W/f) x C values.
struct Latent {
  Tensor3 values;
  int downsample = 1;
};

/// Token sequence produced by the text encoder for one caption.
struct TextEmbedding {
  std::string caption;
  int tokens = 0;
  int dim = 0;
  std::vector<double> values;  // tokens x dim, row-major
};

class UnknownCaption : public std::runtime_error {
 public:
  explicit UnknownCaption(const std::string& caption)
      : std::runtime_error("no target registered for caption '" + caption + "'") {}
};

class ModelLoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Behavioral contract of a text-conditioned diffusion model.
///
/// Implementations must allow concurrent const calls.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  [[nodiscard]] virtual int downsample() const = 0;
  [[nodiscard]] virtual int latent_channels() const = 0;

  [[nodiscard]] virtual Latent encode_image(const RasterImage& image) const = 0;
  /// Vector-Jacobian product of encode_image at `image`: returns
  /// J^T * cotangent as an H x W x 3 tensor.
  [[nodiscard]] virtual Tensor3 encode_image_vjp(const RasterImage& image,
                                                 const Latent& cotangent) const = 0;
  [[nodiscard]] virtual TextEmbedding encode_text(const std::string& caption) const = 0;
  [[nodiscard]] virtual Latent predict_noise(const Latent& noisy, const TextEmbedding& text,
                                             double t) const = 0;
  [[nodiscard]] virtual const NoiseSchedule& schedule() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// alpha(t) * latent + sigma(t) * noise.
Latent add_noise(const Latent& latent, const Latent& noise, double t, const NoiseSchedule& schedule);

/// Standard normal draw shaped like `shape`.
Latent sample_noise_like(const Latent& shape, Rng& rng);

/// Closed-form score model whose noise prediction points every caption at a
/// fixed target image: identity encoder (f = 1, C = 3) and
/// predict_noise(z_t, c, t) = (z_t - alpha(t) * target(c)) / sigma(t).
class OracleScoreModel final : public ScoreModel {
 public:
  OracleScoreModel(std::map<std::string, RasterImage> targets, NoiseSchedule schedule);

  [[nodiscard]] int downsample() const override { return 1; }
  [[nodiscard]] int latent_channels() const override { return 3; }
  [[nodiscard]] Latent encode_image(const RasterImage& image) const override;
  [[nodiscard]] Tensor3 encode_image_vjp(const RasterImage& image,
                                         const Latent& cotangent) const override;
  [[nodiscard]] TextEmbedding encode_text(const std::string& caption) const override;
  [[nodiscard]] Latent predict_noise(const Latent& noisy, const TextEmbedding& text,
                                     double t) const override;
  [[nodiscard]] const NoiseSchedule& schedule() const override { return schedule_; }
  [[nodiscard]] std::string name() const override { return "oracle"; }

  [[nodiscard]] const RasterImage& target(const std::string& caption) const;
  /// Replaces a caption's target (used to check that gradients only see
  /// the residual value, not the model internals).
  void set_target(const std::string& caption, RasterImage target);

 private:
  std::map<std::string, RasterImage> targets_;
  NoiseSchedule schedule_;
};

std::unique_ptr<OracleScoreModel> oracle_score_model(std::map<std::string, RasterImage> targets,
                                                     NoiseSchedule schedule);

struct ExternalModelOptions {
  double guidance_scale = 7.5;
  int timeout_seconds = 600;
  /// Forwarded to the bridge with /info; where it keeps downloaded weights.
  std::string cache_dir;
};

/// Environment variable read by the CLI for ExternalModelOptions::cache_dir.
inline constexpr const char* kModelCacheEnv = "DREAMSEG_MODEL_CACHE";

/// Adapter for a pre-trained latent diffusion model served by a bridge
/// process over HTTP/JSON (see tools/ldm_bridge.py for the reference bridge
/// and README for the wire format). The locator is the bridge URL,
/// e.g. "http://127.0.0.1:7860".
class ExternalLdmAdapter final : public ScoreModel {
 public:
  ExternalLdmAdapter(std::string model_locator, std::string device,
                     ExternalModelOptions options = {});
  ~ExternalLdmAdapter() override;

  [[nodiscard]] int downsample() const override { return downsample_; }
  [[nodiscard]] int latent_channels() const override { return channels_; }
  [[nodiscard]] Latent encode_image(const RasterImage& image) const override;
  [[nodiscard]] Tensor3 encode_image_vjp(const RasterImage& image,
                                         const Latent& cotangent) const override;
  [[nodiscard]] TextEmbedding encode_text(const std::string& caption) const override;
  [[nodiscard]] Latent predict_noise(const Latent& noisy, const TextEmbedding& text,
                                     double t) const override;
  [[nodiscard]] const NoiseSchedule& schedule() const override { return schedule_; }
  [[nodiscard]] std::string name() const override { return "external:" + checkpoint_; }

  [[nodiscard]] std::size_t text_cache_size() const;

 private:
  struct Connection;
  std::string post(const std::string& path, const std::string& body) const;
  void check_geometry(const RasterImage& image) const;

  std::string locator_;
  std::string device_;
  ExternalModelOptions options_;
  std::unique_ptr<Connection> connection_;
  std::string checkpoint_;
  int downsample_ = 8;
  int channels_ = 4;
  NoiseSchedule schedule_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, TextEmbedding> text_cache_;
};

std::unique_ptr<ExternalLdmAdapter> external_ldm_adapter(const std::string& model_locator,
                                                         const std::string& device,
                                                         ExternalModelOptions options = {});

}  // namespace dreamseg
