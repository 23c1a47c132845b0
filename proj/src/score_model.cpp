#include "dreamseg/score_model.hpp"

#include <cmath>

namespace dreamseg {

Latent add_noise(const Latent& latent, const Latent& noise, double t, const NoiseSchedule& schedule) {
  if (!latent.values.same_shape(noise.values)) {
    throw std::invalid_argument("add_noise: latent and noise shapes differ");
  }
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("add_noise: t must be in [0,1]");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  Latent out = latent;
  for (std::size_t i = 0; i < out.values.values.size(); ++i) {
    out.values.values[i] = a * latent.values.values[i] + s * noise.values.values[i];
  }
  return out;
}

Latent sample_noise_like(const Latent& shape, Rng& rng) {
  Latent out = shape;
  for (double& v : out.values.values) v = standard_normal(rng);
  return out;
}

OracleScoreModel::OracleScoreModel(std::map<std::string, RasterImage> targets, NoiseSchedule schedule)
    : targets_(std::move(targets)), schedule_(std::move(schedule)) {
  if (targets_.empty()) throw std::invalid_argument("oracle score model needs at least one target");
  const auto& first = targets_.begin()->second;
  for (const auto& [caption, image] : targets_) {
    if (image.height() != first.height() || image.width() != first.width()) {
      throw std::invalid_argument("oracle targets must share one shape");
    }
  }
}

Latent OracleScoreModel::encode_image(const RasterImage& image) const {
  return Latent{image.pixels(), 1};
}

Tensor3 OracleScoreModel::encode_image_vjp(const RasterImage& image, const Latent& cotangent) const {
  if (!cotangent.values.same_shape(image.pixels())) {
    throw std::invalid_argument("oracle encoder vjp: cotangent shape does not match image");
  }
  return cotangent.values;
}

TextEmbedding OracleScoreModel::encode_text(const std::string& caption) const {
  const auto it = targets_.find(caption);
  if (it == targets_.end()) throw UnknownCaption(caption);
  const auto index = static_cast<double>(std::distance(targets_.begin(), it));
  return TextEmbedding{caption, 1, 1, {index}};
}

Latent OracleScoreModel::predict_noise(const Latent& noisy, const TextEmbedding& text, double t) const {
  const RasterImage& tgt = target(text.caption);
  if (!noisy.values.same_shape(tgt.pixels())) {
    throw std::invalid_argument("oracle predict_noise: latent shape does not match target");
  }
  const double a = schedule_.alpha(t);
  const double s = schedule_.sigma(t);
  if (!(s > 0.0)) throw std::domain_error("oracle predict_noise: sigma(t) is zero");
  Latent out = noisy;
  const auto& x = tgt.pixels().values;
  for (std::size_t i = 0; i < out.values.values.size(); ++i) {
    out.values.values[i] = (noisy.values.values[i] - a * x[i]) / s;
  }
  return out;
}

const RasterImage& OracleScoreModel::target(const std::string& caption) const {
  const auto it = targets_.find(caption);
  if (it == targets_.end()) throw UnknownCaption(caption);
  return it->second;
}

void OracleScoreModel::set_target(const std::string& caption, RasterImage target) {
  const auto& first = targets_.begin()->second;
  if (target.height() != first.height() || target.width() != first.width()) {
    throw std::invalid_argument("oracle targets must share one shape");
  }
  targets_[caption] = std::move(target);
}

std::unique_ptr<OracleScoreModel> oracle_score_model(std::map<std::string, RasterImage> targets,
                                                     NoiseSchedule schedule) {
  return std::make_unique<OracleScoreModel>(std::move(targets), std::move(schedule));
}

}  // namespace dreamseg
