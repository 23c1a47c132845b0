#include "dreamseg/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dreamseg {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine-vp") return ScheduleKind::CosineVp;
  if (name == "linear-vp") return ScheduleKind::LinearVp;
  if (name == "external-model-native") return ScheduleKind::ExternalNative;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::CosineVp: return "cosine-vp";
    case ScheduleKind::LinearVp: return "linear-vp";
    case ScheduleKind::ExternalNative: return "external-model-native";
  }
  return "unknown";
}

WeightKind parse_weight_kind(std::string_view name) {
  if (name == "sigma-squared") return WeightKind::SigmaSquared;
  if (name == "unit") return WeightKind::Unit;
  throw std::invalid_argument("unknown weight kind '" + std::string(name) + "'");
}

std::string to_string(WeightKind kind) {
  return kind == WeightKind::SigmaSquared ? "sigma-squared" : "unit";
}

NoiseSchedule NoiseSchedule::cosine(WeightKind weight) {
  NoiseSchedule s;
  s.kind_ = ScheduleKind::CosineVp;
  s.weight_kind_ = weight;
  return s;
}

NoiseSchedule NoiseSchedule::linear(double beta_min, double beta_max, WeightKind weight) {
  if (!(beta_min > 0.0) || !(beta_max > beta_min)) {
    throw std::invalid_argument("linear schedule needs 0 < beta_min < beta_max");
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::LinearVp;
  s.weight_kind_ = weight;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  return s;
}

NoiseSchedule NoiseSchedule::discrete(std::vector<double> alphas_cumprod, WeightKind weight) {
  if (alphas_cumprod.size() < 2) throw std::invalid_argument("discrete schedule needs >= 2 steps");
  for (std::size_t i = 0; i < alphas_cumprod.size(); ++i) {
    const double a = alphas_cumprod[i];
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alphas_cumprod entries must be in (0,1]");
    if (i > 0 && !(a < alphas_cumprod[i - 1])) {
      throw std::invalid_argument("alphas_cumprod must be strictly decreasing");
    }
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::ExternalNative;
  s.weight_kind_ = weight;
  s.table_ = std::move(alphas_cumprod);
  return s;
}

std::vector<double> NoiseSchedule::scaled_linear_table(int steps, double beta_start,
                                                       double beta_end) {
  if (steps < 2) throw std::invalid_argument("need at least 2 steps");
  std::vector<double> table(static_cast<std::size_t>(steps));
  const double lo = std::sqrt(beta_start);
  const double hi = std::sqrt(beta_end);
  double acc = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double root = lo + (hi - lo) * i / (steps - 1);
    acc *= 1.0 - root * root;
    table[static_cast<std::size_t>(i)] = acc;
  }
  return table;
}

double NoiseSchedule::alpha_squared(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  switch (kind_) {
    case ScheduleKind::CosineVp: {
      const double c = std::cos(0.5 * std::numbers::pi * t);
      return c * c;
    }
    case ScheduleKind::LinearVp: {
      const double log_alpha = -0.25 * t * t * (beta_max_ - beta_min_) - 0.5 * t * beta_min_;
      return std::exp(2.0 * log_alpha);
    }
    case ScheduleKind::ExternalNative: {
      const double pos = t * static_cast<double>(table_.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, table_.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return std::exp((1.0 - frac) * std::log(table_[lo]) + frac * std::log(table_[hi]));
    }
  }
  return 1.0;
}

double NoiseSchedule::alpha(double t) const {
  if (kind_ == ScheduleKind::CosineVp) return std::cos(0.5 * std::numbers::pi * std::clamp(t, 0.0, 1.0));
  return std::sqrt(alpha_squared(t));
}

double NoiseSchedule::sigma(double t) const {
  if (kind_ == ScheduleKind::CosineVp) return std::sin(0.5 * std::numbers::pi * std::clamp(t, 0.0, 1.0));
  return std::sqrt(std::max(0.0, 1.0 - alpha_squared(t)));
}

double NoiseSchedule::weight(double t) const {
  if (weight_kind_ == WeightKind::Unit) return 1.0;
  const double s = sigma(t);
  return s * s;
}

NoiseSchedule default_schedule(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::CosineVp: return NoiseSchedule::cosine();
    case ScheduleKind::LinearVp: return NoiseSchedule::linear();
    case ScheduleKind::ExternalNative: return NoiseSchedule::discrete(NoiseSchedule::scaled_linear_table());
  }
  throw std::invalid_argument("unknown schedule kind");
}

}  // namespace dreamseg
