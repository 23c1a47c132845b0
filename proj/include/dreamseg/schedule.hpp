#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dreamseg {

enum class ScheduleKind { CosineVp, LinearVp, ExternalNative };

/// Per-timestep weight w_t.
enum class WeightKind { SigmaSquared, Unit };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string to_string(ScheduleKind kind);
WeightKind parse_weight_kind(std::string_view name);
std::string to_string(WeightKind kind);

/// Variance-preserving forward-process schedule over t in [0,1]:
/// alpha(t)^2 + sigma(t)^2 = 1, alpha decreasing, sigma increasing.
class NoiseSchedule {
 public:
  static NoiseSchedule cosine(WeightKind weight = WeightKind::SigmaSquared);
  static NoiseSchedule linear(double beta_min = 0.1, double beta_max = 20.0,
                              WeightKind weight = WeightKind::SigmaSquared);
  /// Discrete cumulative-alpha table (index 0 = least noisy) interpolated
  /// log-linearly onto t in [0,1].
  static NoiseSchedule discrete(std::vector<double> alphas_cumprod,
                                WeightKind weight = WeightKind::SigmaSquared);
  /// The scaled-linear 1000-step table used by the common latent diffusion
  /// checkpoints (beta from 0.00085 to 0.012, linear in sqrt(beta)).
  static std::vector<double> scaled_linear_table(int steps = 1000, double beta_start = 0.00085,
                                                 double beta_end = 0.012);

  [[nodiscard]] double alpha(double t) const;
  [[nodiscard]] double sigma(double t) const;
  [[nodiscard]] double weight(double t) const;

  [[nodiscard]] ScheduleKind kind() const { return kind_; }
  [[nodiscard]] WeightKind weight_kind() const { return weight_kind_; }
  void set_weight_kind(WeightKind w) { weight_kind_ = w; }
  [[nodiscard]] const std::vector<double>& table() const { return table_; }

 private:
  [[nodiscard]] double alpha_squared(double t) const;

  ScheduleKind kind_ = ScheduleKind::CosineVp;
  WeightKind weight_kind_ = WeightKind::SigmaSquared;
  double beta_min_ = 0.1;
  double beta_max_ = 20.0;
  std::vector<double> table_;
};

NoiseSchedule default_schedule(ScheduleKind kind);

}  // namespace dreamseg
