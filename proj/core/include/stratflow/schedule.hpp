#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace stratflow {

enum class ScheduleKind { harmonic, power, constant, table };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Step sizes alpha_k = c / (k + k0 + 1)^p. A table schedule replays an
/// explicit list and holds its last entry afterwards.
class StepSchedule {
 public:
  static StepSchedule harmonic(double scale = 1.0, std::size_t offset = 0);
  static StepSchedule power(double scale, double exponent, std::size_t offset = 0);
  static StepSchedule constant(double value);
  static StepSchedule table(std::vector<double> values);

  double operator()(std::size_t k) const { return value(k); }
  double value(std::size_t k) const;

  ScheduleKind kind() const { return kind_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }
  std::size_t offset() const { return offset_; }
  const std::vector<double>& values() const { return values_; }

  /// True when alpha_k = Theta(1/(k+1)), the regime of the windowing and
  /// momentum asymptotics.
  bool is_order_one_over_k() const;

 private:
  StepSchedule() = default;

  ScheduleKind kind_ = ScheduleKind::harmonic;
  double scale_ = 1.0;
  double exponent_ = 1.0;
  std::size_t offset_ = 0;
  std::vector<double> values_;
};

/// max over 0 <= i <= k < K of alpha_k / alpha_i.
double ratio_bound(const StepSchedule& s, std::size_t K);
double ratio_bound(const std::vector<double>& alpha);

}  // namespace stratflow
