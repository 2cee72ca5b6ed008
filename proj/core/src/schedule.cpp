#include "stratflow/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stratflow {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::harmonic: return "harmonic";
    case ScheduleKind::power: return "power";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::table: return "table";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "harmonic") return ScheduleKind::harmonic;
  if (name == "power") return ScheduleKind::power;
  if (name == "constant") return ScheduleKind::constant;
  if (name == "table") return ScheduleKind::table;
  throw std::invalid_argument("unknown schedule kind '" + name + "'");
}

StepSchedule StepSchedule::harmonic(double scale, std::size_t offset) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("schedule scale must be > 0");
  StepSchedule s;
  s.kind_ = ScheduleKind::harmonic;
  s.scale_ = scale;
  s.exponent_ = 1.0;
  s.offset_ = offset;
  return s;
}

StepSchedule StepSchedule::power(double scale, double exponent, std::size_t offset) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("schedule scale must be > 0");
  if (!(exponent >= 0.0) || !std::isfinite(exponent)) throw std::invalid_argument("schedule exponent must be >= 0");
  StepSchedule s;
  s.kind_ = ScheduleKind::power;
  s.scale_ = scale;
  s.exponent_ = exponent;
  s.offset_ = offset;
  return s;
}

StepSchedule StepSchedule::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument("constant step must be > 0");
  StepSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.scale_ = value;
  s.exponent_ = 0.0;
  return s;
}

StepSchedule StepSchedule::table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("table schedule needs at least one value");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("table step sizes must be > 0");
  StepSchedule s;
  s.kind_ = ScheduleKind::table;
  s.values_ = std::move(values);
  return s;
}

double StepSchedule::value(std::size_t k) const {
  switch (kind_) {
    case ScheduleKind::harmonic:
      return scale_ / static_cast<double>(k + offset_ + 1);
    case ScheduleKind::power:
      return scale_ / std::pow(static_cast<double>(k + offset_ + 1), exponent_);
    case ScheduleKind::constant:
      return scale_;
    case ScheduleKind::table:
      return values_[std::min(k, values_.size() - 1)];
  }
  return scale_;
}

bool StepSchedule::is_order_one_over_k() const {
  return kind_ == ScheduleKind::harmonic || (kind_ == ScheduleKind::power && exponent_ == 1.0);
}

double ratio_bound(const std::vector<double>& alpha) {
  if (alpha.empty()) throw std::invalid_argument("ratio_bound needs K >= 1");
  double running_min = std::numeric_limits<double>::infinity();
  double best = 0.0;
  for (double a : alpha) {
    running_min = std::min(running_min, a);
    best = std::max(best, a / running_min);
  }
  return best;
}

double ratio_bound(const StepSchedule& s, std::size_t K) {
  if (K < 1) throw std::invalid_argument("ratio_bound needs K >= 1");
  // Monotone schedules never exceed one; skip the scan.
  if (s.kind() != ScheduleKind::table) return 1.0;
  std::vector<double> alpha(K);
  for (std::size_t k = 0; k < K; ++k) alpha[k] = s.value(k);
  return ratio_bound(alpha);
}

}  // namespace stratflow
