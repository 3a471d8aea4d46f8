#include "snorelab/core/schedule.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace snorelab {

StepSchedule StepSchedule::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("schedule.c must be a positive finite real");
  return StepSchedule(ScheduleKind::Constant, c, 0.0);
}

StepSchedule StepSchedule::power_decay(double c, double alpha) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("schedule.c must be a positive finite real");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("schedule.alpha must lie in (0, 1]");
  return StepSchedule(ScheduleKind::PowerDecay, c, alpha);
}

double StepSchedule::value(std::uint64_t k) const noexcept {
  if (kind_ == ScheduleKind::Constant) return c_;
  return c_ / std::pow(static_cast<double>(k) + 1.0, alpha_);
}

std::string StepSchedule::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind_) << "(c=" << c_;
  if (kind_ == ScheduleKind::PowerDecay) os << ", alpha=" << alpha_;
  os << ")";
  return os.str();
}

const char* to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::Constant:
      return "constant";
    case ScheduleKind::PowerDecay:
      return "power-decay";
  }
  return "unknown";
}

}  // namespace snorelab
