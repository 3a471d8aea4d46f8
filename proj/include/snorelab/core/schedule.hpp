#pragma once

#include <cstdint>
#include <string>

namespace snorelab {

enum class ScheduleKind { Constant, PowerDecay };

/// Step-size law delta_k.
///
/// Constant: delta_k = c. PowerDecay: delta_k = c / (k + 1)^alpha, shifted by
/// one so that delta_0 = c. Both sequences are positive and non increasing.
class StepSchedule {
 public:
  static StepSchedule constant(double c);
  static StepSchedule power_decay(double c, double alpha);

  double value(std::uint64_t k) const noexcept;

  ScheduleKind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  double alpha() const noexcept { return alpha_; }
  bool is_constant() const noexcept { return kind_ == ScheduleKind::Constant; }

  std::string describe() const;

 private:
  StepSchedule(ScheduleKind kind, double c, double alpha) : kind_(kind), c_(c), alpha_(alpha) {}

  ScheduleKind kind_;
  double c_;
  double alpha_;
};

inline double schedule_value(const StepSchedule& s, std::uint64_t k) noexcept { return s.value(k); }

const char* to_string(ScheduleKind kind) noexcept;

}  // namespace snorelab
