#include "octa/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace octa {

ScheduleKind schedule_from_name(const std::string& name) {
  if (name == "step1") return ScheduleKind::step1;
  if (name == "step2") return ScheduleKind::step2;
  if (name == "cosine") return ScheduleKind::cosine;
  throw std::invalid_argument("unknown schedule: " + name + " (expected step1|step2|cosine)");
}

const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::step1: return "step1";
    case ScheduleKind::step2: return "step2";
    case ScheduleKind::cosine: return "cosine";
  }
  return "?";
}

double lr_at(const ScheduleSpec& spec, int epoch) {
  if (spec.lr0 <= 0.0) throw std::invalid_argument("lr0 must be positive");
  if (spec.total_epochs < 1) throw std::invalid_argument("total_epochs must be >= 1");
  if (epoch < 0 || epoch >= spec.total_epochs)
    throw std::out_of_range("epoch out of range [0," + std::to_string(spec.total_epochs) + ")");

  const int e = spec.total_epochs;
  switch (spec.kind) {
    case ScheduleKind::step1:
      return epoch < e / 4 ? spec.lr0 : spec.lr0 / 10.0;
    case ScheduleKind::step2: {
      int period = (e + 3) / 4;  // ceil(E/4)
      return spec.lr0 * std::pow(0.6, epoch / period);
    }
    case ScheduleKind::cosine:
      if (e == 1) return spec.lr0;
      return spec.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / (e - 1)));
  }
  return spec.lr0;
}

}  // namespace octa
