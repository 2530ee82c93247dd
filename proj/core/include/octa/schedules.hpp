#pragma once

#include <string>

namespace octa {

enum class ScheduleKind { step1, step2, cosine };

ScheduleKind schedule_from_name(const std::string& name);
const char* schedule_name(ScheduleKind k);

/// Declarative learning-rate policy, evaluated as a pure function of epoch.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::step1;
  double lr0 = 1e-4;
  int total_epochs = 100;
};

/// step1: lr0 until epoch floor(0.25*E), then lr0/10.
/// step2: lr0 * 0.6^floor(epoch / ceil(E/4)).
/// cosine: lr0 * 0.5 * (1 + cos(pi * epoch / (E-1))), zero at the last epoch.
double lr_at(const ScheduleSpec& spec, int epoch);

}  // namespace octa
