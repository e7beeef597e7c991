#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace celo {

// One training trajectory. `losses` always has `steps` entries; runs that
// diverge early are padded with +inf from the failure point on.
struct RunRecord {
  std::string task_id;
  std::string optimizer_id;
  uint64_t seed = 0;
  int64_t steps = 0;
  std::vector<double> losses;
  std::vector<double> eta;  // schedule trace, empty unless the optimizer emits one
  bool diverged = false;
};

// y0 = x0; y_t = c*y_{t-1} + (1-c)*x_t.
std::vector<double> smooth(const std::vector<double>& curve, double c = 0.9);

// Mean of the last 10 smoothed losses; +inf for diverged runs.
double final_loss(const RunRecord& record);

// CSV with header step,loss[,eta].
void write_record_csv(const std::string& path, const RunRecord& record);
RunRecord read_record_csv(const std::string& path);

// Schedule trace export: header step,eta,loss.
void write_schedule_trace_csv(const std::string& path, const RunRecord& record);

}  // namespace celo
