#include "celo/record.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "celo/error.hpp"
#include "celo/format.hpp"

namespace celo {

std::vector<double> smooth(const std::vector<double>& curve, double c) {
  CELO_CHECK(!curve.empty(), "cannot smooth an empty curve");
  std::vector<double> out(curve.size());
  out[0] = curve[0];
  for (size_t t = 1; t < curve.size(); ++t) {
    out[t] = c * out[t - 1] + (1.0 - c) * curve[t];
  }
  return out;
}

double final_loss(const RunRecord& record) {
  if (record.diverged) return std::numeric_limits<double>::infinity();
  CELO_CHECK(record.losses.size() >= 10, "final_loss needs at least 10 recorded losses");
  const std::vector<double> smoothed = smooth(record.losses);
  double acc = 0.0;
  for (size_t i = smoothed.size() - 10; i < smoothed.size(); ++i) acc += smoothed[i];
  return acc / 10.0;
}

void write_record_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);
  const bool with_eta = !record.eta.empty();
  out << "# task=" << record.task_id << " optimizer=" << record.optimizer_id
      << " seed=" << record.seed << " diverged=" << (record.diverged ? 1 : 0) << "\n";
  out << (with_eta ? "step,loss,eta\n" : "step,loss\n");
  for (size_t t = 0; t < record.losses.size(); ++t) {
    out << t << ',' << format_double(record.losses[t]);
    if (with_eta) out << ',' << format_double(t < record.eta.size() ? record.eta[t] : 0.0);
    out << '\n';
  }
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

RunRecord read_record_csv(const std::string& path) {
  std::ifstream in(path);
  CELO_CHECK(static_cast<bool>(in), "cannot open " + path);
  RunRecord record;
  std::string line;
  CELO_CHECK(static_cast<bool>(std::getline(in, line)) && line.rfind("# ", 0) == 0,
             "missing record metadata in " + path);
  {
    std::istringstream meta(line.substr(2));
    std::string field;
    while (meta >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
      if (key == "task") record.task_id = value;
      if (key == "optimizer") record.optimizer_id = value;
      if (key == "seed") record.seed = std::stoull(value);
      if (key == "diverged") record.diverged = value == "1";
    }
  }
  CELO_CHECK(static_cast<bool>(std::getline(in, line)), "missing header in " + path);
  const bool with_eta = line == "step,loss,eta";
  CELO_CHECK(with_eta || line == "step,loss", "unexpected header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    record.losses.push_back(std::strtod(cell.c_str(), nullptr));
    if (with_eta && std::getline(row, cell, ',')) {
      record.eta.push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  record.steps = static_cast<int64_t>(record.losses.size());
  return record;
}

void write_schedule_trace_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);
  out << "step,eta,loss\n";
  for (size_t t = 0; t < record.eta.size(); ++t) {
    out << t << ',' << format_double(record.eta[t]) << ','
        << format_double(t < record.losses.size() ? record.losses[t] : 0.0) << '\n';
  }
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

}  // namespace celo
