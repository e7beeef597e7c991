#pragma once

#include <string>
#include <vector>

namespace celo {

struct PlotSeries {
  std::string label;
  std::vector<double> ys;  // x is the index
};

// Standalone SVG line chart. Output is deterministic for identical input.
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y = false);

}  // namespace celo
