#include "celo/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "celo/error.hpp"
#include "celo/format.hpp"

namespace celo {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 40;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_coord(double v) {
  // Two decimals keep files compact and stable.
  const double r = std::round(v * 100.0) / 100.0;
  return format_double(r);
}

}  // namespace

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y) {
  std::ofstream out(path);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);

  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  size_t x_max = 1;
  for (const PlotSeries& s : series) {
    x_max = std::max(x_max, s.ys.size());
    for (double y : s.ys) {
      if (!std::isfinite(y)) continue;
      if (log_y && y <= 0.0) continue;
      const double v = log_y ? std::log10(y) : y;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (!(y_min < y_max)) {
    y_min = std::isfinite(y_min) ? y_min - 1.0 : 0.0;
    y_max = y_min + 2.0;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) {
    return kMarginLeft + plot_w * (x_max > 1 ? x / static_cast<double>(x_max - 1) : 0.5);
  };
  auto sy = [&](double y) {
    const double v = log_y ? std::log10(y) : y;
    return kMarginTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  out << "<text x=\"14\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
      << "transform=\"rotate(-90 14 " << kHeight / 2 << ")\">" << y_label
      << (log_y ? " (log scale)" : "") << "</text>\n";
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\""
      << fmt_coord(plot_w) << "\" height=\"" << fmt_coord(plot_h)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  // Horizontal gridlines with value labels.
  for (int g = 0; g <= 4; ++g) {
    const double frac = static_cast<double>(g) / 4.0;
    const double v = y_min + frac * (y_max - y_min);
    const double y = kMarginTop + plot_h * (1.0 - frac);
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << fmt_coord(y)
        << "\" stroke=\"#ddd\"/>\n";
    const double label = log_y ? std::pow(10.0, v) : v;
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << fmt_coord(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt_coord(label) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">step"
      << "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (size_t i = 0; i < series[s].ys.size(); ++i) {
      const double y = series[s].ys[i];
      if (!std::isfinite(y) || (log_y && y <= 0.0)) continue;
      if (!first) out << ' ';
      out << fmt_coord(sx(static_cast<double>(i))) << ',' << fmt_coord(sy(y));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight - 8 << "\" y=\""
        << kMarginTop + 16 + 14 * static_cast<int>(s)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << color << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

}  // namespace celo
