#pragma once

#include <string>
#include <vector>

namespace hlsim {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  std::string label;
  bool dashed = false;
};

struct SvgMarker {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<SvgSeries> series;
  std::vector<SvgMarker> markers;
};

// Self-contained SVG document; non-finite or (on log axes) non-positive
// points are skipped.
std::string render_svg(const SvgPlot& plot);

}  // namespace hlsim
