#pragma once

#include <string>
#include <vector>

namespace sncert::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;  // scatter instead of polyline
  double marker_radius = 1.6;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  std::string note;  // shown when there is nothing to plot
};

// Grid of panels with a fixed viewBox. The comment goes into an XML comment
// at the top; no timestamps are written.
std::string render_svg(const std::vector<Panel>& panels, int columns, const std::string& comment);

}  // namespace sncert::cli
