#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sncert::cli {

namespace {

constexpr double kPanelW = 460.0;
constexpr double kPanelH = 340.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 16.0;
constexpr double kTop = 34.0;
constexpr double kBottom = 48.0;

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string px(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nf = f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0;
  return nf * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * (1.0 + std::abs(lo))) {
      lo -= 0.5 * (1.0 + std::abs(lo));
      hi += 0.5 * (1.0 + std::abs(hi));
    }
    const double m = 0.04 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

void draw_panel(std::ostringstream& os, const Panel& p, double ox, double oy) {
  const double w = kPanelW - kLeft - kRight;
  const double h = kPanelH - kTop - kBottom;
  os << "<g transform=\"translate(" << px(ox) << "," << px(oy) << ")\">\n";
  os << "<text x=\"" << px(kPanelW / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(p.title) << "</text>\n";
  os << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(w)
     << "\" height=\"" << px(h) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  Range rx, ry;
  std::size_t points = 0;
  for (const auto& s : p.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      rx.add(s.x[i]);
      ry.add(s.y[i]);
      ++points;
    }
  }
  if (points == 0) {
    os << "<text x=\"" << px(kLeft + w / 2) << "\" y=\"" << px(kTop + h / 2)
       << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#888\">"
       << escape(p.note.empty() ? "no data" : p.note) << "</text>\n</g>\n";
    return;
  }
  rx.pad();
  ry.pad();
  const auto sx = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * w; };
  const auto sy = [&](double v) { return kTop + h - (v - ry.lo) / (ry.hi - ry.lo) * h; };

  const double stx = nice_step(rx.hi - rx.lo);
  for (double t = std::ceil(rx.lo / stx) * stx; t <= rx.hi; t += stx) {
    const double v = std::abs(t) < 1e-9 * stx ? 0.0 : t;
    os << "<line x1=\"" << px(sx(v)) << "\" y1=\"" << px(kTop + h) << "\" x2=\"" << px(sx(v))
       << "\" y2=\"" << px(kTop + h + 4) << "\" stroke=\"#444\"/>"
       << "<text x=\"" << px(sx(v)) << "\" y=\"" << px(kTop + h + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << num(v) << "</text>\n";
  }
  const double sty = nice_step(ry.hi - ry.lo);
  for (double t = std::ceil(ry.lo / sty) * sty; t <= ry.hi; t += sty) {
    const double v = std::abs(t) < 1e-9 * sty ? 0.0 : t;
    os << "<line x1=\"" << px(kLeft - 4) << "\" y1=\"" << px(sy(v)) << "\" x2=\"" << px(kLeft)
       << "\" y2=\"" << px(sy(v)) << "\" stroke=\"#444\"/>"
       << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(sy(v) + 3)
       << "\" text-anchor=\"end\" font-size=\"10\">" << num(v) << "</text>\n";
  }
  os << "<text x=\"" << px(kLeft + w / 2) << "\" y=\"" << px(kPanelH - 10)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.xlabel) << "</text>\n";
  os << "<text transform=\"translate(14," << px(kTop + h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.ylabel)
     << "</text>\n";

  double legend_y = kTop + 14;
  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      os << "<g fill=\"" << s.color << "\">";
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\"" << px(sy(s.y[i])) << "\" r=\""
           << px(s.marker_radius) << "\"/>";
      }
      os << "</g>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << px(sx(s.x[i])) << ',' << px(sy(s.y[i])) << ' ';
      }
      os << "\"/>\n";
    }
    if (!s.label.empty()) {
      os << "<rect x=\"" << px(kLeft + w - 120) << "\" y=\"" << px(legend_y - 8)
         << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>"
         << "<text x=\"" << px(kLeft + w - 105) << "\" y=\"" << px(legend_y + 1)
         << "\" font-size=\"10\">" << escape(s.label) << "</text>\n";
      legend_y += 14;
    }
  }
  os << "</g>\n";
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, int columns, const std::string& comment) {
  columns = std::max(1, columns);
  const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) /
                                    static_cast<std::size_t>(columns));
  const double width = kPanelW * columns;
  const double height = kPanelH * std::max(1, rows);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) os << "<!-- " << escape(comment) << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << px(width) << ' '
     << px(height) << "\" width=\"" << px(width) << "\" height=\"" << px(height)
     << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto c = static_cast<double>(i % static_cast<std::size_t>(columns));
    const auto r = static_cast<double>(i / static_cast<std::size_t>(columns));
    draw_panel(os, panels[i], c * kPanelW, r * kPanelH);
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sncert::cli
