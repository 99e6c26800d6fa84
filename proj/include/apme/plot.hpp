#pragma once

// Dependency-free SVG rendering for the reward curve, cumulative selection
// and marks histogram figures.

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace apme::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Frame {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 800.0;
  double height = 500.0;
};

namespace detail {

inline constexpr double kLeft = 70.0;
inline constexpr double kRight = 160.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 60.0;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[i % 10];
}

struct Scale {
  double x0, x1, y0, y1;
  double left, right, top, bottom;

  double px(double x) const {
    return x1 == x0 ? left : left + (x - x0) / (x1 - x0) * (right - left);
  }
  double py(double y) const {
    return y1 == y0 ? bottom : bottom - (y - y0) / (y1 - y0) * (bottom - top);
  }
};

inline void open_frame(std::ostringstream& svg, const Frame& f, const Scale& s) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\""
      << num(f.height) << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(f.width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(f.title) << "</text>\n";
  svg << "<line x1=\"" << num(s.left) << "\" y1=\"" << num(s.bottom) << "\" x2=\"" << num(s.right)
      << "\" y2=\"" << num(s.bottom) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(s.left) << "\" y1=\"" << num(s.top) << "\" x2=\"" << num(s.left)
      << "\" y2=\"" << num(s.bottom) << "\" stroke=\"black\"/>\n";
  svg << "<text class=\"x-label\" x=\"" << num((s.left + s.right) / 2) << "\" y=\""
      << num(f.height - 15) << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(f.x_label)
      << "</text>\n";
  svg << "<text class=\"y-label\" x=\"18\" y=\"" << num((s.top + s.bottom) / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << num((s.top + s.bottom) / 2) << ")\">" << escape(f.y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = s.y0 + (s.y1 - s.y0) * i / 4.0;
    svg << "<text x=\"" << num(s.left - 6) << "\" y=\"" << num(s.py(yv) + 4)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
  }
}

}  // namespace detail

inline std::string render_lines(const Frame& frame, const std::vector<Series>& series) {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  y0 = std::min(y0, 0.0);
  const detail::Scale sc{x0, x1, y0, y1, detail::kLeft, frame.width - detail::kRight,
                         detail::kTop, frame.height - detail::kBottom};

  std::ostringstream svg;
  detail::open_frame(svg, frame, sc);
  svg << "<text x=\"" << detail::num(sc.left) << "\" y=\"" << detail::num(sc.bottom + 16)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::tick(x0) << "</text>\n";
  svg << "<text x=\"" << detail::num(sc.right) << "\" y=\"" << detail::num(sc.bottom + 16)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::tick(x1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    svg << "<polyline class=\"series\" data-name=\"" << detail::escape(s.name)
        << "\" fill=\"none\" stroke=\"" << detail::color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) svg << ' ';
      svg << detail::num(sc.px(s.x[i])) << ',' << detail::num(sc.py(s.y[i]));
    }
    svg << "\"/>\n";
    const double ly = sc.top + 14.0 * static_cast<double>(k);
    svg << "<text x=\"" << detail::num(sc.right + 10) << "\" y=\"" << detail::num(ly + 4)
        << "\" font-size=\"10\" fill=\"" << detail::color(k) << "\">" << detail::escape(s.name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::string render_bars(const Frame& frame, const std::vector<std::string>& labels,
                               const std::vector<double>& values) {
  double y1 = 0.0;
  for (double v : values) y1 = std::max(y1, v);
  if (y1 == 0.0) y1 = 1.0;
  const detail::Scale sc{0.0, 1.0, 0.0, y1, detail::kLeft, frame.width - detail::kRight,
                         detail::kTop, frame.height - detail::kBottom};
  std::ostringstream svg;
  detail::open_frame(svg, frame, sc);
  const double slot = values.empty() ? 0.0 : (sc.right - sc.left) / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = sc.left + slot * static_cast<double>(i) + slot * 0.1;
    const double top = sc.py(values[i]);
    svg << "<rect class=\"bar\" data-label=\"" << detail::escape(labels[i]) << "\" x=\""
        << detail::num(x) << "\" y=\"" << detail::num(top) << "\" width=\"" << detail::num(slot * 0.8)
        << "\" height=\"" << detail::num(sc.bottom - top) << "\" fill=\"" << detail::color(0)
        << "\"/>\n";
    svg << "<text x=\"" << detail::num(x + slot * 0.4) << "\" y=\"" << detail::num(sc.bottom + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::escape(labels[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace apme::plot
