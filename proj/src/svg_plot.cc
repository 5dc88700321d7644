#include "stable_opinf/svg_plot.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace stable_opinf {

namespace {

std::string Num(double v, int precision = 2) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

std::string Tick(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec,
                             const std::vector<PlotSeries>& series) {
  constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 48;
  const double w = spec.width, h = spec.height;
  const double pw = w - kLeft - kRight, ph = h - kTop - kBottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    const Eigen::Index n = std::min(s.x.size(), s.y.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
    << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << ' '
    << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << Num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << Escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << Num(kLeft) << "\" y=\"" << Num(kTop) << "\" width=\"" << Num(pw)
    << "\" height=\"" << Num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<line x1=\"" << Num(px(xv)) << "\" y1=\"" << Num(kTop + ph) << "\" x2=\""
      << Num(px(xv)) << "\" y2=\"" << Num(kTop + ph + 5) << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << Num(px(xv)) << "\" y=\"" << Num(kTop + ph + 18)
      << "\" text-anchor=\"middle\">" << Tick(xv) << "</text>\n";
    o << "<line x1=\"" << Num(kLeft - 5) << "\" y1=\"" << Num(py(yv)) << "\" x2=\""
      << Num(kLeft) << "\" y2=\"" << Num(py(yv)) << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << Num(kLeft - 8) << "\" y=\"" << Num(py(yv) + 4)
      << "\" text-anchor=\"end\">" << Tick(yv) << "</text>\n";
  }
  o << "<text x=\"" << Num(kLeft + pw / 2) << "\" y=\"" << Num(h - 10)
    << "\" text-anchor=\"middle\">" << Escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(16 " << Num(kTop + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(spec.y_label) << "</text>\n";

  for (const auto& s : series) {
    const Eigen::Index n = std::min(s.x.size(), s.y.size());
    std::string points;
    auto flush = [&]() {
      if (points.empty()) return;
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"" << points
        << "\"/>\n";
      points.clear();
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += Num(px(s.x[i])) + "," + Num(py(s.y[i]));
    }
    flush();
  }

  double ly = kTop + 14;
  for (const auto& s : series) {
    o << "<line x1=\"" << Num(kLeft + pw - 120) << "\" y1=\"" << Num(ly - 4)
      << "\" x2=\"" << Num(kLeft + pw - 96) << "\" y2=\"" << Num(ly - 4)
      << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text x=\"" << Num(kLeft + pw - 90) << "\" y=\"" << Num(ly) << "\">"
      << Escape(s.label) << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace stable_opinf
