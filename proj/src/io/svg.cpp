#include "dreamplan/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dreamplan/error.hpp"

namespace dreamplan::io {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b",
                                    "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Tick label: enough digits to distinguish neighboring ticks, no noise.
std::string tick_label(double v, double step) {
  int decimals = 0;
  for (double s = step; s < 0.9999 && decimals < 6; s *= 10.0) ++decimals;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Largest 1/2/5 x 10^n step producing at most `max_ticks` intervals.
double nice_step(double range, int max_ticks) {
  const double raw = range / max_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) return mag * m;
  }
  return mag * 10.0;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg_plot(const std::string& path, const PlotSpec& spec) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  bool any = false;
  for (const PlotSeries& s : spec.series) {
    if (s.x.size() != s.y.size()) {
      throw ValueError("series '" + s.label + "' has mismatched lengths");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
      any = true;
    }
  }
  if (!any) throw ValueError("plot '" + spec.title + "' has no data points");
  for (const auto& [label, y] : spec.hlines) {
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (x_max == x_min) { x_min -= 1.0; x_max += 1.0; }
  if (y_max == y_min) { y_min -= 1.0; y_max += 1.0; }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double left = 64, right = 16, top = 36, bottom = 46;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) {
    return left + pw * (x - x_min) / (x_max - x_min);
  };
  auto py = [&](double y) {
    return top + ph * (1.0 - (y - y_min) / (y_max - y_min));
  };

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<!-- schema=" << kPlotSchema << " -->\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
    << "\" height=\"" << spec.height << "\" font-family=\"sans-serif\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Frame and grid.
  f << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\""
    << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  const double xs = nice_step(x_max - x_min, 6);
  for (double t = std::ceil(x_min / xs) * xs; t <= x_max + 1e-9 * xs; t += xs) {
    const double X = px(t);
    f << "<line x1=\"" << num(X) << "\" y1=\"" << num(top) << "\" x2=\""
      << num(X) << "\" y2=\"" << num(top + ph)
      << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << num(X) << "\" y=\"" << num(top + ph + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << tick_label(t, xs)
      << "</text>\n";
  }
  const double ys = nice_step(y_max - y_min, 6);
  for (double t = std::ceil(y_min / ys) * ys; t <= y_max + 1e-9 * ys; t += ys) {
    const double Y = py(t);
    f << "<line x1=\"" << num(left) << "\" y1=\"" << num(Y) << "\" x2=\""
      << num(left + pw) << "\" y2=\"" << num(Y)
      << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << num(left - 6) << "\" y=\"" << num(Y + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << tick_label(t, ys)
      << "</text>\n";
  }

  // Reference lines.
  for (const auto& [label, y] : spec.hlines) {
    const double Y = py(y);
    f << "<line x1=\"" << num(left) << "\" y1=\"" << num(Y) << "\" x2=\""
      << num(left + pw) << "\" y2=\"" << num(Y)
      << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n"
      << "<text x=\"" << num(left + pw - 4) << "\" y=\"" << num(Y - 4)
      << "\" font-size=\"10\" fill=\"#555555\" text-anchor=\"end\">"
      << escape(label) << "</text>\n";
  }

  // Series.
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const PlotSeries& s = spec.series[si];
    if (s.x.empty()) continue;
    f << "<polyline fill=\"none\" stroke=\""
      << kPalette[si % kPaletteSize] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) f << ' ';
      f << num(px(s.x[i])) << ',' << num(py(s.y[i]));
    }
    f << "\"/>\n";
  }

  // Legend, top-left inside the frame.
  double ly = top + 14;
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const PlotSeries& s = spec.series[si];
    f << "<line x1=\"" << num(left + 8) << "\" y1=\"" << num(ly - 4)
      << "\" x2=\"" << num(left + 28) << "\" y2=\"" << num(ly - 4)
      << "\" stroke=\"" << kPalette[si % kPaletteSize]
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << num(left + 33) << "\" y=\"" << num(ly)
      << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    ly += 15;
  }

  // Labels.
  f << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" font-size=\"14\" "
    << "text-anchor=\"middle\">" << escape(spec.title) << "</text>\n"
    << "<text x=\"" << num(left + pw / 2) << "\" y=\""
    << num(spec.height - 10) << "\" font-size=\"12\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n"
    << "<text x=\"14\" y=\"" << num(top + ph / 2)
    << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n"
    << "</svg>\n";
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace dreamplan::io
