#ifndef DREAMPLAN_IO_SVG_HPP_
#define DREAMPLAN_IO_SVG_HPP_

#include <string>
#include <utility>
#include <vector>

namespace dreamplan::io {

// Static SVG line plots for episode logs. Output is a pure function of the
// spec (no timestamps), marked with `schema=dreamplan/plot/1` in a comment.
constexpr const char* kPlotSchema = "dreamplan/plot/1";

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // same length as x
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  // Dashed horizontal reference lines (e.g. limits), drawn with labels.
  std::vector<std::pair<std::string, double>> hlines;
  int width = 860;
  int height = 420;
};

// Throws ValueError when no series contains a point or lengths mismatch;
// IoError when the file cannot be written.
void write_svg_plot(const std::string& path, const PlotSpec& spec);

}  // namespace dreamplan::io

#endif  // DREAMPLAN_IO_SVG_HPP_
