#pragma once

#include <string>
#include <vector>

namespace kanheat {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct BarGroup {
  std::string label;            // legend entry, one per model
  std::vector<double> values;   // one per category
  std::vector<double> errors;   // optional half-height error bars
};

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
};

// Standalone SVG documents. Coordinates are written with two decimals so the
// bytes depend only on the data.
std::string svg_line_chart(const PlotLabels& labels, const std::vector<PlotSeries>& series);
std::string svg_scatter(const PlotLabels& labels, const std::vector<PlotSeries>& series, bool diagonal = true);
std::string svg_bar_chart(const PlotLabels& labels, const std::vector<std::string>& categories,
                          const std::vector<BarGroup>& groups);

std::string xml_escape(const std::string& text);

}  // namespace kanheat
