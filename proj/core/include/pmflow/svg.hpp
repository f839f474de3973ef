#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pmflow {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y; // same length as x
};

struct SvgChartOptions {
  int width = 960;
  int height = 540;
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Static line chart: axes with ticks, one polyline plus one circle marker per
// data point per series, legend. No external assets.
std::string render_line_chart(const std::vector<SvgSeries>& series,
                              const SvgChartOptions& options);

void write_line_chart(const std::filesystem::path& path,
                      const std::vector<SvgSeries>& series,
                      const SvgChartOptions& options);

} // namespace pmflow
