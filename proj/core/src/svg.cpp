#include "pmflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pmflow/io_util.hpp"

namespace pmflow {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

// Round tick bounds: step = {1, 2, 5} * 10^k covering the range with ~6 ticks.
std::vector<double> tick_positions(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

std::string tick_label(double v) {
  char buf[32];
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  if (a >= 1e5 || a < 1e-3)
    std::snprintf(buf, sizeof buf, "%.2e", v);
  else
    std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

} // namespace

std::string render_line_chart(const std::vector<SvgSeries>& series,
                              const SvgChartOptions& options) {
  if (series.empty()) throw std::invalid_argument("chart needs at least one series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("series x/y length mismatch: " + s.label);
    if (s.x.empty()) throw std::invalid_argument("empty series: " + s.label);
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw std::invalid_argument("non-finite data in series: " + s.label);
  }

  double x_lo = series[0].x[0], x_hi = x_lo;
  double y_lo = series[0].y[0], y_hi = y_lo;
  for (const auto& s : series) {
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = options.width - ml - mr;
  const double ph = options.height - mt - mb;
  const auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(options.width) + "\" height=\"" +
         std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) +
         "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";

  if (!options.title.empty())
    svg += "<text x=\"" + fmt(ml + pw / 2) +
           "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" +
           escape_xml(options.title) + "</text>\n";

  // Axes box and ticks.
  svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) +
         "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : tick_positions(x_lo, x_hi)) {
    const double X = px(t);
    svg += "<line x1=\"" + fmt(X) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(X) +
           "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(X) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(X) +
           "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt(X) + "\" y=\"" + fmt(mt + ph + 18) +
           "\" text-anchor=\"middle\">" + escape_xml(tick_label(t)) + "</text>\n";
  }
  for (double t : tick_positions(y_lo, y_hi)) {
    const double Y = py(t);
    svg += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(Y) + "\" x2=\"" + fmt(ml) +
           "\" y2=\"" + fmt(Y) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(Y) + "\" x2=\"" + fmt(ml + pw) +
           "\" y2=\"" + fmt(Y) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(Y + 4) +
           "\" text-anchor=\"end\">" + escape_xml(tick_label(t)) + "</text>\n";
  }
  if (!options.x_label.empty())
    svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" +
           fmt(options.height - 12.0) + "\" text-anchor=\"middle\">" +
           escape_xml(options.x_label) + "</text>\n";
  if (!options.y_label.empty())
    svg += "<text x=\"16\" y=\"" + fmt(mt + ph / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + fmt(mt + ph / 2) +
           ")\">" + escape_xml(options.y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      pts += fmt(px(s.x[i]));
      pts += ',';
      pts += fmt(py(s.y[i]));
      pts += ' ';
    }
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) +
             "\" r=\"2.5\" fill=\"" + color + "\"/>\n";

    const double ly = mt + 16.0 + 16.0 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt(ml + pw - 150) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
           fmt(ml + pw - 130) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(ml + pw - 124) + "\" y=\"" + fmt(ly) + "\">" +
           escape_xml(s.label) + "</text>\n";
  }

  svg += "</g>\n</svg>\n";
  return svg;
}

void write_line_chart(const std::filesystem::path& path,
                      const std::vector<SvgSeries>& series,
                      const SvgChartOptions& options) {
  write_text_file(path, render_line_chart(series, options));
}

} // namespace pmflow
