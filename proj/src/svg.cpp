#include "l1pen/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "l1pen/csv_io.hpp"
#include "l1pen/errors.hpp"

namespace l1pen {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kTop = 40.0;
constexpr double kPlotW = 470.0;
constexpr double kPlotH = 340.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

std::string render_svg_line(const std::vector<Series>& series, const ChartLabels& labels) {
  if (series.empty()) throw InputError("chart needs at least one series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) throw InputError("series '" + s.name + "' is empty or ragged");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) throw InputError("series values must be finite");
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, s.y[k]);
      ymax = std::max(ymax, s.y[k]);
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * kPlotW; };
  const auto py = [&](double y) { return kTop + kPlotH - (y - ymin) / (ymax - ymin) * kPlotH; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(kWidth) + "\" height=\"" + fixed2(kHeight) +
         "\" viewBox=\"0 0 " + fixed2(kWidth) + " " + fixed2(kHeight) + "\"";
  out += " data-x-min=\"" + format_double(xmin) + "\" data-x-max=\"" + format_double(xmax) + "\"";
  out += " data-y-min=\"" + format_double(ymin) + "\" data-y-max=\"" + format_double(ymax) + "\"";
  out += " data-plot-left=\"" + fixed2(kLeft) + "\" data-plot-top=\"" + fixed2(kTop) + "\" data-plot-width=\"" +
         fixed2(kPlotW) + "\" data-plot-height=\"" + fixed2(kPlotH) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fixed2(kWidth) + "\" height=\"" + fixed2(kHeight) + "\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed2(kLeft + kPlotW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(labels.title) + "</text>\n";
  out += "<rect x=\"" + fixed2(kLeft) + "\" y=\"" + fixed2(kTop) + "\" width=\"" + fixed2(kPlotW) + "\" height=\"" +
         fixed2(kPlotH) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double fy = ymin + (ymax - ymin) * k / 4.0;
    out += "<text x=\"" + fixed2(px(fx)) + "\" y=\"" + fixed2(kTop + kPlotH + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(fx) + "</text>\n";
    out += "<text x=\"" + fixed2(kLeft - 6) + "\" y=\"" + fixed2(py(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(fy) + "</text>\n";
  }
  out += "<text x=\"" + fixed2(kLeft + kPlotW / 2) + "\" y=\"" + fixed2(kHeight - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(labels.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + fixed2(kTop + kPlotH / 2) + "\" text-anchor=\"middle\" font-size=\"13\" " +
         "transform=\"rotate(-90 16 " + fixed2(kTop + kPlotH / 2) + ")\">" + escape(labels.y_label) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPalette.size()];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" data-series=\"" +
           escape(series[s].name) + "\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      if (k) out += ' ';
      out += fixed2(px(series[s].x[k])) + "," + fixed2(py(series[s].y[k]));
    }
    out += "\"/>\n";
    const double ly = kTop + 12 + 18.0 * static_cast<double>(s);
    const double lx = kLeft + kPlotW + 16;
    out += "<line x1=\"" + fixed2(lx) + "\" y1=\"" + fixed2(ly) + "\" x2=\"" + fixed2(lx + 22) + "\" y2=\"" +
           fixed2(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fixed2(lx + 28) + "\" y=\"" + fixed2(ly + 4) + "\" font-size=\"12\">" +
           escape(series[s].name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace l1pen
