#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace emdot::svg {

namespace {

constexpr double kWidth = 720, kHeight = 360;
constexpr double kLeft = 60, kRight = 170, kTop = 36, kBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start", int size = 11) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
         std::to_string(size) + "\">" + escape(s) + "</text>\n";
}

}  // namespace

std::string render(const LineChart& chart) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double x = s.x.empty() ? static_cast<double>(i) : s.x[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!chart.x_ticks.empty()) {
    xmin = std::min(xmin, 0.0);
    xmax = std::max(xmax, static_cast<double>(chart.x_ticks.size() - 1));
  }
  for (const auto& [a, b] : chart.bands) {
    xmin = std::min(xmin, a);
    xmax = std::max(xmax, b);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::string out = header(kWidth, kHeight);
  out += text(kWidth / 2, 20, chart.title, "middle", 13);
  for (const auto& [a, b] : chart.bands) {
    out += "<rect class=\"gray-band\" x=\"" + num(px(a)) + "\" y=\"" + num(kTop) + "\" width=\"" +
           num(std::max(1.0, px(b) - px(a))) + "\" height=\"" + num(ph) + "\" fill=\"#d9d9d9\"/>\n";
  }
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymin + (ymax - ymin) * i / 4.0;
    out += text(kLeft - 4, py(v) + 4, num(v), "end");
  }
  if (!chart.x_ticks.empty()) {
    const std::size_t step = std::max<std::size_t>(1, chart.x_ticks.size() / 10);
    for (std::size_t i = 0; i < chart.x_ticks.size(); i += step)
      out += text(px(static_cast<double>(i)), kTop + ph + 14, chart.x_ticks[i], "middle");
  }
  out += text(kLeft + pw / 2, kHeight - 10, chart.x_label, "middle");
  out += "<text x=\"14\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         num(kTop + ph / 2) + ")\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < series.y.size(); ++i) {
      if (!std::isfinite(series.y[i])) {
        pen_down = false;
        continue;
      }
      const double x = series.x.empty() ? static_cast<double>(i) : series.x[i];
      path += (pen_down ? " L" : " M") + num(px(x)) + " " + num(py(series.y[i]));
      pen_down = true;
    }
    out += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           (series.heavy ? "3.5" : "1.2") + "\"" + (series.dashed ? " stroke-dasharray=\"5 3\"" : "") + "/>\n";
    const double ly = kTop + 12 + 14 * static_cast<double>(s);
    out += "<line x1=\"" + num(kWidth - kRight + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kWidth - kRight + 28) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"" +
           (series.heavy ? "3.5" : "1.2") + "\"/>\n";
    out += text(kWidth - kRight + 32, ly, series.name);
  }
  out += "</svg>\n";
  return out;
}

int shade(double v) {
  const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return static_cast<int>(std::lround(255.0 * (1.0 - c)));
}

std::string render(const Heatmap& map) {
  const double cell_w = 24, cell_h = 16, left = 200, top = 40;
  const double w = left + cell_w * static_cast<double>(map.columns.size()) + 20;
  const double h = top + cell_h * static_cast<double>(map.rows.size()) + 60;
  std::string out = header(w, h);
  out += text(w / 2, 20, map.title, "middle", 13);
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    out += text(left - 6, top + cell_h * static_cast<double>(r) + 12, map.rows[r], "end");
    for (std::size_t c = 0; c < map.columns.size(); ++c) {
      const int g = shade(map.values[r][c]);
      out += "<rect x=\"" + num(left + cell_w * static_cast<double>(c)) + "\" y=\"" +
             num(top + cell_h * static_cast<double>(r)) + "\" width=\"" + num(cell_w) + "\" height=\"" + num(cell_h) +
             "\" fill=\"rgb(" + std::to_string(g) + "," + std::to_string(g) + "," + std::to_string(g) +
             ")\" stroke=\"#eeeeee\"/>\n";
    }
  }
  for (std::size_t c = 0; c < map.columns.size(); ++c) {
    const double x = left + cell_w * (static_cast<double>(c) + 0.5);
    const double y = top + cell_h * static_cast<double>(map.rows.size()) + 12;
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"end\" transform=\"rotate(-60 " + num(x) +
           " " + num(y) + ")\">" + escape(map.columns[c]) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace emdot::svg
