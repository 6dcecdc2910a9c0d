#pragma once

// Dependency-free SVG charts. Output is a pure function of the input data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "safespeed/envelope_solver.hpp"
#include "safespeed/errors.hpp"

namespace safespeed::io::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;  ///< gaps break the polyline
};

struct Marker {
  std::string label;
  double x = 0.0;
};

struct LineChart {
  std::string title;
  std::string x_label;  ///< includes units
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;  ///< vertical dashed lines
};

struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string value_label;
  std::vector<double> x;  ///< column centres
  std::vector<double> y;  ///< row centres
  std::vector<std::optional<double>> values;  ///< row-major: index = i_y * x.size() + i_x
  std::optional<std::pair<std::size_t, std::size_t>> highlight;  ///< (i_x, i_y)
};

namespace detail {

inline constexpr double kWidth = 720;
inline constexpr double kHeight = 480;
inline constexpr double kLeft = 80;
inline constexpr double kRight = 170;
inline constexpr double kTop = 40;
inline constexpr double kBottom = 60;

inline const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                       "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> ticks;
};

/// Tick step from {1, 2, 5} x 10^k giving roughly `target` intervals.
inline Axis nice_axis(double lo, double hi, int target = 6) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = 10.0 * mag;
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  Axis a;
  a.lo = std::floor(lo / step) * step;
  a.hi = std::ceil(hi / step) * step;
  const int n = static_cast<int>(std::lround((a.hi - a.lo) / step));
  for (int i = 0; i <= n; ++i) a.ticks.push_back(a.lo + i * step);
  return a;
}

inline std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
                  "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
                  fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + coord(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Axis& ax, const Axis& ay, const std::string& x_label,
                        const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double v) { return x0 + (v - ax.lo) / (ax.hi - ax.lo) * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - ay.lo) / (ay.hi - ay.lo) * (y0 - y1); };
  std::string s;
  s += "<rect x=\"" + coord(x0) + "\" y=\"" + coord(y1) + "\" width=\"" + coord(x1 - x0) +
       "\" height=\"" + coord(y0 - y1) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks) {
    s += "<line x1=\"" + coord(px(t)) + "\" y1=\"" + coord(y0) + "\" x2=\"" + coord(px(t)) +
         "\" y2=\"" + coord(y0 + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + coord(px(t)) + "\" y=\"" + coord(y0 + 18) +
         "\" text-anchor=\"middle\">" + fmt(t) + "</text>\n";
  }
  for (double t : ay.ticks) {
    s += "<line x1=\"" + coord(x0 - 5) + "\" y1=\"" + coord(py(t)) + "\" x2=\"" + coord(x0) +
         "\" y2=\"" + coord(py(t)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + coord(x0 - 8) + "\" y=\"" + coord(py(t) + 4) +
         "\" text-anchor=\"end\">" + fmt(t) + "</text>\n";
  }
  s += "<text x=\"" + coord((x0 + x1) / 2) + "\" y=\"" + coord(kHeight - 15) +
       "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"18\" y=\"" + coord((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       coord((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  return s;
}

/// Linear blue-to-yellow ramp, t in [0, 1].
inline std::string ramp_colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + t * (250 - 40)));
  const int g = static_cast<int>(std::lround(40 + t * (220 - 40)));
  const int b = static_cast<int>(std::lround(140 + t * (40 - 140)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

inline std::string render(const LineChart& chart) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  std::size_t points = 0;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!s.y[i] || !std::isfinite(*s.y[i]) || !std::isfinite(s.x[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, *s.y[i]);
      ymax = std::max(ymax, *s.y[i]);
      ++points;
    }
  }
  if (points == 0) throw InputError("nothing to plot", "svg");
  ymin = std::min(ymin, 0.0);
  for (const auto& m : chart.markers) {
    xmin = std::min(xmin, m.x);
    xmax = std::max(xmax, m.x);
  }
  const auto ax = detail::nice_axis(xmin, xmax);
  const auto ay = detail::nice_axis(ymin, ymax);
  using namespace detail;
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double v) { return x0 + (v - ax.lo) / (ax.hi - ax.lo) * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - ay.lo) / (ay.hi - ay.lo) * (y0 - y1); };

  std::string out = header(chart.title) + axes(ax, ay, chart.x_label, chart.y_label);
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!s.y[i] || !std::isfinite(*s.y[i])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += coord(px(s.x[i])) + "," + coord(py(*s.y[i]));
    }
    flush();
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    out += "<line x1=\"" + coord(x1 + 12) + "\" y1=\"" + coord(ly) + "\" x2=\"" + coord(x1 + 36) +
           "\" y2=\"" + coord(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + coord(x1 + 42) + "\" y=\"" + coord(ly + 4) + "\">" + escape(s.label) +
           "</text>\n";
  }
  for (const auto& m : chart.markers) {
    out += "<line x1=\"" + coord(px(m.x)) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(px(m.x)) +
           "\" y2=\"" + coord(y0) + "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    out += "<text x=\"" + coord(px(m.x) + 4) + "\" y=\"" + coord(y1 + 14) + "\" fill=\"gray\">" +
           escape(m.label) + "=" + fmt(m.x) + "</text>\n";
  }
  return out + "</svg>\n";
}

inline std::string render(const Heatmap& map) {
  using namespace detail;
  if (map.x.empty() || map.y.empty() || map.values.size() != map.x.size() * map.y.size()) {
    throw InputError("nothing to plot", "svg");
  }
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& v : map.values) {
    if (v && std::isfinite(*v)) {
      vmin = std::min(vmin, *v);
      vmax = std::max(vmax, *v);
    }
  }
  if (!std::isfinite(vmin)) throw InputError("nothing to plot", "svg");
  const double span = vmax > vmin ? vmax - vmin : 1.0;

  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double cw = (x1 - x0) / static_cast<double>(map.x.size());
  const double ch = (y0 - y1) / static_cast<double>(map.y.size());
  std::string out = header(map.title);
  for (std::size_t iy = 0; iy < map.y.size(); ++iy) {
    for (std::size_t ix = 0; ix < map.x.size(); ++ix) {
      const auto& v = map.values[iy * map.x.size() + ix];
      const std::string fill = v ? ramp_colour((*v - vmin) / span) : std::string("#dddddd");
      out += "<rect x=\"" + coord(x0 + ix * cw) + "\" y=\"" + coord(y0 - (iy + 1) * ch) +
             "\" width=\"" + coord(cw) + "\" height=\"" + coord(ch) + "\" fill=\"" + fill +
             "\"><title>" + (v ? fmt(*v) : std::string("infeasible")) + "</title></rect>\n";
    }
  }
  if (map.highlight) {
    const auto [ix, iy] = *map.highlight;
    out += "<rect x=\"" + coord(x0 + ix * cw) + "\" y=\"" + coord(y0 - (iy + 1) * ch) +
           "\" width=\"" + coord(cw) + "\" height=\"" + coord(ch) +
           "\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }
  out += "<rect x=\"" + coord(x0) + "\" y=\"" + coord(y1) + "\" width=\"" + coord(x1 - x0) +
         "\" height=\"" + coord(y0 - y1) + "\" fill=\"none\" stroke=\"black\"/>\n";
  const std::size_t xstep = std::max<std::size_t>(1, map.x.size() / 8);
  for (std::size_t ix = 0; ix < map.x.size(); ix += xstep) {
    out += "<text x=\"" + coord(x0 + (ix + 0.5) * cw) + "\" y=\"" + coord(y0 + 18) +
           "\" text-anchor=\"middle\">" + fmt(map.x[ix]) + "</text>\n";
  }
  const std::size_t ystep = std::max<std::size_t>(1, map.y.size() / 8);
  for (std::size_t iy = 0; iy < map.y.size(); iy += ystep) {
    out += "<text x=\"" + coord(x0 - 8) + "\" y=\"" + coord(y0 - (iy + 0.5) * ch + 4) +
           "\" text-anchor=\"end\">" + fmt(map.y[iy]) + "</text>\n";
  }
  out += "<text x=\"" + coord((x0 + x1) / 2) + "\" y=\"" + coord(kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(map.x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + coord((y0 + y1) / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + coord((y0 + y1) / 2) + ")\">" +
         escape(map.y_label) + "</text>\n";

  // colour scale
  const double sx = x1 + 30, sw = 20;
  constexpr int kSteps = 32;
  for (int i = 0; i < kSteps; ++i) {
    const double h = (y0 - y1) / kSteps;
    out += "<rect x=\"" + coord(sx) + "\" y=\"" + coord(y0 - (i + 1) * h) + "\" width=\"" +
           coord(sw) + "\" height=\"" + coord(h + 0.5) + "\" fill=\"" +
           ramp_colour((i + 0.5) / kSteps) + "\"/>\n";
  }
  out += "<text x=\"" + coord(sx + sw + 6) + "\" y=\"" + coord(y0) + "\">" + fmt(vmin) + "</text>\n";
  out += "<text x=\"" + coord(sx + sw + 6) + "\" y=\"" + coord(y1 + 10) + "\">" + fmt(vmax) +
         "</text>\n";
  out += "<text x=\"" + coord(sx) + "\" y=\"" + coord(y1 - 8) + "\">" + escape(map.value_label) +
         "</text>\n";
  return out + "</svg>\n";
}

// ---------------------------------------------------------------------------
// Chart builders for solver results

inline std::string axis_label(ParamField f) {
  return std::string(to_string(f)) + " [" + unit_of(f) + "]";
}

/// v_safe against the swept parameter, one series per result.
inline LineChart sweep_chart(const std::vector<std::pair<std::string, SweepResult>>& results) {
  if (results.empty()) throw InputError("nothing to plot", "svg");
  LineChart c;
  c.title = "Maximum safe speed vs " + std::string(to_string(results.front().second.param));
  c.x_label = axis_label(results.front().second.param);
  c.y_label = "v_safe [m/s]";
  for (const auto& [label, r] : results) {
    Series s{label.empty() ? "v_safe" : label, {}, {}};
    Series emp{(label.empty() ? std::string() : label + " ") + "simulator", {}, {}};
    bool any_emp = false;
    for (const auto& row : r.rows) {
      s.x.push_back(row.value);
      s.y.push_back(row.solution ? std::optional<double>(row.solution->v_safe) : std::nullopt);
      emp.x.push_back(row.value);
      emp.y.push_back(row.empirical);
      any_emp = any_emp || row.empirical.has_value();
    }
    c.series.push_back(std::move(s));
    if (any_emp) c.series.push_back(std::move(emp));
  }
  return c;
}

/// Terminal lateral speed against its stage-2 limit, with v1/v2 marked.
inline LineChart crossing_chart(const CrossingCurve& cc) {
  LineChart c;
  c.title = std::string("Stage-2 admissibility (") + to_string(cc.mode) + ")";
  c.x_label = "v_x [m/s]";
  c.y_label = "lateral speed [m/s]";
  std::vector<std::optional<double>> vy(cc.v_y_T.begin(), cc.v_y_T.end());
  c.series.push_back({"v_y(T)", cc.v_x, vy});
  c.series.push_back({"v_y,max(T)", cc.v_x, cc.v_y_max_T});
  if (cc.v1) c.markers.push_back({"v1", *cc.v1});
  if (cc.v2) c.markers.push_back({"v2", *cc.v2});
  return c;
}

inline Heatmap surface_map(const SurfaceResult& s) {
  Heatmap m;
  m.title = "Maximum safe speed over drift rate and sensing range";
  m.x_label = "e [-]";
  m.y_label = "S [m]";
  m.value_label = "v_safe [m/s]";
  m.x = s.e_grid;
  m.y = s.S_grid;
  m.values.resize(s.cells.size());
  for (std::size_t ie = 0; ie < s.e_grid.size(); ++ie) {
    for (std::size_t iS = 0; iS < s.S_grid.size(); ++iS) {
      const auto& cell = s.at(ie, iS);
      m.values[iS * s.e_grid.size() + ie] =
          cell.error.empty() ? std::optional<double>(cell.v_safe) : std::nullopt;
    }
  }
  if (!s.cells.empty()) m.highlight = std::make_pair(s.argmax_e, s.argmax_S);
  return m;
}

enum class PlotKind { sweep_line, crossing_curves, surface_heatmap };

inline const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::sweep_line: return "sweep-line";
    case PlotKind::crossing_curves: return "crossing-curves";
    case PlotKind::surface_heatmap: return "surface-heatmap";
  }
  return "?";
}

}  // namespace safespeed::io::svg
