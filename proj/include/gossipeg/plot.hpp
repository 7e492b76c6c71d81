#ifndef GOSSIPEG_PLOT_HPP_
#define GOSSIPEG_PLOT_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gossipeg/csv.hpp"
#include "gossipeg/error.hpp"
#include "gossipeg/regression.hpp"

namespace gossipeg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // scatter instead of polyline
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_x = false;
  bool log_y = false;
  double width = 640.0;
  double height = 440.0;
  std::vector<Series> series;
  std::optional<LineFit> fit;  // drawn as a line in log-log space with a slope note
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

inline std::string svg_escape(const std::string& s) {
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

inline std::string tick_label(double v, bool log) {
  if (log) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 3);
    return std::string(buf, res.ptr);
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double t(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (t(v) - lo) / (hi - lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo); e <= std::floor(hi) + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
      if (out.size() < 2) out = {std::pow(10.0, lo), std::pow(10.0, hi)};
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) out.push_back(v == 0.0 ? 0.0 : v);
    return out;
  }
};

inline Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* d : data)
    for (double v : *d) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      const double t = log ? std::log10(v) : v;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) throw Error("plot: no plottable data" + std::string(log ? " (log axis needs positive values)" : ""));
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  } else {
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

}  // namespace detail

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

/// Self-contained SVG document. Output depends only on the spec.
inline std::string render_svg(const PlotSpec& spec) {
  using detail::svg_num;
  if (spec.series.empty()) throw Error("plot: nothing to draw");
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw Error("plot: series '" + s.label + "' has mismatched x and y");
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const detail::Axis ax = detail::make_axis(xs, spec.log_x);
  const detail::Axis ay = detail::make_axis(ys, spec.log_y);

  const double left = 78.0, right = 20.0, top = 40.0, bottom = 58.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double v) { return left + ax.frac(v) * pw; };
  auto py = [&](double v) { return top + (1.0 - ay.frac(v)) * ph; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(spec.width) + "\" height=\"" +
       svg_num(spec.height) + "\" viewBox=\"0 0 " + svg_num(spec.width) + " " + svg_num(spec.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<defs><clipPath id=\"plot\"><rect x=\"" + svg_num(left) + "\" y=\"" + svg_num(top) + "\" width=\"" +
       svg_num(pw) + "\" height=\"" + svg_num(ph) + "\"/></clipPath></defs>\n";
  if (!spec.title.empty())
    s += "<text x=\"" + svg_num(spec.width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + detail::svg_escape(spec.title) + "</text>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    if (x < left - 0.5 || x > left + pw + 0.5) continue;
    s += "<line x1=\"" + svg_num(x) + "\" y1=\"" + svg_num(top) + "\" x2=\"" + svg_num(x) + "\" y2=\"" +
         svg_num(top + ph) + "\" stroke=\"#e5e5e5\"/>\n";
    s += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(top + ph + 16) + "\" text-anchor=\"middle\">" +
         detail::tick_label(t, ax.log) + "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    if (y < top - 0.5 || y > top + ph + 0.5) continue;
    s += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(y) + "\" x2=\"" + svg_num(left + pw) + "\" y2=\"" +
         svg_num(y) + "\" stroke=\"#e5e5e5\"/>\n";
    s += "<text x=\"" + svg_num(left - 6) + "\" y=\"" + svg_num(y + 4) + "\" text-anchor=\"end\">" +
         detail::tick_label(t, ay.log) + "</text>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + svg_num(left) + "\" y=\"" + svg_num(top) + "\" width=\"" + svg_num(pw) + "\" height=\"" +
       svg_num(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  s += "<text x=\"" + svg_num(left + pw / 2) + "\" y=\"" + svg_num(spec.height - 14) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + detail::svg_escape(spec.x_label) +
       "</text>\n";
  s += "<text transform=\"translate(18," + svg_num(top + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
       detail::svg_escape(spec.y_label) + "</text>\n";

  s += "<g clip-path=\"url(#plot)\">\n";
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const Series& ser = spec.series[i];
    const std::string color = kPalette[i % std::size(kPalette)];
    if (ser.markers) {
      for (std::size_t j = 0; j < ser.x.size(); ++j)
        if (usable(ser.x[j], ser.y[j]))
          s += "<circle cx=\"" + svg_num(px(ser.x[j])) + "\" cy=\"" + svg_num(py(ser.y[j])) + "\" r=\"3.5\" fill=\"" +
               color + "\"/>\n";
      continue;
    }
    std::string pts;
    for (std::size_t j = 0; j < ser.x.size(); ++j) {
      if (!usable(ser.x[j], ser.y[j])) continue;
      if (!pts.empty()) pts += ' ';
      pts += svg_num(px(ser.x[j])) + "," + svg_num(py(ser.y[j]));
    }
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.6\"" +
         (ser.dashed ? std::string(" stroke-dasharray=\"6 4\"") : std::string()) + " points=\"" + pts + "\"/>\n";
  }
  if (spec.fit) {
    const double x0 = spec.log_x ? std::pow(10.0, ax.lo) : ax.lo;
    const double x1 = spec.log_x ? std::pow(10.0, ax.hi) : ax.hi;
    auto f = [&](double x) { return std::exp(spec.fit->intercept + spec.fit->slope * std::log(x)); };
    if (x0 > 0.0)
      s += "<line x1=\"" + svg_num(px(x0)) + "\" y1=\"" + svg_num(py(f(x0))) + "\" x2=\"" + svg_num(px(x1)) +
           "\" y2=\"" + svg_num(py(f(x1))) + "\" stroke=\"#555\" stroke-width=\"1.2\" stroke-dasharray=\"4 3\"/>\n";
  }
  s += "</g>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = top + 16;
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const std::string color = kPalette[i % std::size(kPalette)];
    s += "<rect x=\"" + svg_num(left + pw - 170) + "\" y=\"" + svg_num(ly - 9) + "\" width=\"12\" height=\"3\" fill=\"" +
         color + "\"/>\n";
    s += "<text x=\"" + svg_num(left + pw - 152) + "\" y=\"" + svg_num(ly - 4) + "\">" +
         detail::svg_escape(spec.series[i].label) + "</text>\n";
    ly += 16;
  }
  if (spec.fit) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "slope = %.4f \xC2\xB1 %.4f", spec.fit->slope, spec.fit->stderr_slope);
    s += "<text x=\"" + svg_num(left + 10) + "\" y=\"" + svg_num(top + 18) + "\">" + buf + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_PLOT_HPP_
