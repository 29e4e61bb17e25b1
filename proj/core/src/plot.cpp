#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <string>

#include "gradstarve/logio.hpp"

namespace gradstarve {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi - lo < 1e-12) {
      const double half = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= half;
      hi += half;
    }
  }
};

// Roughly five ticks at 1/2/5 multiples of a power of ten.
std::vector<double> nice_ticks(Range r) {
  const double span = r.hi - r.lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step) ticks.push_back(t);
  return ticks;
}

}  // namespace

std::size_t render_plot(const std::vector<PlotSeries>& series, PlotKind kind, const PlotOptions& options,
                        std::ostream& out) {
  if (series.empty()) throw ValidationError("plot needs at least one series");
  Range xr;
  Range yr;
  std::set<double> categories;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw ValidationError("series '" + s.name + "' has " + std::to_string(s.x.size()) + " x values but " +
                            std::to_string(s.y.size()) + " y values");
    }
    if (s.x.empty()) throw ValidationError("series '" + s.name + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw ValidationError("series '" + s.name + "' contains non-finite values");
      }
      xr.include(s.x[i]);
      yr.include(s.y[i]);
      categories.insert(s.x[i]);
    }
  }
  if (kind == PlotKind::Bar) yr.include(0.0);
  xr.pad();
  yr.pad();

  const double w = options.width;
  const double h = options.height;
  const double left = 70;
  const double right = 170;
  const double top = 45;
  const double bottom = 55;
  const double pw = w - left - right;
  const double ph = h - top - bottom;

  const std::vector<double> cats(categories.begin(), categories.end());
  auto cat_index = [&](double x) {
    return static_cast<double>(std::lower_bound(cats.begin(), cats.end(), x) - cats.begin());
  };
  auto sx = [&](double x) {
    if (kind == PlotKind::Bar) return left + pw * (cat_index(x) + 0.5) / static_cast<double>(cats.size());
    return left + pw * (x - xr.lo) / (xr.hi - xr.lo);
  };
  auto sy = [&](double y) { return top + ph * (1.0 - (y - yr.lo) / (yr.hi - yr.lo)); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
  svg += "<text class=\"title\" x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(options.title) + "</text>\n";

  // Axes and ticks.
  svg += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(top + ph) + "\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) +
         "\"/>\n";
  svg += "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
  for (double t : nice_ticks(yr)) {
    const double y = sy(t);
    svg += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left) + "\" y2=\"" + num(y) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(left - 7) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
           "</text>\n";
  }
  const std::vector<double> xticks = kind == PlotKind::Bar ? cats : nice_ticks(xr);
  for (double t : xticks) {
    const double x = sx(t);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(top + ph + 4) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 17) + "\" text-anchor=\"middle\">" + tick_label(t) +
           "</text>\n";
  }
  svg += "</g>\n";
  svg += "<text class=\"xlabel\" x=\"" + num(left + pw / 2) + "\" y=\"" + num(h - 14) + "\" text-anchor=\"middle\">" +
         xml_escape(options.x_label) + "</text>\n";
  svg += "<text class=\"ylabel\" x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(top + ph / 2) + ")\">" + xml_escape(options.y_label) + "</text>\n";

  // Data.
  const double slot = pw / static_cast<double>(cats.size());
  const double bar_w = 0.8 * slot / static_cast<double>(series.size());
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    svg += "<g class=\"series\" data-name=\"" + xml_escape(s.name) + "\">\n";
    if (kind == PlotKind::Line) {
      if (s.x.size() > 1) {
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (i > 0) svg += ' ';
          svg += num(sx(s.x[i])) + "," + num(sy(s.y[i]));
        }
        svg += "\"/>\n";
      }
      if (s.x.size() <= 60) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          svg += "<circle cx=\"" + num(sx(s.x[i])) + "\" cy=\"" + num(sy(s.y[i])) + "\" r=\"3\" fill=\"" + color +
                 "\"/>\n";
        }
      }
    } else {
      const double base = sy(std::max(yr.lo, 0.0));
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double x0 = sx(s.x[i]) - 0.4 * slot + bar_w * static_cast<double>(si);
        const double y = sy(s.y[i]);
        svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(std::min(y, base)) + "\" width=\"" + num(bar_w) +
               "\" height=\"" + num(std::abs(base - y)) + "\" fill=\"" + color + "\"/>\n";
      }
    }
    svg += "</g>\n";
  }

  // Legend.
  svg += "<g class=\"legend\">\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double y = top + 10 + 20.0 * static_cast<double>(si);
    const double x = left + pw + 15;
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"14\" height=\"10\" fill=\"" +
           kPalette[si % kPaletteSize] + "\"/>\n";
    svg += "<text x=\"" + num(x + 20) + "\" y=\"" + num(y) + "\">" + xml_escape(series[si].name) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";

  out << svg;
  out.flush();
  if (!out) throw std::runtime_error("plot sink write failed");
  return svg.size();
}

}  // namespace gradstarve
