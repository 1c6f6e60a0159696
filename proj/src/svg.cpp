#include "hoif/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hoif {

namespace {

std::string escape(const std::string& s) {
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Round the span out to "nice" tick steps (1, 2, 5 x 10^k).
std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::floor(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(t);
  if (ticks.size() < 2) ticks.push_back(ticks.back() + step);
  return ticks;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string line_plot_svg(const PlotSpec& spec) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 20, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series) {
    for (double x : s.x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : s.y)
      if (std::isfinite(y)) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;

  std::vector<double> xticks;
  if (!spec.x_categories.empty()) {
    xmin = 0;
    xmax = static_cast<double>(spec.x_categories.size() - 1);
    if (xmax == 0) xmax = 1;
    for (std::size_t i = 0; i < spec.x_categories.size(); ++i) xticks.push_back(static_cast<double>(i));
  } else {
    xticks = nice_ticks(xmin, xmax, 6);
    xmin = xticks.front();
    xmax = xticks.back();
  }
  const auto yticks = nice_ticks(ymin, ymax, 5);
  ymin = yticks.front();
  ymax = yticks.back();

  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
    << "</text>\n";
  o << "<g id=\"x-axis\" class=\"axis\">\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < xticks.size(); ++i) {
    const double x = sx(xticks[i]);
    const std::string label = spec.x_categories.empty() ? tick_label(xticks[i]) : spec.x_categories[i];
    o << "<line x1=\"" << fmt(x) << "\" y1=\"" << top + ph << "\" x2=\"" << fmt(x) << "\" y2=\"" << top + ph + 5
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fmt(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << escape(label) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << escape(spec.x_label) << "</text>\n</g>\n";
  o << "<g id=\"y-axis\" class=\"axis\">\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (double t : yticks) {
    const double y = sy(t);
    o << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(y) << "\" x2=\"" << left << "\" y2=\"" << fmt(y)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << left - 8 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << tick_label(t) << "</text>\n";
  }
  o << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << top + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n</g>\n";

  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    o << "<polyline class=\"series\" data-name=\"" << escape(s.name) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      o << (k ? " " : "") << fmt(sx(s.x[k])) << ',' << fmt(sy(s.y[k]));
    }
    o << "\"/>\n";
    const double ly = top + 10 + 18 * static_cast<double>(i);
    o << "<g class=\"legend\"><line x1=\"" << left + pw - 150 << "\" y1=\"" << fmt(ly) << "\" x2=\""
      << left + pw - 125 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << left + pw - 120 << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"12\">" << escape(s.name)
      << "</text></g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace hoif
