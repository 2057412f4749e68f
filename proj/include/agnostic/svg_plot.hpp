#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "agnostic/eval.hpp"

namespace agnostic {

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (m, mean excess)
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace detail

/// Log-log line chart of mean excess against m, one polyline per series.
/// Nonpositive values cannot sit on a log axis and are left out of their
/// polyline; a series with no drawable points still gets an empty polyline
/// so the roster is always visible in the output.
inline void write_svg(std::ostream& os, const std::vector<PlotSeries>& series, const std::string& title) {
  constexpr double width = 640, height = 420, left = 70, right = 160, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (x <= 0 || y <= 0) continue;
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1;
  if (!(ymin <= ymax)) ymin = -1, ymax = 0;
  xmin = std::floor(xmin), xmax = std::ceil(xmax), ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax == xmin) xmax += 1;
  if (ymax == ymin) ymax += 1;

  auto px = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };
  using detail::fmt2;

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt2(width) << "\" height=\""
     << fmt2(height) << "\" viewBox=\"0 0 " << fmt2(width) << ' ' << fmt2(height) << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << fmt2(width) << "\" height=\"" << fmt2(height) << "\" fill=\"white\"/>\n"
     << "<text x=\"" << fmt2(left) << "\" y=\"24.00\" font-family=\"sans-serif\" font-size=\"14\">"
     << detail::xml_escape(title) << "</text>\n";

  // Axes and decade grid.
  os << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (double d = xmin; d <= xmax; d += 1)
    os << "<line x1=\"" << fmt2(px(d)) << "\" y1=\"" << fmt2(top) << "\" x2=\"" << fmt2(px(d)) << "\" y2=\""
       << fmt2(top + ph) << "\"/>\n";
  for (double d = ymin; d <= ymax; d += 1)
    os << "<line x1=\"" << fmt2(left) << "\" y1=\"" << fmt2(py(d)) << "\" x2=\"" << fmt2(left + pw) << "\" y2=\""
       << fmt2(py(d)) << "\"/>\n";
  os << "</g>\n";
  os << "<rect x=\"" << fmt2(left) << "\" y=\"" << fmt2(top) << "\" width=\"" << fmt2(pw) << "\" height=\""
     << fmt2(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double d = xmin; d <= xmax; d += 1)
    os << "<text x=\"" << fmt2(px(d)) << "\" y=\"" << fmt2(top + ph + 16) << "\" text-anchor=\"middle\">1e"
       << static_cast<int>(d) << "</text>\n";
  for (double d = ymin; d <= ymax; d += 1)
    os << "<text x=\"" << fmt2(left - 6) << "\" y=\"" << fmt2(py(d) + 4) << "\" text-anchor=\"end\">1e"
       << static_cast<int>(d) << "</text>\n";
  os << "<text x=\"" << fmt2(left + pw / 2) << "\" y=\"" << fmt2(height - 12)
     << "\" text-anchor=\"middle\">m</text>\n"
     << "<text x=\"16.00\" y=\"" << fmt2(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16.00 "
     << fmt2(top + ph / 2) << ")\">mean excess error</text>\n"
     << "</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = detail::kPalette[i % std::size(detail::kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : s.points)
      if (x > 0 && y > 0) pts.emplace_back(x, y);
    std::sort(pts.begin(), pts.end());
    os << "<polyline data-learner=\"" << detail::xml_escape(s.name) << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < pts.size(); ++j)
      os << (j ? " " : "") << fmt2(px(std::log10(pts[j].first))) << ',' << fmt2(py(std::log10(pts[j].second)));
    os << "\"/>\n";
    for (const auto& [x, y] : pts)
      os << "<circle cx=\"" << fmt2(px(std::log10(x))) << "\" cy=\"" << fmt2(py(std::log10(y)))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    os << "<line x1=\"" << fmt2(left + pw + 12) << "\" y1=\"" << fmt2(ly - 4) << "\" x2=\"" << fmt2(left + pw + 32)
       << "\" y2=\"" << fmt2(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << fmt2(left + pw + 38) << "\" y=\"" << fmt2(ly)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

/// One series per roster learner, from aggregated rows.
inline std::vector<PlotSeries> excess_series(const std::vector<SummaryRow>& rows,
                                             const std::vector<LearnerId>& roster) {
  std::vector<PlotSeries> out;
  for (auto id : roster) {
    PlotSeries s{to_string(id), {}};
    for (const auto& r : rows)
      if (r.learner == id && !r.skip_reason) s.points.emplace_back(static_cast<double>(r.m), to_double(r.mean_excess));
    out.push_back(std::move(s));
  }
  return out;
}

/// Roster in first-appearance order of a trial CSV.
inline std::vector<LearnerId> roster_of(const std::vector<TrialRecord>& records) {
  std::vector<LearnerId> roster;
  for (const auto& r : records)
    if (std::find(roster.begin(), roster.end(), r.learner) == roster.end()) roster.push_back(r.learner);
  return roster;
}

}  // namespace agnostic
