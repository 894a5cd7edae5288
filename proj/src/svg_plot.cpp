#include "dropwatch/svg_plot.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "dropwatch/error.hpp"

namespace dropwatch {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string utc_label(std::int64_t ts) {
  using namespace std::chrono;
  const sys_seconds t{seconds{ts}};
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), int(hms.hours().count()), int(hms.minutes().count()));
  return buf;
}

std::string escape(std::string_view s) {
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

PlotRule parse_plot_rule(std::string_view text) {
  if (text == "accumulator" || text == "acc") return PlotRule::accumulator;
  if (text == "tail") return PlotRule::tail;
  if (text == "intersection" || text == "intersect") return PlotRule::intersection;
  throw Error("unknown plot rule '" + std::string(text) + "' (accumulator|tail|intersection)");
}

std::string render_svg(std::span<const DetectionRow> rows, const PlotOptions& options) {
  if (rows.empty()) throw Error("nothing to plot: no rows");
  const double w = options.width;
  const double h = options.height;
  const double plot_w = w - kLeft - kRight;
  const double plot_h = h - kTop - kBottom;

  double lo = rows.front().actual;
  double hi = lo;
  for (const auto& r : rows) {
    lo = std::min({lo, r.actual, r.prediction});
    hi = std::max({hi, r.actual, r.prediction});
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const std::size_t n = rows.size();
  auto x_of = [&](std::size_t i) {
    return n == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };
  const double step = n == 1 ? plot_w : plot_w / static_cast<double>(n - 1);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << options.width
      << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << ' '
      << options.height << "\">\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << fmt(w / 2) << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << escape(options.title) << "</text>\n";
  }

  // Flagged regions below the lines.
  std::vector<bool> flags;
  switch (options.shade) {
    case PlotRule::accumulator: flags = acc_flags(rows); break;
    case PlotRule::tail: flags = tail_flags(rows); break;
    case PlotRule::intersection: flags = intersect_flags(rows); break;
  }
  svg << "<g class=\"anomalies\">\n";
  for (const Region& r : flags_to_regions(flags)) {
    const double x0 = std::max(kLeft, x_of(r.start) - step / 2);
    const double x1 = std::min(kLeft + plot_w, x_of(r.end) + step / 2);
    svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(x1 - x0)
        << "\" height=\"" << fmt(plot_h) << "\" fill=\"red\" fill-opacity=\"0.3\"/>\n";
  }
  svg << "</g>\n";

  // Axes and ticks.
  svg << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<path d=\"M" << fmt(kLeft) << ' ' << fmt(kTop) << " V" << fmt(kTop + plot_h) << " H"
      << fmt(kLeft + plot_w) << "\"/>\n";
  constexpr int kXTicks = 6;
  constexpr int kYTicks = 5;
  for (int k = 0; k < kXTicks; ++k) {
    const std::size_t i = n == 1 ? 0 : (n - 1) * static_cast<std::size_t>(k) / (kXTicks - 1);
    svg << "<path d=\"M" << fmt(x_of(i)) << ' ' << fmt(kTop + plot_h) << " v5\"/>\n";
    if (n == 1) break;
  }
  for (int k = 0; k < kYTicks; ++k) {
    const double v = lo + (hi - lo) * k / (kYTicks - 1);
    svg << "<path d=\"M" << fmt(kLeft - 5) << ' ' << fmt(y_of(v)) << " h5\"/>\n";
  }
  svg << "</g>\n<g class=\"labels\" font-family=\"sans-serif\" font-size=\"10\" fill=\"black\">\n";
  for (int k = 0; k < kXTicks; ++k) {
    const std::size_t i = n == 1 ? 0 : (n - 1) * static_cast<std::size_t>(k) / (kXTicks - 1);
    svg << "<text x=\"" << fmt(x_of(i)) << "\" y=\"" << fmt(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << utc_label(rows[i].timestamp) << "</text>\n";
    if (n == 1) break;
  }
  for (int k = 0; k < kYTicks; ++k) {
    const double v = lo + (hi - lo) * k / (kYTicks - 1);
    svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y_of(v) + 3)
        << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  svg << "</g>\n";

  auto polyline = [&](const char* color, const char* cls, auto value) {
    svg << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) svg << ' ';
      svg << fmt(x_of(i)) << ',' << fmt(y_of(value(rows[i])));
    }
    svg << "\"/>\n";
  };
  polyline("blue", "actual", [](const DetectionRow& r) { return r.actual; });
  polyline("green", "prediction", [](const DetectionRow& r) { return r.prediction; });
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace dropwatch
