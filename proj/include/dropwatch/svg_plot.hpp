#pragma once

#include <span>
#include <string>

#include "dropwatch/detection.hpp"

namespace dropwatch {

enum class PlotRule { accumulator, tail, intersection };

PlotRule parse_plot_rule(std::string_view text);

struct PlotOptions {
  int width = 1200;
  int height = 400;
  PlotRule shade = PlotRule::intersection;
  std::string title;
};

/// SVG 1.1 chart: actual values in blue, predictions in green, flagged
/// regions of the chosen rule as translucent red rectangles. The output is
/// a pure function of the input rows.
std::string render_svg(std::span<const DetectionRow> rows, const PlotOptions& options = {});

}  // namespace dropwatch
