#pragma once

#include <string>
#include <vector>

#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// White mask drawn over the image: out = x + opacity * a * (1 - x).
RasterImage overlay(const RasterImage& image, const Plane& mask, double opacity = 0.6);

RasterImage gray_to_rgb(const Plane& plane);

/// Images laid out left to right with `pad` white pixels between them.
/// All frames must share one size.
RasterImage hstack(const std::vector<RasterImage>& frames, int pad = 2);

/// rows x cols tiling in row-major order.
RasterImage tile(const std::vector<RasterImage>& cells, int rows, int cols, int pad = 2);

struct PlotSeries {
  std::string name;
  std::vector<double> values;
};

/// Line plot of each series against its index on a white canvas, y axis
/// from 0 to the largest value, one color per series.
RasterImage line_plot(const std::vector<PlotSeries>& series, int height = 240, int width = 480);

}  // namespace dreamseg
