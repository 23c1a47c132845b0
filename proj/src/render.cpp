#include "dreamseg/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dreamseg {

RasterImage overlay(const RasterImage& image, const Plane& mask, double opacity) {
  if (mask.height != image.height() || mask.width != image.width()) {
    throw std::invalid_argument("overlay: mask and image sizes differ");
  }
  RasterImage out = image;
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) {
      const double a = opacity * std::clamp(mask.at(i, j), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) out.set(i, j, c, image.at(i, j, c) + a * (1.0 - image.at(i, j, c)));
    }
  }
  return out;
}

RasterImage gray_to_rgb(const Plane& plane) {
  RasterImage out(plane.height, plane.width);
  for (int i = 0; i < plane.height; ++i) {
    for (int j = 0; j < plane.width; ++j) {
      for (int c = 0; c < 3; ++c) out.set(i, j, c, plane.at(i, j));
    }
  }
  return out;
}

RasterImage tile(const std::vector<RasterImage>& cells, int rows, int cols, int pad) {
  if (cells.empty() || rows < 1 || cols < 1) throw std::invalid_argument("tile: nothing to lay out");
  if (static_cast<int>(cells.size()) > rows * cols) throw std::invalid_argument("tile: too many cells");
  const int h = cells.front().height();
  const int w = cells.front().width();
  for (const auto& c : cells) {
    if (c.height() != h || c.width() != w) throw std::invalid_argument("tile: cells differ in size");
  }
  RasterImage out(rows * h + (rows - 1) * pad, cols * w + (cols - 1) * pad, 1.0);
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const int r = static_cast<int>(n) / cols;
    const int q = static_cast<int>(n) % cols;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        for (int c = 0; c < 3; ++c) out.set(r * (h + pad) + i, q * (w + pad) + j, c, cells[n].at(i, j, c));
      }
    }
  }
  return out;
}

RasterImage hstack(const std::vector<RasterImage>& frames, int pad) {
  return tile(frames, 1, static_cast<int>(frames.size()), pad);
}

namespace {

constexpr std::array<std::array<double, 3>, 6> kPalette = {{
    {0.12, 0.47, 0.71}, {0.84, 0.15, 0.16}, {0.17, 0.63, 0.17},
    {1.00, 0.50, 0.05}, {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29},
}};

void put(RasterImage& img, int i, int j, const std::array<double, 3>& col) {
  if (i < 0 || j < 0 || i >= img.height() || j >= img.width()) return;
  for (int c = 0; c < 3; ++c) img.set(i, j, c, col[c]);
}

void segment(RasterImage& img, double y0, double x0, double y1, double x1, const std::array<double, 3>& col) {
  const int steps = static_cast<int>(std::max(std::abs(y1 - y0), std::abs(x1 - x0))) + 1;
  for (int s = 0; s <= steps; ++s) {
    const double f = static_cast<double>(s) / steps;
    const int i = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
    const int j = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
    put(img, i, j, col);
    put(img, i + 1, j, col);
  }
}

}  // namespace

RasterImage line_plot(const std::vector<PlotSeries>& series, int height, int width) {
  if (height < 32 || width < 32) throw std::invalid_argument("line_plot: canvas too small");
  RasterImage img(height, width, 1.0);
  const int left = 12;
  const int bottom = height - 12;
  const int top = 8;
  const int right = width - 8;
  const std::array<double, 3> axis{0.2, 0.2, 0.2};
  segment(img, top, left, bottom, left, axis);
  segment(img, bottom, left, bottom, right, axis);

  double y_max = 0.0;
  std::size_t x_max = 1;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (std::isfinite(v)) y_max = std::max(y_max, v);
    }
    x_max = std::max(x_max, s.values.size() > 1 ? s.values.size() - 1 : std::size_t{1});
  }
  if (y_max <= 0.0) y_max = 1.0;
  // light grid at quarters
  for (int q = 1; q <= 4; ++q) {
    const double y = bottom - (bottom - top) * q / 4.0;
    for (int j = left + 1; j < right; j += 3) put(img, static_cast<int>(y), j, {0.85, 0.85, 0.85});
  }
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& col = kPalette[n % kPalette.size()];
    const auto& v = series[n].values;
    auto px = [&](std::size_t k) { return left + (right - left) * static_cast<double>(k) / x_max; };
    auto py = [&](double y) { return bottom - (bottom - top) * std::clamp(y / y_max, 0.0, 1.0); };
    for (std::size_t k = 1; k < v.size(); ++k) segment(img, py(v[k - 1]), px(k - 1), py(v[k]), px(k), col);
    // legend swatch
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 14; ++j) put(img, top + 4 + static_cast<int>(n) * 8 + i, right - 20 + j, col);
    }
  }
  return img;
}

}  // namespace dreamseg
