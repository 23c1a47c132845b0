#pragma once

#include <stdexcept>
#include <string>

#include "dreamseg/tensor.hpp"

namespace dreamseg {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PngInfo {
  int height = 0;
  int width = 0;
  int channels = 0;  // as stored: 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
};

/// Reads only the header.
PngInfo probe_png(const std::string& path);

/// 8-bit PNG I/O. Gray, gray+alpha, RGB and RGBA inputs are accepted; alpha
/// channels are dropped.
RasterImage read_rgb_png(const std::string& path);
void write_rgb_png(const std::string& path, const RasterImage& image);

/// Single-channel plane stored as round(value * 255).
Plane read_gray_png(const std::string& path);
void write_gray_png(const std::string& path, const Plane& plane);

/// Binary mask: 0 = background, 255 = region (reads any value >= 128 as region).
BinaryMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const BinaryMask& mask);

}  // namespace dreamseg
