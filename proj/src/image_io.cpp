#include "dreamseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace dreamseg {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct Decoded {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3 after normalization
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::string& path, bool want_rgb) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ImageIoError("cannot open image '" + path + "'");
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw ImageIoError("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("libpng initialization failed");
  }
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("corrupt PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  const bool is_gray = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA);
  if (want_rgb && is_gray) png_set_gray_to_rgb(png);
  if (!want_rgb && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  out.height = static_cast<int>(png_get_image_height(png, info));
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int i = 0; i < out.height; ++i) rows[i] = out.bytes.data() + stride * i;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  if (out.channels != (want_rgb ? 3 : 1)) throw ImageIoError("unsupported PNG layout in '" + path + "'");
  return out;
}

void encode(const std::string& path, int height, int width, int channels, const std::vector<std::uint8_t>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw ImageIoError("cannot write image '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("libpng initialization failed");
  }
  std::vector<png_const_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("failed writing PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int i = 0; i < height; ++i) rows[i] = bytes.data() + static_cast<std::size_t>(i) * width * channels;
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

PngInfo probe_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ImageIoError("cannot open image '" + path + "'");
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw ImageIoError("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("corrupt PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  PngInfo out;
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.width = static_cast<int>(png_get_image_width(png, info));
  const png_byte color = png_get_color_type(png, info);
  switch (color) {
    case PNG_COLOR_TYPE_GRAY: out.channels = 1; break;
    case PNG_COLOR_TYPE_GRAY_ALPHA: out.channels = 2; break;
    case PNG_COLOR_TYPE_RGB_ALPHA: out.channels = 4; break;
    default: out.channels = 3; break;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

RasterImage read_rgb_png(const std::string& path) {
  const Decoded d = decode(path, true);
  Tensor3 t(d.height, d.width, 3);
  std::transform(d.bytes.begin(), d.bytes.end(), t.values.begin(), [](std::uint8_t b) { return b / 255.0; });
  return RasterImage(std::move(t));
}

void write_rgb_png(const std::string& path, const RasterImage& image) {
  std::vector<std::uint8_t> bytes(image.pixels().values.size());
  std::transform(image.pixels().values.begin(), image.pixels().values.end(), bytes.begin(), &to_byte);
  encode(path, image.height(), image.width(), 3, bytes);
}

Plane read_gray_png(const std::string& path) {
  const Decoded d = decode(path, false);
  Plane p(d.height, d.width);
  std::transform(d.bytes.begin(), d.bytes.end(), p.values.begin(), [](std::uint8_t b) { return b / 255.0; });
  return p;
}

void write_gray_png(const std::string& path, const Plane& plane) {
  std::vector<std::uint8_t> bytes(plane.values.size());
  std::transform(plane.values.begin(), plane.values.end(), bytes.begin(), &to_byte);
  encode(path, plane.height, plane.width, 1, bytes);
}

BinaryMask read_mask_png(const std::string& path) {
  const Decoded d = decode(path, false);
  BinaryMask m(d.height, d.width);
  std::transform(d.bytes.begin(), d.bytes.end(), m.values.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b >= 128 ? 1 : 0); });
  return m;
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.values.size());
  std::transform(mask.values.begin(), mask.values.end(), bytes.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  encode(path, mask.height, mask.width, 1, bytes);
}

}  // namespace dreamseg
