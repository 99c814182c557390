#pragma once

#include <png.h>

#include <bit>
#include <cstdio>
#include <string>
#include <vector>

#include "lfsafa/tensor.hpp"

namespace lfsafa {

// PNG in, planar [C,H,W] float in [0,1] out. Gray and RGB, 8 and 16 bit;
// palette and alpha variants are expanded/stripped on the way in.
inline Tensor<float> read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(ErrorKind::Io, "cannot open " + path + " for reading");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::Io, "libpng init failed for " + path);
  }
  Tensor<float> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::Format, path + " is not a readable PNG");
  }
  png_init_io(png, fp);
  int transforms = PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND;
  if constexpr (std::endian::native == std::endian::little) {
    transforms |= PNG_TRANSFORM_SWAP_ENDIAN;
  }
  png_read_png(png, info, transforms, nullptr);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int ch = png_get_channels(png, info);
  if ((ch != 1 && ch != 3) || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::Format, path + ": unsupported layout after expansion (" +
                                std::to_string(ch) + " channels, " + std::to_string(depth) +
                                " bit)");
  }
  png_bytepp rows = png_get_rows(png, info);
  out = Tensor<float>({ch, h, w});
  const float inv = 1.0f / static_cast<float>((1 << depth) - 1);
  for (int y = 0; y < h; ++y) {
    if (depth == 8) {
      const unsigned char* row = rows[y];
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c)
          out.at3(c, y, x) = static_cast<float>(row[x * ch + c]) * inv;
    } else {
      const uint16_t* row = reinterpret_cast<const uint16_t*>(rows[y]);
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c)
          out.at3(c, y, x) = static_cast<float>(row[x * ch + c]) * inv;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

// Clamps to [0,1], quantizes to the requested depth and writes gray or RGB.
inline void write_png(const std::string& path, const Tensor<float>& img, int bit_depth = 8) {
  require(img.rank() == 3 && (img.dim(0) == 1 || img.dim(0) == 3), ErrorKind::ShapeMismatch,
          "write_png expects [1,H,W] or [3,H,W], got " + shape_str(img.shape));
  require(bit_depth == 8 || bit_depth == 16, ErrorKind::InvalidArgument,
          "write_png: bit depth must be 8 or 16, got " + std::to_string(bit_depth));
  const int ch = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int bytes = bit_depth / 8;
  const double maxval = static_cast<double>((1 << bit_depth) - 1);

  std::vector<unsigned char> buf(static_cast<size_t>(h) * w * ch * bytes);
  std::vector<png_bytep> rowptr(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) {
    unsigned char* row = buf.data() + static_cast<size_t>(y) * w * ch * bytes;
    rowptr[static_cast<size_t>(y)] = row;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double v = static_cast<double>(img.at3(c, y, x));
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        const long q = std::lround(v * maxval);
        if (bit_depth == 8) {
          row[x * ch + c] = static_cast<unsigned char>(q);
        } else {
          reinterpret_cast<uint16_t*>(row)[x * ch + c] = static_cast<uint16_t>(q);
        }
      }
    }
  }

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::Io, "libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::Io, "libpng failed writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rowptr.data());
  int transforms = PNG_TRANSFORM_IDENTITY;
  if constexpr (std::endian::native == std::endian::little) {
    if (bit_depth == 16) transforms |= PNG_TRANSFORM_SWAP_ENDIAN;
  }
  png_write_png(png, info, transforms, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace lfsafa
