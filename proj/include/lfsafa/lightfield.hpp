#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lfsafa/color.hpp"
#include "lfsafa/image.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa {

enum class ColorSpace { RGB, YCbCr, Y };

// Angular position of a sub-aperture view; flat order is u major, v minor.
struct SaiIndex {
  int u = 0, v = 0;
  int flat(int a) const { return u * a + v; }
  static SaiIndex from_flat(int i, int a) { return SaiIndex{i / a, i % a}; }
};

// a x a grid of views with identical shape, values in [0,1] after decode.
template <typename T>
struct LightField {
  int a = 0;
  ColorSpace color = ColorSpace::RGB;
  std::vector<Tensor<T>> views;  // flat index u*a + v

  int n() const { return a * a; }
  Tensor<T>& view(int u, int v) { return views[static_cast<size_t>(u * a + v)]; }
  const Tensor<T>& view(int u, int v) const { return views[static_cast<size_t>(u * a + v)]; }
  int channels() const { return views.empty() ? 0 : views[0].dim(0); }
  int height() const { return views.empty() ? 0 : views[0].dim(1); }
  int width() const { return views.empty() ? 0 : views[0].dim(2); }

  void validate() const {
    require(a >= 1, ErrorKind::InvalidState, "light field angular resolution must be >= 1");
    require(static_cast<int>(views.size()) == a * a, ErrorKind::InvalidState,
            "light field holds " + std::to_string(views.size()) + " views, expected " +
                std::to_string(a * a));
    for (const Tensor<T>& v : views) {
      require(v.rank() == 3, ErrorKind::InvalidState, "view is not [C,H,W]");
      require(v.shape == views[0].shape, ErrorKind::InvalidState,
              "views disagree on shape: " + shape_str(v.shape) + " vs " +
                  shape_str(views[0].shape));
    }
  }
};

// view[u,v][y,x] = image[y*a + u, x*a + v]
template <typename T>
LightField<T> decode_macro_pixel(const Tensor<T>& img, int a) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "decode_macro_pixel expects [C,H,W], got " + shape_str(img.shape));
  require(a >= 1, ErrorKind::InvalidArgument, "angular resolution must be >= 1");
  const int c = img.dim(0), mh = img.dim(1), mw = img.dim(2);
  require(mh % a == 0 && mw % a == 0, ErrorKind::ShapeMismatch,
          "macro-pixel dims " + std::to_string(mh) + "x" + std::to_string(mw) +
              " are not divisible by a=" + std::to_string(a));
  const int h = mh / a, w = mw / a;
  LightField<T> lf;
  lf.a = a;
  lf.views.reserve(static_cast<size_t>(a) * a);
  for (int u = 0; u < a; ++u) {
    for (int v = 0; v < a; ++v) {
      Tensor<T> view({c, h, w});
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) view.at3(ch, y, x) = img.at3(ch, y * a + u, x * a + v);
      lf.views.push_back(std::move(view));
    }
  }
  return lf;
}

template <typename T>
Tensor<T> encode_macro_pixel(const LightField<T>& lf) {
  lf.validate();
  const int a = lf.a, c = lf.channels(), h = lf.height(), w = lf.width();
  Tensor<T> img({c, h * a, w * a});
  for (int u = 0; u < a; ++u) {
    for (int v = 0; v < a; ++v) {
      const Tensor<T>& view = lf.view(u, v);
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) img.at3(ch, y * a + u, x * a + v) = view.at3(ch, y, x);
    }
  }
  return img;
}

inline std::string view_filename(int u, int v) {
  return "view_" + std::to_string(u) + "_" + std::to_string(v) + ".png";
}

inline LightField<float> read_lf_dir(const std::string& dir, int a) {
  require(a >= 1, ErrorKind::InvalidArgument, "angular resolution must be >= 1");
  LightField<float> lf;
  lf.a = a;
  lf.views.reserve(static_cast<size_t>(a) * a);
  for (int u = 0; u < a; ++u) {
    for (int v = 0; v < a; ++v) {
      const std::string path = dir + "/" + view_filename(u, v);
      if (!std::filesystem::exists(path))
        fail(ErrorKind::Io, "missing view image " + path);
      lf.views.push_back(read_png(path));
      require(lf.views.back().shape == lf.views[0].shape, ErrorKind::Format,
              path + " has shape " + shape_str(lf.views.back().shape) +
                  " but earlier views have " + shape_str(lf.views[0].shape));
    }
  }
  return lf;
}

inline void write_lf_dir(const LightField<float>& lf, const std::string& dir,
                         int bit_depth = 8) {
  lf.validate();
  std::filesystem::create_directories(dir);
  for (int u = 0; u < lf.a; ++u)
    for (int v = 0; v < lf.a; ++v)
      write_png(dir + "/" + view_filename(u, v), lf.view(u, v), bit_depth);
}

// Directory of view_{u}_{v}.png files, or a single macro-pixel PNG.
inline LightField<float> decode_lf(const std::string& path, int a) {
  if (std::filesystem::is_directory(path)) return read_lf_dir(path, a);
  return decode_macro_pixel(read_png(path), a);
}

// Trims H and W down to the nearest multiple of m (SR convention before
// integer-factor degradation).
template <typename T>
Tensor<T> modcrop(const Tensor<T>& img, int m) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "modcrop expects [C,H,W], got " + shape_str(img.shape));
  require(m >= 1, ErrorKind::InvalidArgument, "modcrop: modulus must be >= 1");
  const int c = img.dim(0), h = img.dim(1) - img.dim(1) % m, w = img.dim(2) - img.dim(2) % m;
  require(h >= 1 && w >= 1, ErrorKind::ShapeMismatch,
          "modcrop to multiple of " + std::to_string(m) + " empties " + shape_str(img.shape));
  if (h == img.dim(1) && w == img.dim(2)) return img;
  Tensor<T> out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(ch, y, x) = img.at3(ch, y, x);
  return out;
}

template <typename T>
LightField<T> lf_map(const LightField<T>& lf, auto&& fn) {
  LightField<T> out;
  out.a = lf.a;
  out.color = lf.color;
  out.views.reserve(lf.views.size());
  for (const Tensor<T>& v : lf.views) out.views.push_back(fn(v));
  return out;
}

template <typename T>
LightField<T> lf_to_y(const LightField<T>& lf) {
  LightField<T> out = lf_map(lf, [](const Tensor<T>& v) { return luma(v); });
  out.color = ColorSpace::Y;
  return out;
}

}  // namespace lfsafa
