#pragma once

#include <cmath>
#include <vector>

#include "lfsafa/tensor.hpp"

namespace lfsafa {

// Keys cubic kernel, a = -0.5.
inline double cubic_kernel(double t) {
  const double x = std::abs(t);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

// Per-output-pixel source taps for one axis. When shrinking, the kernel is
// stretched by 1/scale so it acts as an antialiasing filter; out-of-range taps
// clamp to the edge and every weight row is normalized to sum to 1.
struct ResampleTable {
  int taps = 0;
  std::vector<int> idx;        // [out * taps]
  std::vector<double> weights; // [out * taps]
};

inline ResampleTable cubic_table(int in_size, int out_size) {
  require(in_size >= 1 && out_size >= 1, ErrorKind::InvalidArgument,
          "resize: sizes must be >= 1, got " + std::to_string(in_size) + " -> " +
              std::to_string(out_size));
  const double scale = static_cast<double>(out_size) / static_cast<double>(in_size);
  const double kscale = scale < 1.0 ? scale : 1.0;
  const double width = 4.0 / kscale;
  const int taps = static_cast<int>(std::ceil(width)) + 2;

  ResampleTable t;
  t.taps = taps;
  t.idx.resize(static_cast<size_t>(out_size) * taps);
  t.weights.resize(static_cast<size_t>(out_size) * taps);
  for (int u = 0; u < out_size; ++u) {
    const double x = (u + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(x - width / 2.0));
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
      const int src = left + 1 + j;
      const double w = kscale * cubic_kernel(kscale * (x - src));
      int clamped = src < 0 ? 0 : (src >= in_size ? in_size - 1 : src);
      t.idx[static_cast<size_t>(u) * taps + j] = clamped;
      t.weights[static_cast<size_t>(u) * taps + j] = w;
      sum += w;
    }
    for (int j = 0; j < taps; ++j) t.weights[static_cast<size_t>(u) * taps + j] /= sum;
  }
  return t;
}

namespace detail {

// One separable pass along the last (x) axis; rows stands for C*H.
template <typename T>
void resample_rows(const T* in, int rows, int in_w, const ResampleTable& t, int out_w, T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* src = in + static_cast<size_t>(r) * in_w;
    T* dst = out + static_cast<size_t>(r) * out_w;
    for (int u = 0; u < out_w; ++u) {
      const size_t base = static_cast<size_t>(u) * t.taps;
      double acc = 0.0;
      for (int j = 0; j < t.taps; ++j)
        acc += t.weights[base + j] * static_cast<double>(src[t.idx[base + j]]);
      dst[u] = static_cast<T>(acc);
    }
  }
}

}  // namespace detail

template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& img, int out_h, int out_w) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "bicubic_resize expects [C,H,W], got " + shape_str(img.shape));
  require(out_h >= 1 && out_w >= 1, ErrorKind::InvalidArgument,
          "bicubic_resize: target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
              " is degenerate");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  if (out_h == h && out_w == w) return img;

  // x pass then y pass; each axis uses its own weight table
  Tensor<T> mid({c, h, out_w});
  if (out_w == w) {
    mid = img;
  } else {
    detail::resample_rows(img.ptr(), c * h, w, cubic_table(w, out_w), out_w, mid.ptr());
  }
  if (out_h == h) return mid;

  const ResampleTable ty = cubic_table(h, out_h);
  Tensor<T> out({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch) {
    const T* plane = mid.ptr() + static_cast<size_t>(ch) * h * out_w;
    T* dst = out.ptr() + static_cast<size_t>(ch) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const size_t base = static_cast<size_t>(y) * ty.taps;
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int j = 0; j < ty.taps; ++j)
          acc += ty.weights[base + j] *
                 static_cast<double>(plane[static_cast<size_t>(ty.idx[base + j]) * out_w + x]);
        dst[static_cast<size_t>(y) * out_w + x] = static_cast<T>(acc);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> bicubic_scale(const Tensor<T>& img, double scale) {
  require(scale > 0.0, ErrorKind::InvalidArgument, "bicubic_scale: scale must be > 0");
  const int oh = static_cast<int>(std::llround(img.dim(1) * scale));
  const int ow = static_cast<int>(std::llround(img.dim(2) * scale));
  return bicubic_resize(img, oh, ow);
}

// Sub-pixel translation: out[y,x] samples the input at (y-dy, x-dx) with the
// plain 4-tap cubic kernel (no antialiasing) and edge clamping. Integer
// shifts reduce to exact copies because the kernel interpolates.
template <typename T>
Tensor<T> translate_bicubic(const Tensor<T>& img, double dy, double dx) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "translate_bicubic expects [C,H,W], got " + shape_str(img.shape));
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);

  auto axis_taps = [](int n, double d, std::vector<int>& idx, std::vector<double>& wt) {
    idx.resize(static_cast<size_t>(n) * 4);
    wt.resize(static_cast<size_t>(n) * 4);
    for (int i = 0; i < n; ++i) {
      const double s = i - d;
      const double base = std::floor(s);
      const double f = s - base;
      for (int j = 0; j < 4; ++j) {
        int src = static_cast<int>(base) - 1 + j;
        src = src < 0 ? 0 : (src >= n ? n - 1 : src);
        idx[static_cast<size_t>(i) * 4 + j] = src;
        wt[static_cast<size_t>(i) * 4 + j] = cubic_kernel(f + 1.0 - j);
      }
    }
  };
  std::vector<int> iy, ix;
  std::vector<double> wy, wx;
  axis_taps(h, dy, iy, wy);
  axis_taps(w, dx, ix, wx);

  Tensor<T> out(img.shape);
  for (int ch = 0; ch < c; ++ch) {
    const T* plane = img.ptr() + static_cast<size_t>(ch) * h * w;
    T* dst = out.ptr() + static_cast<size_t>(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
          const double wyy = wy[static_cast<size_t>(y) * 4 + j];
          if (wyy == 0.0) continue;
          const T* row = plane + static_cast<size_t>(iy[static_cast<size_t>(y) * 4 + j]) * w;
          double rowacc = 0.0;
          for (int k = 0; k < 4; ++k)
            rowacc += wx[static_cast<size_t>(x) * 4 + k] *
                      static_cast<double>(row[ix[static_cast<size_t>(x) * 4 + k]]);
          acc += wyy * rowacc;
        }
        dst[static_cast<size_t>(y) * w + x] = static_cast<T>(acc);
      }
    }
  }
  return out;
}

}  // namespace lfsafa
