#pragma once

#include <array>

#include "lfsafa/tensor.hpp"

namespace lfsafa {
namespace detail {

// BT.601 studio-swing matrix over [0,1] inputs: y' = (M·255·rgb + o)/255.
// The inverse is computed from the forward matrix so the pair is exact by
// construction instead of relying on separately rounded constants.
struct YccMatrix {
  std::array<double, 9> fwd, inv;
  std::array<double, 3> off;
};

inline const YccMatrix& ycc_matrix() {
  static const YccMatrix m = [] {
    YccMatrix r{};
    const double f[9] = {65.481, 128.553, 24.966,  -37.797, -74.203,
                         112.0,  112.0,   -93.786, -18.214};
    for (int i = 0; i < 9; ++i) r.fwd[static_cast<size_t>(i)] = f[i] / 255.0;
    r.off = {16.0 / 255.0, 128.0 / 255.0, 128.0 / 255.0};
    const auto& a = r.fwd;
    const double det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
                       a[2] * (a[3] * a[7] - a[4] * a[6]);
    const double cof[9] = {
        a[4] * a[8] - a[5] * a[7], a[2] * a[7] - a[1] * a[8], a[1] * a[5] - a[2] * a[4],
        a[5] * a[6] - a[3] * a[8], a[0] * a[8] - a[2] * a[6], a[2] * a[3] - a[0] * a[5],
        a[3] * a[7] - a[4] * a[6], a[1] * a[6] - a[0] * a[7], a[0] * a[4] - a[1] * a[3]};
    for (int i = 0; i < 9; ++i) r.inv[static_cast<size_t>(i)] = cof[i] / det;
    return r;
  }();
  return m;
}

}  // namespace detail

template <typename T>
Tensor<T> rgb_to_ycbcr(const Tensor<T>& rgb) {
  require(rgb.rank() == 3 && rgb.dim(0) == 3, ErrorKind::ShapeMismatch,
          "rgb_to_ycbcr expects [3,H,W], got " + shape_str(rgb.shape));
  const auto& m = detail::ycc_matrix();
  Tensor<T> out(rgb.shape);
  const size_t plane = static_cast<size_t>(rgb.dim(1)) * static_cast<size_t>(rgb.dim(2));
  for (size_t i = 0; i < plane; ++i) {
    const double r = rgb.data[i], g = rgb.data[plane + i], b = rgb.data[2 * plane + i];
    for (int c = 0; c < 3; ++c) {
      const size_t k = static_cast<size_t>(3 * c);
      out.data[static_cast<size_t>(c) * plane + i] = static_cast<T>(
          m.fwd[k] * r + m.fwd[k + 1] * g + m.fwd[k + 2] * b + m.off[static_cast<size_t>(c)]);
    }
  }
  return out;
}

template <typename T>
Tensor<T> ycbcr_to_rgb(const Tensor<T>& ycc) {
  require(ycc.rank() == 3 && ycc.dim(0) == 3, ErrorKind::ShapeMismatch,
          "ycbcr_to_rgb expects [3,H,W], got " + shape_str(ycc.shape));
  const auto& m = detail::ycc_matrix();
  Tensor<T> out(ycc.shape);
  const size_t plane = static_cast<size_t>(ycc.dim(1)) * static_cast<size_t>(ycc.dim(2));
  for (size_t i = 0; i < plane; ++i) {
    const double y = ycc.data[i] - m.off[0];
    const double cb = ycc.data[plane + i] - m.off[1];
    const double cr = ycc.data[2 * plane + i] - m.off[2];
    for (int c = 0; c < 3; ++c) {
      const size_t k = static_cast<size_t>(3 * c);
      out.data[static_cast<size_t>(c) * plane + i] =
          static_cast<T>(m.inv[k] * y + m.inv[k + 1] * cb + m.inv[k + 2] * cr);
    }
  }
  return out;
}

// Y plane of an RGB image; [1,H,W] input passes through unchanged.
template <typename T>
Tensor<T> luma(const Tensor<T>& img) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "luma expects [C,H,W], got " + shape_str(img.shape));
  if (img.dim(0) == 1) return img;
  require(img.dim(0) == 3, ErrorKind::ShapeMismatch,
          "luma expects 1 or 3 channels, got " + std::to_string(img.dim(0)));
  const auto& m = detail::ycc_matrix();
  Tensor<T> out({1, img.dim(1), img.dim(2)});
  const size_t plane = out.size();
  for (size_t i = 0; i < plane; ++i) {
    out.data[i] = static_cast<T>(m.fwd[0] * img.data[i] + m.fwd[1] * img.data[plane + i] +
                                 m.fwd[2] * img.data[2 * plane + i] + m.off[0]);
  }
  return out;
}

}  // namespace lfsafa
