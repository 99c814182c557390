#pragma once

// Slow reference implementations, kept deliberately independent of the
// optimized kernels they are checked against.

#include <lfsafa/tensor.hpp>

namespace oracle {

// Direct 6-loop same-padding stride-1 convolution.
// in [Cin,H,W], ker [Cout,Cin,k,k], bias [Cout] -> [Cout,H,W]
template <typename T>
lfsafa::Tensor<T> conv2d(const lfsafa::Tensor<T>& in, const lfsafa::Tensor<T>& ker,
                         const lfsafa::Tensor<T>& bias) {
  const int cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const int cout = ker.shape[0], k = ker.shape[2], p = k / 2;
  lfsafa::Tensor<T> out({cout, h, w});
  for (int oc = 0; oc < cout; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        T acc = bias.data[static_cast<size_t>(oc)];
        for (int ic = 0; ic < cin; ++ic) {
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
              const int sy = y + dy - p, sx = x + dx - p;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += ker.data[static_cast<size_t>(((oc * cin + ic) * k + dy) * k + dx)] *
                     in.data[static_cast<size_t>((ic * h + sy) * w + sx)];
            }
          }
        }
        out.data[static_cast<size_t>((oc * h + y) * w + x)] = acc;
      }
    }
  }
  return out;
}

inline double max_abs_diff(const lfsafa::Tensor<float>& a, const lfsafa::Tensor<float>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
    if (d > m) m = d;
  }
  return m;
}

inline double max_abs_diff(const lfsafa::Tensor<double>& a, const lfsafa::Tensor<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a.data[i] - b.data[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace oracle
