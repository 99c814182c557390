#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "lfsafa/common.hpp"
#include "lfsafa/conv.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa {

// 2D convolution weights: kernel [C_out, C_in, k, k], bias [C_out].
template <typename T>
struct ConvParams {
  Tensor<T> kernel;
  Tensor<T> bias;

  int out_channels() const { return kernel.dim(0); }
  int in_channels() const { return kernel.dim(1); }
  int ksize() const { return kernel.dim(2); }

  void validate() const {
    require(kernel.rank() == 4 && kernel.dim(2) == kernel.dim(3), ErrorKind::ShapeMismatch,
            "conv kernel must be [C_out,C_in,k,k], got " + shape_str(kernel.shape));
    require(kernel.dim(2) % 2 == 1, ErrorKind::InvalidArgument,
            "kernel size must be odd for same-padding, got " + std::to_string(kernel.dim(2)));
    require(bias.rank() == 1 && bias.dim(0) == kernel.dim(0), ErrorKind::ShapeMismatch,
            "conv bias must be [C_out]=" + std::to_string(kernel.dim(0)) + ", got " +
                shape_str(bias.shape));
  }

  template <typename U>
  ConvParams<U> cast() const {
    return ConvParams<U>{kernel.template cast<U>(), bias.template cast<U>()};
  }
};

// Fan-in uniform init in +-sqrt(1/(C_in*k*k)); biases zero.
template <typename T>
ConvParams<T> make_conv(Rng& rng, int cin, int cout, int k) {
  double bound = std::sqrt(1.0 / (static_cast<double>(cin) * k * k));
  ConvParams<T> p;
  p.kernel = random_uniform<T>(rng, {cout, cin, k, k}, static_cast<T>(-bound),
                               static_cast<T>(bound));
  p.bias = Tensor<T>({cout});
  return p;
}

template <typename T>
ConvParams<T> zero_conv(int cin, int cout, int k) {
  return ConvParams<T>{Tensor<T>({cout, cin, k, k}), Tensor<T>({cout})};
}

namespace ops {

template <typename T>
void check_chw(const Tensor<T>& x, const std::string& ctx) {
  require(x.rank() == 3, ErrorKind::ShapeMismatch, ctx + ": expected [C,H,W], got " + shape_str(x.shape));
  require(x.dim(1) >= 1 && x.dim(2) >= 1, ErrorKind::InvalidArgument,
          ctx + ": spatial dims must be >= 1, got " + shape_str(x.shape));
}

// Same-padding stride-1 conv, output [C_out,H,W].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvParams<T>& p) {
  check_chw(x, "conv2d");
  p.validate();
  require(x.dim(0) == p.in_channels(), ErrorKind::ShapeMismatch,
          "conv2d: input has " + std::to_string(x.dim(0)) + " channels, kernel expects " +
              std::to_string(p.in_channels()));
  Tensor<T> out({p.out_channels(), x.dim(1), x.dim(2)});
  detail::conv2d_same(x.ptr(), x.dim(0), x.dim(1), x.dim(2), p.kernel.ptr(), p.out_channels(),
                      p.ksize(), p.bias.ptr(), out.ptr());
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out = a;
  for (T& v : out.data) v *= s;
  return out;
}

// Channel blocks appear in argument order.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> xs) {
  require(!xs.empty(), ErrorKind::InvalidArgument, "concat_channels: empty input list");
  int h = xs[0]->dim(1), w = xs[0]->dim(2), c = 0;
  for (const Tensor<T>* x : xs) {
    check_chw(*x, "concat_channels");
    require(x->dim(1) == h && x->dim(2) == w, ErrorKind::ShapeMismatch,
            "concat_channels: spatial dims differ, " + shape_str(xs[0]->shape) + " vs " +
                shape_str(x->shape));
    c += x->dim(0);
  }
  Tensor<T> out({c, h, w});
  T* dst = out.ptr();
  for (const Tensor<T>* x : xs) {
    std::copy(x->data.begin(), x->data.end(), dst);
    dst += x->size();
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  std::vector<const Tensor<T>*> ptrs;
  ptrs.reserve(xs.size());
  for (const Tensor<T>& x : xs) ptrs.push_back(&x);
  return concat_channels<T>(std::span<const Tensor<T>* const>(ptrs));
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  check_chw(x, "pixel_shuffle");
  require(r >= 1, ErrorKind::InvalidArgument, "pixel_shuffle: r must be >= 1");
  require(x.dim(0) % (r * r) == 0, ErrorKind::ShapeMismatch,
          "pixel_shuffle: " + std::to_string(x.dim(0)) + " channels not divisible by r^2=" +
              std::to_string(r * r));
  Tensor<T> out({x.dim(0) / (r * r), x.dim(1) * r, x.dim(2) * r});
  detail::pixel_shuffle_fwd(x.ptr(), out.dim(0), r, x.dim(1), x.dim(2), out.ptr());
  return out;
}

// Inverse rearrangement of pixel_shuffle.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  check_chw(x, "pixel_unshuffle");
  require(r >= 1 && x.dim(1) % r == 0 && x.dim(2) % r == 0, ErrorKind::ShapeMismatch,
          "pixel_unshuffle: spatial dims " + shape_str(x.shape) + " not divisible by r=" +
              std::to_string(r));
  Tensor<T> out({x.dim(0) * r * r, x.dim(1) / r, x.dim(2) / r});
  // reverse mapping of pixel_shuffle_fwd
  for (int c = 0; c < x.dim(0); ++c)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx)
        for (int y = 0; y < out.dim(1); ++y)
          for (int xx = 0; xx < out.dim(2); ++xx)
            out.at3(c * r * r + dy * r + dx, y, xx) = x.at3(c, y * r + dy, xx * r + dx);
  return out;
}

// output = input + conv2(relu(conv1(input))); both convs C->C.
template <typename T>
Tensor<T> residual_block(const Tensor<T>& x, const ConvParams<T>& c1, const ConvParams<T>& c2) {
  require(c1.in_channels() == x.dim(0) && c1.out_channels() == x.dim(0) &&
              c2.in_channels() == x.dim(0) && c2.out_channels() == x.dim(0),
          ErrorKind::ShapeMismatch,
          "residual_block: convs must be " + std::to_string(x.dim(0)) + "->" +
              std::to_string(x.dim(0)) + ", got " + std::to_string(c1.in_channels()) + "->" +
              std::to_string(c1.out_channels()) + " and " + std::to_string(c2.in_channels()) +
              "->" + std::to_string(c2.out_channels()));
  return add(x, conv2d(relu(conv2d(x, c1)), c2));
}

// Mean over all elements of |a-b|.
template <typename T>
T l1(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "l1");
  require(pred.size() > 0, ErrorKind::InvalidArgument, "l1: empty tensors");
  double s = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    s += std::abs(static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]));
  return static_cast<T>(s / static_cast<double>(pred.size()));
}

template <typename T>
T sum(const Tensor<T>& x) {
  T s = T(0);
  for (const T& v : x.data) s += v;
  return s;
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.data) v = v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
  return out;
}

}  // namespace ops
}  // namespace lfsafa
