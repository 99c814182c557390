#pragma once

#include "lfsafa/lightfield.hpp"

namespace lfsafa {

template <typename T>
Tensor<T> crop(const Tensor<T>& img, int y0, int x0, int h, int w) {
  require(img.rank() == 3, ErrorKind::ShapeMismatch,
          "crop expects [C,H,W], got " + shape_str(img.shape));
  require(y0 >= 0 && x0 >= 0 && h >= 1 && w >= 1 && y0 + h <= img.dim(1) &&
              x0 + w <= img.dim(2),
          ErrorKind::InvalidArgument,
          "crop window " + std::to_string(h) + "x" + std::to_string(w) + "+" +
              std::to_string(y0) + "+" + std::to_string(x0) + " leaves " +
              shape_str(img.shape));
  Tensor<T> out({img.dim(0), h, w});
  for (int c = 0; c < img.dim(0); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(c, y, x) = img.at3(c, y0 + y, x0 + x);
  return out;
}

template <typename T>
Tensor<T> hflip_t(const Tensor<T>& img) {
  Tensor<T> out(img.shape);
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(ch, y, x) = img.at3(ch, y, w - 1 - x);
  return out;
}

template <typename T>
Tensor<T> vflip_t(const Tensor<T>& img) {
  Tensor<T> out(img.shape);
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(ch, y, x) = img.at3(ch, h - 1 - y, x);
  return out;
}

// One counterclockwise quarter turn; [C,H,W] -> [C,W,H].
template <typename T>
Tensor<T> rot90_t(const Tensor<T>& img) {
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor<T> out({c, w, h});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < w; ++y)
      for (int x = 0; x < h; ++x) out.at3(ch, y, x) = img.at3(ch, x, w - 1 - y);
  return out;
}

// Spatial transforms must hit the angular grid too, or parallax breaks: the
// grid-of-views is transformed by the very same index formula as each view's
// pixels. See the augmentation consistency tests for the derivation fixture.
template <typename T>
LightField<T> hflip_lf(const LightField<T>& lf) {
  LightField<T> out;
  out.a = lf.a;
  out.color = lf.color;
  out.views.resize(lf.views.size());
  for (int u = 0; u < lf.a; ++u)
    for (int v = 0; v < lf.a; ++v)
      out.views[static_cast<size_t>(u * lf.a + v)] = hflip_t(lf.view(u, lf.a - 1 - v));
  return out;
}

template <typename T>
LightField<T> vflip_lf(const LightField<T>& lf) {
  LightField<T> out;
  out.a = lf.a;
  out.color = lf.color;
  out.views.resize(lf.views.size());
  for (int u = 0; u < lf.a; ++u)
    for (int v = 0; v < lf.a; ++v)
      out.views[static_cast<size_t>(u * lf.a + v)] = vflip_t(lf.view(lf.a - 1 - u, v));
  return out;
}

template <typename T>
LightField<T> rot90_lf(const LightField<T>& lf) {
  LightField<T> out;
  out.a = lf.a;
  out.color = lf.color;
  out.views.resize(lf.views.size());
  for (int u = 0; u < lf.a; ++u)
    for (int v = 0; v < lf.a; ++v)
      out.views[static_cast<size_t>(u * lf.a + v)] = rot90_t(lf.view(v, lf.a - 1 - u));
  return out;
}

template <typename T>
LightField<T> augment_lf(const LightField<T>& lf, int rot_k, bool hflip, bool vflip) {
  require(rot_k >= 0 && rot_k <= 3, ErrorKind::InvalidArgument,
          "rot_k must be in 0..3, got " + std::to_string(rot_k));
  if (rot_k % 2 == 1)
    require(lf.height() == lf.width(), ErrorKind::InvalidArgument,
            "odd quarter turns need square views, got " + std::to_string(lf.height()) + "x" +
                std::to_string(lf.width()));
  LightField<T> out = lf;
  for (int k = 0; k < rot_k; ++k) out = rot90_lf(out);
  if (hflip) out = hflip_lf(out);
  if (vflip) out = vflip_lf(out);
  return out;
}

// Aligned LR/HR patch pair; the HR window sits at scale times the LR offset.
template <typename T>
struct PatchPair {
  LightField<T> lr, hr;
  int scale = 1;
};

template <typename T>
PatchPair<T> sample_patch(const LightField<T>& lr, const LightField<T>& hr, int p, int scale,
                          Rng& rng) {
  lr.validate();
  hr.validate();
  require(scale >= 1, ErrorKind::InvalidArgument, "scale must be >= 1");
  require(lr.a == hr.a, ErrorKind::ShapeMismatch,
          "angular resolution mismatch: lr a=" + std::to_string(lr.a) + ", hr a=" +
              std::to_string(hr.a));
  require(hr.height() == scale * lr.height() && hr.width() == scale * lr.width(),
          ErrorKind::ShapeMismatch,
          "hr dims " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
              " are not " + std::to_string(scale) + "x the lr dims");
  require(p >= 1 && p <= lr.height() && p <= lr.width(), ErrorKind::InvalidArgument,
          "patch " + std::to_string(p) + " exceeds lr views of " +
              std::to_string(lr.height()) + "x" + std::to_string(lr.width()));

  const int oy = rng.uniform_int(lr.height() - p + 1);
  const int ox = rng.uniform_int(lr.width() - p + 1);
  PatchPair<T> pair;
  pair.scale = scale;
  pair.lr = lf_map(lr, [&](const Tensor<T>& v) { return crop(v, oy, ox, p, p); });
  pair.hr = lf_map(hr, [&](const Tensor<T>& v) {
    return crop(v, scale * oy, scale * ox, scale * p, scale * p);
  });
  return pair;
}

template <typename T>
PatchPair<T> augment(const PatchPair<T>& pair, int rot_k, bool hflip, bool vflip) {
  PatchPair<T> out;
  out.scale = pair.scale;
  out.lr = augment_lf(pair.lr, rot_k, hflip, vflip);
  out.hr = augment_lf(pair.hr, rot_k, hflip, vflip);
  return out;
}

template <typename T>
PatchPair<T> random_augment(const PatchPair<T>& pair, Rng& rng) {
  const bool square = pair.lr.height() == pair.lr.width();
  const int rot_k = square ? rng.uniform_int(4) : 0;
  return augment(pair, rot_k, rng.coin(), rng.coin());
}

}  // namespace lfsafa
