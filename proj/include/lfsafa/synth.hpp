#pragma once

#include <cmath>

#include "lfsafa/lightfield.hpp"
#include "lfsafa/resize.hpp"

namespace lfsafa {

// Procedural test image with deliberate high-frequency content: a smooth
// background, hard-edged rectangles and disks, and oriented gratings. Meant
// to give super-resolution something to recover.
inline Tensor<float> make_procedural_image(Rng& rng, int h, int w, int channels = 1) {
  require(h >= 8 && w >= 8, ErrorKind::InvalidArgument,
          "procedural image needs at least 8x8, got " + std::to_string(h) + "x" +
              std::to_string(w));
  require(channels == 1 || channels == 3, ErrorKind::InvalidArgument,
          "procedural image supports 1 or 3 channels");
  Tensor<float> base({1, h, w});

  const double ky = rng.uniform(1.5, 3.5) * 2.0 * 3.14159265358979 / h;
  const double kx = rng.uniform(1.5, 3.5) * 2.0 * 3.14159265358979 / w;
  const double ph = rng.uniform(0.0, 6.28);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      base.at3(0, y, x) = static_cast<float>(0.45 + 0.2 * std::sin(ky * y + kx * x + ph));

  const int nshapes = 6 + rng.uniform_int(6);
  for (int s = 0; s < nshapes; ++s) {
    const float val = static_cast<float>(rng.uniform(0.05, 0.95));
    const int cy = rng.uniform_int(h), cx = rng.uniform_int(w);
    const int ry = 2 + rng.uniform_int(h / 4), rx = 2 + rng.uniform_int(w / 4);
    const bool disk = rng.coin();
    for (int y = std::max(0, cy - ry); y < std::min(h, cy + ry); ++y) {
      for (int x = std::max(0, cx - rx); x < std::min(w, cx + rx); ++x) {
        if (disk) {
          const double dy = static_cast<double>(y - cy) / ry, dx = static_cast<double>(x - cx) / rx;
          if (dy * dy + dx * dx > 1.0) continue;
        }
        base.at3(0, y, x) = val;
      }
    }
  }

  // a couple of sharp gratings over random strips
  const int ngrat = 2 + rng.uniform_int(2);
  for (int g = 0; g < ngrat; ++g) {
    const double freq = rng.uniform(0.6, 1.4);  // radians per pixel, near Nyquist/2
    const double ang = rng.uniform(0.0, 3.14159265358979);
    const double cs = std::cos(ang), sn = std::sin(ang);
    const int y0 = rng.uniform_int(h / 2), x0 = rng.uniform_int(w / 2);
    const int gh = h / 4 + rng.uniform_int(h / 4), gw = w / 4 + rng.uniform_int(w / 4);
    const float amp = static_cast<float>(rng.uniform(0.1, 0.25));
    for (int y = y0; y < std::min(h, y0 + gh); ++y)
      for (int x = x0; x < std::min(w, x0 + gw); ++x)
        base.at3(0, y, x) += amp * static_cast<float>(std::sin(freq * (cs * x + sn * y)));
  }

  for (float& v : base.data) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  if (channels == 1) return base;

  // channel-correlated color: same structure with per-channel gain and lift
  Tensor<float> rgb({3, h, w});
  for (int c = 0; c < 3; ++c) {
    const float gain = static_cast<float>(rng.uniform(0.7, 1.0));
    const float lift = static_cast<float>(rng.uniform(0.0, 0.15));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = gain * base.at3(0, y, x) + lift;
        rgb.at3(c, y, x) = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
      }
  }
  return rgb;
}

// Builds an a x a light field from one base image by translating it per view:
// view (u,v) shows the base shifted by disparity*(u-c, v-c), c = (a-1)/2,
// then every view is cropped to the same window that all shifts keep valid.
template <typename T>
LightField<T> synth_lf(const Tensor<T>& base, int a, double disparity_px) {
  require(base.rank() == 3, ErrorKind::ShapeMismatch,
          "synth_lf expects [C,H,W], got " + shape_str(base.shape));
  require(a >= 1, ErrorKind::InvalidArgument, "angular resolution must be >= 1");
  const int h = base.dim(1), w = base.dim(2);
  const double c = (a - 1) / 2.0;
  // widest shift plus cubic support, rounded up
  const int margin = static_cast<int>(std::ceil(std::abs(disparity_px) * c)) + 2;
  const int ch = h - 2 * margin, cw = w - 2 * margin;
  require(ch >= 1 && cw >= 1, ErrorKind::InvalidArgument,
          "synth_lf: disparity " + std::to_string(disparity_px) + " at a=" + std::to_string(a) +
              " leaves no valid crop of " + std::to_string(h) + "x" + std::to_string(w));

  LightField<T> lf;
  lf.a = a;
  lf.color = base.dim(0) == 3 ? ColorSpace::RGB : ColorSpace::Y;
  lf.views.reserve(static_cast<size_t>(a) * a);
  for (int u = 0; u < a; ++u) {
    for (int v = 0; v < a; ++v) {
      const double dy = disparity_px * (u - c), dx = disparity_px * (v - c);
      Tensor<T> shifted = translate_bicubic(base, dy, dx);
      Tensor<T> view({base.dim(0), ch, cw});
      for (int cc = 0; cc < base.dim(0); ++cc)
        for (int y = 0; y < ch; ++y)
          for (int x = 0; x < cw; ++x)
            view.at3(cc, y, x) = shifted.at3(cc, y + margin, x + margin);
      lf.views.push_back(std::move(view));
    }
  }
  return lf;
}

}  // namespace lfsafa
