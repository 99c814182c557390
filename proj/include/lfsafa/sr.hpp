#pragma once

#include <vector>

#include "adaptation.hpp"
#include "backbone.hpp"
#include "color.hpp"
#include "lightfield.hpp"
#include "resize.hpp"

namespace lfsafa {

template <typename T>
LightField<T> bicubic_upscale_lf(const LightField<T>& lf, int scale) {
  return lf_map(lf, [&](const Tensor<T>& v) {
    return bicubic_resize(v, v.dim(1) * scale, v.dim(2) * scale);
  });
}

// Runs the net on luminance. RGB inputs are split into YCbCr: the net
// reconstructs Y, chroma rides up on bicubic. Pass adapt = nullptr for the
// plain per-view backbone.
template <typename T>
LightField<T> super_resolve_lf(const LightField<T>& lf, const BackboneParams<T>& bb,
                               const AdaptationParams<T>* adapt) {
  lf.validate();
  bb.validate();
  require(bb.img_channels() == 1, ErrorKind::InvalidArgument,
          "super_resolve_lf drives a luminance backbone, this one takes " +
              std::to_string(bb.img_channels()) + " channels");
  if (adapt) {
    adapt->validate();
    require(adapt->a == lf.a, ErrorKind::ShapeMismatch,
            "adaptation was trained for a=" + std::to_string(adapt->a) +
                ", light field has a=" + std::to_string(lf.a));
    require(adapt->feat_channels() == bb.width(), ErrorKind::ShapeMismatch,
            "adaptation expects " + std::to_string(adapt->feat_channels()) +
                " feature channels, backbone produces " + std::to_string(bb.width()));
  }
  const bool rgb = lf.channels() == 3;
  require(rgb || lf.channels() == 1, ErrorKind::InvalidArgument,
          "light field must be RGB or single-channel, has " + std::to_string(lf.channels()));
  const int n = lf.n(), s = bb.scale;

  std::vector<Tensor<T>> ycc(static_cast<size_t>(n));
  std::vector<Tensor<T>> feats(static_cast<size_t>(n));
  parallel_for(n, [&](int i) {
    const Tensor<T>& v = lf.views[static_cast<size_t>(i)];
    Tensor<T> y;
    if (rgb) {
      ycc[static_cast<size_t>(i)] = rgb_to_ycbcr(v);
      y = Tensor<T>({1, v.dim(1), v.dim(2)});
      for (int p = 0; p < v.dim(1) * v.dim(2); ++p)
        y.data[static_cast<size_t>(p)] = ycc[static_cast<size_t>(i)].data[static_cast<size_t>(p)];
    } else {
      y = v;
    }
    feats[static_cast<size_t>(i)] = extract_features(y, bb);
  });
  if (adapt) feats = adapt_all_views(std::span<const Tensor<T>>(feats), *adapt);

  LightField<T> out;
  out.a = lf.a;
  out.color = lf.color;
  out.views.resize(static_cast<size_t>(n));
  parallel_for(n, [&](int i) {
    Tensor<T> y = upscale(feats[static_cast<size_t>(i)], bb, s);
    if (!rgb) {
      out.views[static_cast<size_t>(i)] = std::move(y);
      return;
    }
    const int oh = y.dim(1), ow = y.dim(2);
    Tensor<T> up({3, oh, ow});
    Tensor<T> cbcr = bicubic_resize(ycc[static_cast<size_t>(i)], oh, ow);
    const size_t plane = static_cast<size_t>(oh) * ow;
    for (size_t p = 0; p < plane; ++p) {
      up.data[p] = y.data[p];
      up.data[plane + p] = cbcr.data[plane + p];
      up.data[2 * plane + p] = cbcr.data[2 * plane + p];
    }
    out.views[static_cast<size_t>(i)] = ycbcr_to_rgb(up);
  });
  return out;
}

}  // namespace lfsafa
