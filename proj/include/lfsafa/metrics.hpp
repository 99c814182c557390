#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "color.hpp"
#include "lightfield.hpp"
#include "sampling.hpp"

namespace lfsafa {

// round to the 8-bit lattice, matching what a PNG round trip would do
template <typename T>
Tensor<T> quantize_8bit(const Tensor<T>& img) {
  Tensor<T> out(img.shape);
  for (size_t i = 0; i < img.size(); ++i) {
    double v = std::clamp(static_cast<double>(img.data[i]), 0.0, 1.0);
    out.data[i] = static_cast<T>(std::lround(v * 255.0) / 255.0);
  }
  return out;
}

template <typename T>
double psnr(const Tensor<T>& ref, const Tensor<T>& test) {
  require_same_shape(ref, test, "psnr");
  double se = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(ref.data[i]) - static_cast<double>(test.data[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline const std::vector<double>& ssim_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w(11 * 11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 11; ++x) {
        const double dy = y - 5, dx = x - 5;
        w[static_cast<size_t>(y * 11 + x)] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
        sum += w[static_cast<size_t>(y * 11 + x)];
      }
    for (double& v : w) v /= sum;
    return w;
  }();
  return win;
}

}  // namespace detail

// mean SSIM over all positions where the 11x11 window fits entirely
template <typename T>
double ssim(const Tensor<T>& ref, const Tensor<T>& test) {
  require_same_shape(ref, test, "ssim");
  require(ref.rank() == 3 && ref.dim(0) == 1, ErrorKind::ShapeMismatch,
          "ssim expects [1,H,W], got " + shape_str(ref.shape));
  // The metric is symmetric by definition; canonicalizing the argument order
  // makes the floating-point evaluation bitwise symmetric too, independent of
  // how the compiler contracts the window arithmetic.
  if (std::lexicographical_compare(test.data.begin(), test.data.end(), ref.data.begin(),
                                   ref.data.end()))
    return ssim(test, ref);
  const int h = ref.dim(1), w = ref.dim(2);
  require(h >= 11 && w >= 11, ErrorKind::ShapeMismatch,
          "ssim needs at least 11x11 pixels, got " + std::to_string(h) + "x" + std::to_string(w));
  const std::vector<double>& win = detail::ssim_window();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  int count = 0;
  for (int oy = 0; oy + 11 <= h; ++oy) {
    for (int ox = 0; ox + 11 <= w; ++ox) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
          const double g = win[static_cast<size_t>(y * 11 + x)];
          const double a = ref.at3(0, oy + y, ox + x);
          const double b = test.at3(0, oy + y, ox + x);
          mx += g * a;
          my += g * b;
          sxx += g * a * a;
          syy += g * b * b;
          sxy += g * a * b;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

struct EvalRow {
  SaiIndex idx;
  double psnr_db = 0.0;
  double ssim_val = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> per_view;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  int scale = 1;
  int border_crop = 0;
  bool quantized = false;

  std::string to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    auto db = [](double v) -> nlohmann::json {
      if (std::isinf(v)) return "identical";
      return v;
    };
    for (const EvalRow& r : per_view)
      rows.push_back({{"view", std::to_string(r.idx.u) + "_" + std::to_string(r.idx.v)},
                      {"psnr_db", db(r.psnr_db)},
                      {"ssim", r.ssim_val}});
    nlohmann::json j = {{"per_view", rows},        {"mean_psnr_db", db(mean_psnr)},
                        {"mean_ssim", mean_ssim},  {"scale", scale},
                        {"border_crop", border_crop}, {"quantized_8bit", quantized}};
    return j.dump(2);
  }

  std::string to_table() const {
    auto db = [](double v) {
      char buf[32];
      if (std::isinf(v)) return std::string("identical");
      std::snprintf(buf, sizeof buf, "%9.4f", v);
      return std::string(buf);
    };
    std::string out = "view      psnr_db      ssim\n";
    char buf[64];
    for (const EvalRow& r : per_view) {
      std::snprintf(buf, sizeof buf, "%d_%-6d %s  %8.4f\n", r.idx.u, r.idx.v,
                    db(r.psnr_db).c_str(), r.ssim_val);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "mean     %s  %8.4f\n", db(mean_psnr).c_str(), mean_ssim);
    out += buf;
    return out;
  }
};

// Y-channel metrics per view after trimming border_crop pixels from each side.
// border_crop < 0 selects the default of `scale` pixels.
template <typename T>
EvalReport evaluate_lf(const LightField<T>& sr, const LightField<T>& hr, int scale,
                       int border_crop = -1, bool quantize = false) {
  sr.validate();
  hr.validate();
  require(sr.a == hr.a, ErrorKind::ShapeMismatch,
          "evaluate_lf: angular resolutions differ, " + std::to_string(sr.a) + " vs " +
              std::to_string(hr.a));
  require(sr.views[0].shape == hr.views[0].shape, ErrorKind::ShapeMismatch,
          "evaluate_lf: view shapes differ, " + shape_str(sr.views[0].shape) + " vs " +
              shape_str(hr.views[0].shape));
  if (border_crop < 0) border_crop = scale;
  const int h = sr.height(), w = sr.width();
  require(h > 2 * border_crop && w > 2 * border_crop, ErrorKind::InvalidArgument,
          "evaluate_lf: border crop of " + std::to_string(border_crop) +
              " px leaves no pixels in " + std::to_string(h) + "x" + std::to_string(w));
  EvalReport rep;
  rep.scale = scale;
  rep.border_crop = border_crop;
  rep.quantized = quantize;
  double psum = 0.0, ssum = 0.0;
  for (int i = 0; i < sr.n(); ++i) {
    Tensor<T> a = luma(sr.views[static_cast<size_t>(i)]);
    Tensor<T> b = luma(hr.views[static_cast<size_t>(i)]);
    if (border_crop > 0) {
      a = crop(a, border_crop, border_crop, h - 2 * border_crop, w - 2 * border_crop);
      b = crop(b, border_crop, border_crop, h - 2 * border_crop, w - 2 * border_crop);
    }
    if (quantize) {
      a = quantize_8bit(a);
      b = quantize_8bit(b);
    }
    EvalRow row;
    row.idx = SaiIndex::from_flat(i, sr.a);
    row.psnr_db = psnr(b, a);
    row.ssim_val = ssim(b, a);
    rep.per_view.push_back(row);
    psum += row.psnr_db;
    ssum += row.ssim_val;
  }
  rep.mean_psnr = psum / sr.n();
  rep.mean_ssim = ssum / sr.n();
  return rep;
}

}  // namespace lfsafa
