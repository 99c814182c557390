#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lfsafa/common.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa {

// One scalar evaluation of the function under test. guard is a hash of the
// piecewise-linearity pattern of the evaluation (ReLU sign masks); central
// differences are only meaningful when both probe points share it.
struct GcEval {
  double value = 0.0;
  uint64_t guard = 0;
};

struct GcOptions {
  // 0 checks every coordinate; otherwise a deterministic sample of this size.
  int max_coords = 0;
  uint64_t seed = 0x5eedc0de;
  // eps shrink factor applied when a probe pair straddles a kink.
  double shrink = 8.0;
  int max_retries = 2;
};

struct GcReport {
  double max_rel_err = 0.0;
  int checked = 0;
  int skipped = 0;  // coordinates that straddled a kink at every tried eps
  size_t worst_coord = 0;
};

// Central differences (f(x+eps)-f(x-eps))/(2 eps) per coordinate against the
// supplied analytic gradient; relative error uses max(|a|,|b|,1e-8).
template <typename F>
GcReport gradient_check(F&& eval, const Tensor<double>& point, const Tensor<double>& analytic,
                        double eps, const GcOptions& opt = {}) {
  require(eps > 0, ErrorKind::InvalidArgument, "gradient_check: eps must be > 0");
  require(point.shape == analytic.shape, ErrorKind::ShapeMismatch,
          "gradient_check: analytic gradient shape " + shape_str(analytic.shape) +
              " does not match point " + shape_str(point.shape));
  std::vector<size_t> coords;
  const size_t n = point.size();
  if (opt.max_coords <= 0 || static_cast<size_t>(opt.max_coords) >= n) {
    coords.resize(n);
    for (size_t i = 0; i < n; ++i) coords[i] = i;
  } else {
    Rng rng(opt.seed);
    std::vector<size_t> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = i;
    for (int i = 0; i < opt.max_coords; ++i) {
      size_t j = static_cast<size_t>(i) + static_cast<size_t>(rng.uniform_int(static_cast<int>(n - static_cast<size_t>(i))));
      std::swap(all[static_cast<size_t>(i)], all[j]);
      coords.push_back(all[static_cast<size_t>(i)]);
    }
  }
  GcReport rep;
  Tensor<double> x = point;
  for (size_t c : coords) {
    const double orig = x.data[c];
    double fd = 0.0;
    bool ok = false;
    double e = eps;
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
      x.data[c] = orig + e;
      GcEval hi = eval(x);
      x.data[c] = orig - e;
      GcEval lo = eval(x);
      x.data[c] = orig;
      if (hi.guard == lo.guard) {
        fd = (hi.value - lo.value) / (2.0 * e);
        ok = true;
        break;
      }
      e /= opt.shrink;
    }
    if (!ok) {
      rep.skipped += 1;
      continue;
    }
    const double an = analytic.data[c];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    const double rel = std::abs(fd - an) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_coord = c;
    }
    rep.checked += 1;
  }
  return rep;
}

}  // namespace lfsafa
