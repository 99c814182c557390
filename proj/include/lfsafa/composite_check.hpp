#pragma once

#include <string>
#include <vector>

#include "adaptation.hpp"
#include "backbone.hpp"
#include "gradcheck.hpp"

namespace lfsafa {

// Double-precision fixture for finite-difference checks of the full
// feature -> adaptation -> upscale pipeline.
struct CompositeFixture {
  BackboneParams<double> bb;
  AdaptationParams<double> ad;
  std::vector<Tensor<double>> imgs;
  std::vector<Tensor<double>> targets;
};

inline CompositeFixture make_composite_fixture(uint64_t seed, int a = 2, int hw = 8) {
  Rng rng(seed);
  CompositeFixture f;
  f.bb = make_backbone<double>(rng, 2, 1, 6, 1);
  f.ad = make_adaptation<double>(rng, a, 6, 4, 3);
  // a zero process conv would hide the fusion path from the check
  f.ad.fusion.process = make_conv<double>(rng, 6, 6, 3);
  for (int i = 0; i < a * a; ++i) {
    f.imgs.push_back(random_uniform<double>(rng, {1, hw, hw}, 0.0, 1.0));
    f.targets.push_back(random_uniform<double>(rng, {1, 2 * hw, 2 * hw}, 0.0, 1.0));
  }
  return f;
}

namespace detail {

// L1 of the composite pipeline against the fixture targets; every parameter
// and input registers as trainable so each slot's gradient is on the tape.
inline typename Tape<double>::Var composite_loss(Tape<double>& tape, CompositeFixture& f,
                                                 std::vector<ParamRef<double>>* refs,
                                                 std::vector<typename Tape<double>::Var>* leaves) {
  BackboneVars<double> bvars = register_backbone(tape, f.bb, refs);
  AdaptationVars<double> avars = register_adaptation(tape, f.ad, refs);
  std::vector<typename Tape<double>::Var> feats;
  for (const Tensor<double>& img : f.imgs) {
    auto x = tape.leaf(img, true);
    if (leaves) leaves->push_back(x);
    feats.push_back(tape_extract_features(tape, x, bvars));
  }
  std::vector<typename Tape<double>::Var> adapted =
      tape_adapt_all_views(tape, std::span<const typename Tape<double>::Var>(feats), avars);
  typename Tape<double>::Var total;
  for (size_t i = 0; i < adapted.size(); ++i) {
    auto out = tape_upscale(tape, adapted[i], bvars);
    auto l = tape.l1_loss(out, tape.constant(f.targets[i]));
    total = i == 0 ? l : tape.add(total, l);
  }
  return total;
}

}  // namespace detail

struct CompositeSlot {
  std::string name;
  GcReport report;
};

// Checks d loss / d tensor for the input views and every parameter tensor of
// the composite pipeline, sampling coords_per_slot coordinates of each.
inline std::vector<CompositeSlot> composite_gradient_check(uint64_t seed, int coords_per_slot = 16,
                                                           double eps = 1e-4, int a = 2,
                                                           int hw = 8) {
  CompositeFixture fix = make_composite_fixture(seed, a, hw);
  fix.bb = set_frozen(fix.bb, false);

  struct Slot {
    std::string name;
    Tensor<double>* tensor;
    Tensor<double> analytic;
  };
  std::vector<Slot> slots;
  for (size_t i = 0; i < fix.imgs.size(); ++i)
    slots.push_back({"input view " + std::to_string(i), &fix.imgs[i], {}});
  for_each_param(fix.bb, [&](const std::string& name, Tensor<double>& t) {
    slots.push_back({"backbone " + name, &t, {}});
  });
  for_each_param(fix.ad, [&](const std::string& name, Tensor<double>& t) {
    slots.push_back({"adaptation " + name, &t, {}});
  });

  {
    Tape<double> tape;
    std::vector<ParamRef<double>> refs;
    std::vector<typename Tape<double>::Var> leaves;
    tape.backward(detail::composite_loss(tape, fix, &refs, &leaves));
    for (Slot& s : slots) {
      typename Tape<double>::Var var;
      for (size_t i = 0; i < fix.imgs.size(); ++i)
        if (s.tensor == &fix.imgs[i]) var = leaves[i];
      for (const ParamRef<double>& r : refs)
        if (r.tensor == s.tensor) var = r.var;
      require(var.valid(), ErrorKind::InvalidState, "no tape node for slot " + s.name);
      s.analytic = tape.has_grad(var) ? tape.grad(var) : Tensor<double>(s.tensor->shape);
    }
  }

  std::vector<CompositeSlot> out;
  for (Slot& s : slots) {
    const Tensor<double> point = *s.tensor;
    auto eval = [&](const Tensor<double>& p) {
      *s.tensor = p;
      Tape<double> tape;
      auto loss = detail::composite_loss(tape, fix, nullptr, nullptr);
      GcEval e{tape.value(loss).data[0], tape.guard()};
      return e;
    };
    GcOptions opt;
    opt.max_coords = coords_per_slot;
    opt.seed = seed ^ 0xab5eed;
    GcReport rep = gradient_check(eval, point, s.analytic, eps, opt);
    *s.tensor = point;
    out.push_back({s.name, rep});
  }
  return out;
}

}  // namespace lfsafa
