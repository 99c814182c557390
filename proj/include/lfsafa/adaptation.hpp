#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "backbone.hpp"
#include "ops.hpp"
#include "tape.hpp"

namespace lfsafa {

// Per-source-view block: entry conv into the exchange width, then three
// residual blocks. No activation after the entry conv; nonlinearity lives
// inside the blocks.
template <typename T>
struct SasParams {
  ConvParams<T> entry;                   // 2*C_i -> C_x (C_i -> C_x without difference)
  std::vector<ResBlockParams<T>> blocks; // 3 blocks at C_x

  template <typename U>
  SasParams<U> cast() const {
    SasParams<U> out;
    out.entry = entry.template cast<U>();
    for (const ResBlockParams<T>& b : blocks) out.blocks.push_back(b.template cast<U>());
    return out;
  }
};

template <typename T>
struct FusionParams {
  ConvParams<T> blend;    // n*C_x -> C_i, 1x1
  ConvParams<T> process;  // C_i -> C_i, 3x3

  template <typename U>
  FusionParams<U> cast() const {
    return {blend.template cast<U>(), process.template cast<U>()};
  }
};

struct AdaptFlags {
  bool use_difference = true;
  bool use_residual = true;
};

template <typename T>
struct AdaptationParams {
  int a = 0;
  std::vector<SasParams<T>> sas;  // one per source view, flat order j = u*a+v
  FusionParams<T> fusion;
  AdaptFlags flags;

  int n() const { return a * a; }
  int feat_channels() const { return fusion.process.out_channels(); }
  int exchange_channels() const { return sas.empty() ? 0 : sas[0].entry.out_channels(); }
  int sas_ksize() const { return sas.empty() ? 0 : sas[0].entry.ksize(); }

  void validate() const {
    require(a >= 1, ErrorKind::InvalidState, "adaptation angular resolution must be >= 1");
    require(static_cast<int>(sas.size()) == n(), ErrorKind::InvalidState,
            "adaptation holds " + std::to_string(sas.size()) + " per-view blocks, expected " +
                std::to_string(n()));
    const int ci = feat_channels(), cx = exchange_channels();
    const int entry_in = flags.use_difference ? 2 * ci : ci;
    for (const SasParams<T>& s : sas) {
      s.entry.validate();
      require(s.entry.in_channels() == entry_in && s.entry.out_channels() == cx,
              ErrorKind::InvalidState,
              "per-view entry conv must be " + std::to_string(entry_in) + "->" +
                  std::to_string(cx) + ", got " + std::to_string(s.entry.in_channels()) + "->" +
                  std::to_string(s.entry.out_channels()));
      require(static_cast<int>(s.blocks.size()) == 3, ErrorKind::InvalidState,
              "per-view block stack must hold 3 residual blocks");
      for (const ResBlockParams<T>& b : s.blocks) {
        b.c1.validate();
        b.c2.validate();
      }
    }
    fusion.blend.validate();
    fusion.process.validate();
    require(fusion.blend.ksize() == 1, ErrorKind::InvalidState,
            "fusion blend conv must be 1x1, got " + std::to_string(fusion.blend.ksize()));
    require(fusion.blend.in_channels() == n() * cx && fusion.blend.out_channels() == ci,
            ErrorKind::InvalidState,
            "fusion blend must be " + std::to_string(n() * cx) + "->" + std::to_string(ci) +
                ", got " + std::to_string(fusion.blend.in_channels()) + "->" +
                std::to_string(fusion.blend.out_channels()));
    require(fusion.process.in_channels() == ci, ErrorKind::InvalidState,
            "fusion process conv must take " + std::to_string(ci) + " channels");
  }

  template <typename U>
  AdaptationParams<U> cast() const {
    AdaptationParams<U> out;
    out.a = a;
    for (const SasParams<T>& s : sas) out.sas.push_back(s.template cast<U>());
    out.fusion = fusion.template cast<U>();
    out.flags = flags;
    return out;
  }
};

// The process conv starts at zero so the module is exactly the identity on
// day one (with the residual path on). Zeroing the blend conv as well would
// look tidier but deadlocks training: with both zero, neither kernel ever
// receives a gradient.
template <typename T>
AdaptationParams<T> make_adaptation(Rng& rng, int a, int c_i = 64, int c_x = 32, int k = 3,
                                    AdaptFlags flags = {}) {
  require(a >= 1, ErrorKind::InvalidArgument,
          "angular resolution must be >= 1, got " + std::to_string(a));
  require(k % 2 == 1, ErrorKind::InvalidArgument, "kernel size must be odd");
  AdaptationParams<T> p;
  p.a = a;
  p.flags = flags;
  const int entry_in = flags.use_difference ? 2 * c_i : c_i;
  for (int j = 0; j < a * a; ++j) {
    SasParams<T> s;
    s.entry = make_conv<T>(rng, entry_in, c_x, k);
    for (int b = 0; b < 3; ++b)
      s.blocks.push_back({make_conv<T>(rng, c_x, c_x, k), make_conv<T>(rng, c_x, c_x, k)});
    p.sas.push_back(std::move(s));
  }
  p.fusion.blend = make_conv<T>(rng, a * a * c_x, c_i, 1);
  p.fusion.process =
      flags.use_residual ? zero_conv<T>(c_i, c_i, 3) : make_conv<T>(rng, c_i, c_i, 3);
  return p;
}

template <typename T, typename Fn>
void for_each_param(AdaptationParams<T>& p, Fn&& fn) {
  for (size_t j = 0; j < p.sas.size(); ++j) {
    const std::string pre = "sas" + std::to_string(j);
    fn(pre + ".entry.kernel", p.sas[j].entry.kernel);
    fn(pre + ".entry.bias", p.sas[j].entry.bias);
    for (size_t b = 0; b < p.sas[j].blocks.size(); ++b) {
      const std::string bp = pre + ".b" + std::to_string(b);
      fn(bp + ".c1.kernel", p.sas[j].blocks[b].c1.kernel);
      fn(bp + ".c1.bias", p.sas[j].blocks[b].c1.bias);
      fn(bp + ".c2.kernel", p.sas[j].blocks[b].c2.kernel);
      fn(bp + ".c2.bias", p.sas[j].blocks[b].c2.bias);
    }
  }
  fn("fusion.blend.kernel", p.fusion.blend.kernel);
  fn("fusion.blend.bias", p.fusion.blend.bias);
  fn("fusion.process.kernel", p.fusion.process.kernel);
  fn("fusion.process.bias", p.fusion.process.bias);
}

template <typename T, typename Fn>
void for_each_param(const AdaptationParams<T>& p, Fn&& fn) {
  for_each_param(const_cast<AdaptationParams<T>&>(p),
                 [&](const std::string& name, Tensor<T>& t) {
                   fn(name, static_cast<const Tensor<T>&>(t));
                 });
}

template <typename T>
uint64_t params_checksum(const AdaptationParams<T>& p) {
  uint64_t h = 0xcbf29ce484222325ull;
  for_each_param(p, [&](const std::string&, const Tensor<T>& t) {
    h = fnv1a64(t.data.data(), t.data.size() * sizeof(T), h);
  });
  return h;
}

// f_i^j: what source view j contributes toward target view i.
template <typename T>
Tensor<T> sas_forward(int j, const Tensor<T>& f_j, const Tensor<T>& f_i,
                      const AdaptationParams<T>& p) {
  require(j >= 0 && j < p.n(), ErrorKind::InvalidArgument,
          "source view index " + std::to_string(j) + " out of range for n=" +
              std::to_string(p.n()));
  require_same_shape(f_j, f_i, "sas_forward");
  const SasParams<T>& s = p.sas[static_cast<size_t>(j)];
  Tensor<T> x;
  if (p.flags.use_difference) {
    Tensor<T> diff = ops::sub(f_i, f_j);
    const std::array<const Tensor<T>*, 2> cat{&f_j, &diff};
    x = ops::conv2d(ops::concat_channels(std::span<const Tensor<T>* const>(cat)), s.entry);
  } else {
    x = ops::conv2d(f_j, s.entry);
  }
  for (const ResBlockParams<T>& b : s.blocks) x = ops::residual_block(x, b.c1, b.c2);
  return x;
}

// Concatenate the n per-source maps in flat order, blend with the 1x1 conv,
// sharpen with the 3x3 conv, and add the target's own features back.
template <typename T>
Tensor<T> fuse(const Tensor<T>& f_i, std::span<const Tensor<T>> shifted,
               const AdaptationParams<T>& p) {
  require(static_cast<int>(shifted.size()) == p.n(), ErrorKind::ShapeMismatch,
          "fuse expects " + std::to_string(p.n()) + " maps, got " +
              std::to_string(shifted.size()));
  std::vector<const Tensor<T>*> ptrs;
  for (const Tensor<T>& t : shifted) ptrs.push_back(&t);
  Tensor<T> y =
      ops::conv2d(ops::concat_channels(std::span<const Tensor<T>* const>(ptrs)), p.fusion.blend);
  y = ops::conv2d(y, p.fusion.process);
  if (p.flags.use_residual) return ops::add(f_i, y);
  return y;
}

template <typename T>
std::vector<Tensor<T>> adapt_all_views(std::span<const Tensor<T>> features,
                                       const AdaptationParams<T>& p) {
  p.validate();
  require(static_cast<int>(features.size()) == p.n(), ErrorKind::ShapeMismatch,
          "adapt_all_views expects " + std::to_string(p.n()) + " feature maps, got " +
              std::to_string(features.size()));
  std::vector<Tensor<T>> out(features.size());
  parallel_for(static_cast<int>(features.size()), [&](int i) {
    std::vector<Tensor<T>> shifted;
    shifted.reserve(features.size());
    for (int j = 0; j < p.n(); ++j)
      shifted.push_back(sas_forward(j, features[static_cast<size_t>(j)],
                                    features[static_cast<size_t>(i)], p));
    out[static_cast<size_t>(i)] =
        fuse(features[static_cast<size_t>(i)], std::span<const Tensor<T>>(shifted), p);
  });
  return out;
}

// ---- tape (trainable) evaluation ----

template <typename T>
struct SasVars {
  ConvVars<T> entry;
  std::vector<ResBlockVars<T>> blocks;
};

template <typename T>
struct AdaptationVars {
  std::vector<SasVars<T>> sas;
  ConvVars<T> blend, process;
  AdaptFlags flags;
};

template <typename T>
AdaptationVars<T> register_adaptation(Tape<T>& tape, AdaptationParams<T>& p,
                                      std::vector<ParamRef<T>>* refs = nullptr,
                                      bool trainable = true) {
  p.validate();
  AdaptationVars<T> v;
  v.flags = p.flags;
  for (size_t j = 0; j < p.sas.size(); ++j) {
    const std::string pre = "sas" + std::to_string(j);
    SasVars<T> s;
    s.entry = register_conv(tape, p.sas[j].entry, trainable, pre + ".entry", refs);
    for (size_t b = 0; b < p.sas[j].blocks.size(); ++b) {
      const std::string bp = pre + ".b" + std::to_string(b);
      ResBlockVars<T> rb;
      rb.c1 = register_conv(tape, p.sas[j].blocks[b].c1, trainable, bp + ".c1", refs);
      rb.c2 = register_conv(tape, p.sas[j].blocks[b].c2, trainable, bp + ".c2", refs);
      s.blocks.push_back(rb);
    }
    v.sas.push_back(std::move(s));
  }
  v.blend = register_conv(tape, p.fusion.blend, trainable, "fusion.blend", refs);
  v.process = register_conv(tape, p.fusion.process, trainable, "fusion.process", refs);
  return v;
}

template <typename T>
typename Tape<T>::Var tape_sas_forward(Tape<T>& tape, int j, typename Tape<T>::Var f_j,
                                       typename Tape<T>::Var f_i, const AdaptationVars<T>& v) {
  const SasVars<T>& s = v.sas[static_cast<size_t>(j)];
  typename Tape<T>::Var x;
  if (v.flags.use_difference) {
    std::array<typename Tape<T>::Var, 2> cat{f_j, tape.sub(f_i, f_j)};
    x = tape.conv2d(tape.concat_channels(cat), s.entry.kernel, s.entry.bias);
  } else {
    x = tape.conv2d(f_j, s.entry.kernel, s.entry.bias);
  }
  for (const ResBlockVars<T>& b : s.blocks) x = tape_res_block(tape, x, b);
  return x;
}

template <typename T>
typename Tape<T>::Var tape_fuse(Tape<T>& tape, typename Tape<T>::Var f_i,
                                std::span<const typename Tape<T>::Var> shifted,
                                const AdaptationVars<T>& v) {
  auto y = tape.conv2d(tape.concat_channels(shifted), v.blend.kernel, v.blend.bias);
  y = tape.conv2d(y, v.process.kernel, v.process.bias);
  if (v.flags.use_residual) return tape.add(f_i, y);
  return y;
}

template <typename T>
std::vector<typename Tape<T>::Var> tape_adapt_all_views(
    Tape<T>& tape, std::span<const typename Tape<T>::Var> features,
    const AdaptationVars<T>& v) {
  require(features.size() == v.sas.size(), ErrorKind::ShapeMismatch,
          "tape_adapt_all_views expects " + std::to_string(v.sas.size()) +
              " feature maps, got " + std::to_string(features.size()));
  std::vector<typename Tape<T>::Var> out;
  const int n = static_cast<int>(features.size());
  for (int i = 0; i < n; ++i) {
    std::vector<typename Tape<T>::Var> shifted;
    shifted.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
      shifted.push_back(tape_sas_forward(tape, j, features[static_cast<size_t>(j)],
                                         features[static_cast<size_t>(i)], v));
    out.push_back(tape_fuse(tape, features[static_cast<size_t>(i)],
                            std::span<const typename Tape<T>::Var>(shifted), v));
  }
  return out;
}

}  // namespace lfsafa
