#pragma once

#include <string>
#include <vector>

#include "ops.hpp"
#include "tape.hpp"

namespace lfsafa {

template <typename T>
struct ResBlockParams {
  ConvParams<T> c1, c2;

  template <typename U>
  ResBlockParams<U> cast() const {
    return {c1.template cast<U>(), c2.template cast<U>()};
  }
};

template <typename T>
ResBlockParams<T> make_res_block(Rng& rng, int width) {
  return {make_conv<T>(rng, width, width, 3), make_conv<T>(rng, width, width, 3)};
}

// Single-image SR net in two freezable halves: a feature trunk (head conv,
// residual body, trunk-wide skip from the head output) and an upscaler
// (conv + pixel shuffle per x2 stage, reconstruction conv).
template <typename T>
struct BackboneParams {
  ConvParams<T> head;                    // C_img -> C_i
  std::vector<ResBlockParams<T>> body;   // B blocks at C_i
  ConvParams<T> body_tail;               // C_i -> C_i
  std::vector<ConvParams<T>> up;         // per x2 stage: C_i -> 4*C_i
  ConvParams<T> tail;                    // C_i -> C_img
  int scale = 2;
  bool frozen = false;

  int width() const { return head.out_channels(); }
  int img_channels() const { return head.in_channels(); }

  void validate() const {
    require(scale == 2 || scale == 4, ErrorKind::InvalidArgument,
            "backbone scale must be 2 or 4, got " + std::to_string(scale));
    require(static_cast<int>(up.size()) == (scale == 2 ? 1 : 2), ErrorKind::InvalidState,
            "backbone for x" + std::to_string(scale) + " needs " +
                std::to_string(scale == 2 ? 1 : 2) + " upscale stages, has " +
                std::to_string(up.size()));
    head.validate();
    body_tail.validate();
    tail.validate();
    for (const ResBlockParams<T>& b : body) {
      b.c1.validate();
      b.c2.validate();
    }
    for (const ConvParams<T>& u : up) {
      u.validate();
      require(u.out_channels() == 4 * width(), ErrorKind::InvalidState,
              "upscale stage must be " + std::to_string(width()) + "->" +
                  std::to_string(4 * width()) + " channels, got " +
                  std::to_string(u.in_channels()) + "->" + std::to_string(u.out_channels()));
    }
  }

  template <typename U>
  BackboneParams<U> cast() const {
    BackboneParams<U> out;
    out.head = head.template cast<U>();
    for (const ResBlockParams<T>& b : body) out.body.push_back(b.template cast<U>());
    out.body_tail = body_tail.template cast<U>();
    for (const ConvParams<T>& u : up) out.up.push_back(u.template cast<U>());
    out.tail = tail.template cast<U>();
    out.scale = scale;
    out.frozen = frozen;
    return out;
  }
};

template <typename T>
BackboneParams<T> make_backbone(Rng& rng, int scale, int c_img = 1, int c_i = 64,
                                int blocks = 4) {
  require(scale == 2 || scale == 4, ErrorKind::InvalidArgument,
          "backbone scale must be 2 or 4, got " + std::to_string(scale));
  require(blocks >= 0, ErrorKind::InvalidArgument, "block count must be >= 0");
  BackboneParams<T> p;
  p.scale = scale;
  p.head = make_conv<T>(rng, c_img, c_i, 3);
  for (int i = 0; i < blocks; ++i) p.body.push_back(make_res_block<T>(rng, c_i));
  p.body_tail = make_conv<T>(rng, c_i, c_i, 3);
  for (int s = 0; s < (scale == 2 ? 1 : 2); ++s) p.up.push_back(make_conv<T>(rng, c_i, 4 * c_i, 3));
  p.tail = make_conv<T>(rng, c_i, c_img, 3);
  return p;
}

template <typename T>
BackboneParams<T> set_frozen(BackboneParams<T> p, bool frozen) {
  p.frozen = frozen;
  return p;
}

// Visits every weight tensor in a fixed order; checkpoint payloads and
// optimizer slots both rely on this order staying put.
template <typename T, typename Fn>
void for_each_param(BackboneParams<T>& p, Fn&& fn) {
  fn("head.kernel", p.head.kernel);
  fn("head.bias", p.head.bias);
  for (size_t i = 0; i < p.body.size(); ++i) {
    const std::string pre = "body" + std::to_string(i);
    fn(pre + ".c1.kernel", p.body[i].c1.kernel);
    fn(pre + ".c1.bias", p.body[i].c1.bias);
    fn(pre + ".c2.kernel", p.body[i].c2.kernel);
    fn(pre + ".c2.bias", p.body[i].c2.bias);
  }
  fn("body_tail.kernel", p.body_tail.kernel);
  fn("body_tail.bias", p.body_tail.bias);
  for (size_t i = 0; i < p.up.size(); ++i) {
    const std::string pre = "up" + std::to_string(i);
    fn(pre + ".kernel", p.up[i].kernel);
    fn(pre + ".bias", p.up[i].bias);
  }
  fn("tail.kernel", p.tail.kernel);
  fn("tail.bias", p.tail.bias);
}

template <typename T, typename Fn>
void for_each_param(const BackboneParams<T>& p, Fn&& fn) {
  for_each_param(const_cast<BackboneParams<T>&>(p),
                 [&](const std::string& name, Tensor<T>& t) {
                   fn(name, static_cast<const Tensor<T>&>(t));
                 });
}

template <typename T>
uint64_t params_checksum(const BackboneParams<T>& p) {
  uint64_t h = 0xcbf29ce484222325ull;
  for_each_param(p, [&](const std::string&, const Tensor<T>& t) {
    h = fnv1a64(t.data.data(), t.data.size() * sizeof(T), h);
  });
  return h;
}

template <typename T>
Tensor<T> extract_features(const Tensor<T>& img, const BackboneParams<T>& p) {
  p.validate();
  Tensor<T> x0 = ops::conv2d(img, p.head);
  if (p.body.empty()) return x0;
  Tensor<T> x = x0;
  for (const ResBlockParams<T>& b : p.body) x = ops::residual_block(x, b.c1, b.c2);
  x = ops::conv2d(x, p.body_tail);
  return ops::add(x, x0);
}

template <typename T>
Tensor<T> upscale(const Tensor<T>& feat, const BackboneParams<T>& p, int scale) {
  p.validate();
  require(scale == p.scale, ErrorKind::InvalidArgument,
          "upscale: params were built for x" + std::to_string(p.scale) + ", asked for x" +
              std::to_string(scale));
  Tensor<T> x = feat;
  for (const ConvParams<T>& u : p.up) x = ops::pixel_shuffle(ops::conv2d(x, u), 2);
  return ops::conv2d(x, p.tail);
}

// ---- tape (trainable) evaluation ----

template <typename T>
struct ConvVars {
  typename Tape<T>::Var kernel, bias;
};

// One trainable weight tensor: where it lives, its tape leaf, and its name
// for optimizer diagnostics.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor = nullptr;
  typename Tape<T>::Var var;
};

template <typename T>
ConvVars<T> register_conv(Tape<T>& tape, ConvParams<T>& p, bool trainable,
                          const std::string& name, std::vector<ParamRef<T>>* refs) {
  ConvVars<T> v;
  v.kernel = tape.leaf(p.kernel, trainable);
  v.bias = tape.leaf(p.bias, trainable);
  if (trainable && refs) {
    refs->push_back({name + ".kernel", &p.kernel, v.kernel});
    refs->push_back({name + ".bias", &p.bias, v.bias});
  }
  return v;
}

template <typename T>
struct ResBlockVars {
  ConvVars<T> c1, c2;
};

template <typename T>
struct BackboneVars {
  ConvVars<T> head;
  std::vector<ResBlockVars<T>> body;
  ConvVars<T> body_tail;
  std::vector<ConvVars<T>> up;
  ConvVars<T> tail;
  bool empty_body = false;
};

// Registers every backbone tensor on the tape. Frozen params become
// non-trainable leaves: backward skips them and they gather no ParamRefs.
template <typename T>
BackboneVars<T> register_backbone(Tape<T>& tape, BackboneParams<T>& p,
                                  std::vector<ParamRef<T>>* refs = nullptr) {
  p.validate();
  const bool train = !p.frozen;
  BackboneVars<T> v;
  v.head = register_conv(tape, p.head, train, "head", refs);
  for (size_t i = 0; i < p.body.size(); ++i) {
    ResBlockVars<T> b;
    b.c1 = register_conv(tape, p.body[i].c1, train, "body" + std::to_string(i) + ".c1", refs);
    b.c2 = register_conv(tape, p.body[i].c2, train, "body" + std::to_string(i) + ".c2", refs);
    v.body.push_back(b);
  }
  v.body_tail = register_conv(tape, p.body_tail, train, "body_tail", refs);
  for (size_t i = 0; i < p.up.size(); ++i)
    v.up.push_back(register_conv(tape, p.up[i], train, "up" + std::to_string(i), refs));
  v.tail = register_conv(tape, p.tail, train, "tail", refs);
  v.empty_body = p.body.empty();
  return v;
}

template <typename T>
typename Tape<T>::Var tape_res_block(Tape<T>& tape, typename Tape<T>::Var x,
                                     const ResBlockVars<T>& b) {
  auto y = tape.conv2d(x, b.c1.kernel, b.c1.bias);
  y = tape.relu(y);
  y = tape.conv2d(y, b.c2.kernel, b.c2.bias);
  return tape.add(x, y);
}

template <typename T>
typename Tape<T>::Var tape_extract_features(Tape<T>& tape, typename Tape<T>::Var img,
                                            const BackboneVars<T>& v) {
  auto x0 = tape.conv2d(img, v.head.kernel, v.head.bias);
  if (v.empty_body) return x0;
  auto x = x0;
  for (const ResBlockVars<T>& b : v.body) x = tape_res_block(tape, x, b);
  x = tape.conv2d(x, v.body_tail.kernel, v.body_tail.bias);
  return tape.add(x, x0);
}

template <typename T>
typename Tape<T>::Var tape_upscale(Tape<T>& tape, typename Tape<T>::Var feat,
                                   const BackboneVars<T>& v) {
  auto x = feat;
  for (const ConvVars<T>& u : v.up) x = tape.pixel_shuffle(tape.conv2d(x, u.kernel, u.bias), 2);
  return tape.conv2d(x, v.tail.kernel, v.tail.bias);
}

}  // namespace lfsafa
