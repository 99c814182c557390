#include <catch2/catch_amalgamated.hpp>
#include <lfsafa/adam.hpp>
#include <lfsafa/backbone.hpp>

#include <vector>

#include "oracles.hpp"

using lfsafa::BackboneParams;
using lfsafa::Rng;
using lfsafa::Tape;
using lfsafa::Tensor;

namespace {

BackboneParams<float> zero_backbone(int scale, int c_img, int c_i, int blocks) {
  BackboneParams<float> p;
  p.scale = scale;
  p.head = lfsafa::zero_conv<float>(c_img, c_i, 3);
  for (int i = 0; i < blocks; ++i)
    p.body.push_back({lfsafa::zero_conv<float>(c_i, c_i, 3), lfsafa::zero_conv<float>(c_i, c_i, 3)});
  p.body_tail = lfsafa::zero_conv<float>(c_i, c_i, 3);
  for (int s = 0; s < (scale == 2 ? 1 : 2); ++s)
    p.up.push_back(lfsafa::zero_conv<float>(c_i, 4 * c_i, 3));
  p.tail = lfsafa::zero_conv<float>(c_i, c_img, 3);
  return p;
}

}  // namespace

TEST_CASE("default backbone has the contracted shapes", "[backbone]") {
  Rng rng(1);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2);
  REQUIRE(p.width() == 64);
  REQUIRE(p.img_channels() == 1);
  REQUIRE(p.body.size() == 4);
  REQUIRE(p.up.size() == 1);
  REQUIRE(p.up[0].out_channels() == 256);
  REQUIRE_NOTHROW(p.validate());

  Tensor<float> img({1, 8, 8}, 0.25f);
  Tensor<float> feat = lfsafa::extract_features(img, p);
  REQUIRE(feat.shape == std::vector<int>{64, 8, 8});
  REQUIRE(lfsafa::upscale(feat, p, 2).shape == std::vector<int>{1, 16, 16});

  BackboneParams<float> p4 = lfsafa::make_backbone<float>(rng, 4);
  REQUIRE(p4.up.size() == 2);
  Tensor<float> feat4 = lfsafa::extract_features(img, p4);
  REQUIRE(lfsafa::upscale(feat4, p4, 4).shape == std::vector<int>{1, 32, 32});
}

TEST_CASE("zero weights map everything to zero", "[backbone]") {
  BackboneParams<float> p = zero_backbone(2, 1, 6, 2);
  Rng rng(2);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 7, 5}, 0.f, 1.f);
  Tensor<float> feat = lfsafa::extract_features(img, p);
  for (float v : feat.data) REQUIRE(v == 0.0f);
  Tensor<float> out = lfsafa::upscale(feat, p, 2);
  REQUIRE(out.shape == std::vector<int>{1, 14, 10});
  for (float v : out.data) REQUIRE(v == 0.0f);
}

TEST_CASE("an empty body degenerates to the head conv", "[backbone]") {
  Rng rng(3);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 8, 0);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 6, 9}, 0.f, 1.f);
  Tensor<float> feat = lfsafa::extract_features(img, p);
  Tensor<float> head = lfsafa::ops::conv2d(img, p.head);
  REQUIRE(feat.data == head.data);
}

TEST_CASE("the trunk skip connection carries the head output", "[backbone]") {
  Rng rng(4);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 8, 1);
  // silence the body: zero block convs and zero trunk-tail conv leave only
  // the skip path, so features must equal the head output exactly
  p.body[0].c1 = lfsafa::zero_conv<float>(8, 8, 3);
  p.body[0].c2 = lfsafa::zero_conv<float>(8, 8, 3);
  p.body_tail = lfsafa::zero_conv<float>(8, 8, 3);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 5, 5}, 0.f, 1.f);
  Tensor<float> feat = lfsafa::extract_features(img, p);
  Tensor<float> head = lfsafa::ops::conv2d(img, p.head);
  REQUIRE(feat.data == head.data);
}

TEST_CASE("feature extraction matches the op-by-op composition", "[backbone]") {
  Rng rng(5);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 8, 2);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 6, 7}, 0.f, 1.f);
  Tensor<float> x0 = lfsafa::ops::conv2d(img, p.head);
  Tensor<float> x = x0;
  for (const auto& b : p.body) x = lfsafa::ops::residual_block(x, b.c1, b.c2);
  x = lfsafa::ops::conv2d(x, p.body_tail);
  x = lfsafa::ops::add(x, x0);
  REQUIRE(lfsafa::extract_features(img, p).data == x.data);

  Tensor<float> up = lfsafa::ops::pixel_shuffle(lfsafa::ops::conv2d(x, p.up[0]), 2);
  up = lfsafa::ops::conv2d(up, p.tail);
  REQUIRE(lfsafa::upscale(x, p, 2).data == up.data);
}

TEST_CASE("upscale refuses the wrong scale factor", "[backbone]") {
  Rng rng(6);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 8, 1);
  Tensor<float> feat({8, 4, 4}, 0.1f);
  REQUIRE_THROWS_WITH(lfsafa::upscale(feat, p, 4),
                      Catch::Matchers::ContainsSubstring("x2") &&
                          Catch::Matchers::ContainsSubstring("x4"));
}

TEST_CASE("tape evaluation reproduces the functional path bitwise", "[backbone]") {
  Rng rng(7);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 8, 2);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 6, 6}, 0.f, 1.f);

  Tape<float> tape;
  lfsafa::BackboneVars<float> vars = lfsafa::register_backbone(tape, p);
  auto feat = lfsafa::tape_extract_features(tape, tape.constant(img), vars);
  auto out = lfsafa::tape_upscale(tape, feat, vars);

  REQUIRE(tape.value(feat).data == lfsafa::extract_features(img, p).data);
  REQUIRE(tape.value(out).data ==
          lfsafa::upscale(lfsafa::extract_features(img, p), p, 2).data);
}

TEST_CASE("frozen params never receive gradients", "[backbone]") {
  Rng rng(8);
  BackboneParams<float> p =
      lfsafa::set_frozen(lfsafa::make_backbone<float>(rng, 2, 1, 6, 1), true);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 5, 5}, 0.f, 1.f);
  Tensor<float> tgt = lfsafa::random_uniform<float>(rng, {1, 10, 10}, 0.f, 1.f);

  Tape<float> tape;
  std::vector<lfsafa::ParamRef<float>> refs;
  lfsafa::BackboneVars<float> vars = lfsafa::register_backbone(tape, p, &refs);
  REQUIRE(refs.empty());
  auto out = lfsafa::tape_upscale(tape, lfsafa::tape_extract_features(tape, tape.constant(img), vars), vars);
  auto loss = tape.l1_loss(out, tape.constant(tgt));
  tape.backward(loss);
  REQUIRE_FALSE(tape.has_grad(vars.head.kernel));
  REQUIRE_FALSE(tape.has_grad(vars.tail.bias));
}

TEST_CASE("one optimizer step moves unfrozen weights and spares frozen ones", "[backbone]") {
  Rng rng(9);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 6, 1);
  Tensor<float> img = lfsafa::random_uniform<float>(rng, {1, 5, 5}, 0.f, 1.f);
  Tensor<float> tgt = lfsafa::random_uniform<float>(rng, {1, 10, 10}, 0.f, 1.f);

  auto run_step = [&](BackboneParams<float>& params) {
    Tape<float> tape;
    std::vector<lfsafa::ParamRef<float>> refs;
    lfsafa::BackboneVars<float> vars = lfsafa::register_backbone(tape, params, &refs);
    auto out = lfsafa::tape_upscale(
        tape, lfsafa::tape_extract_features(tape, tape.constant(img), vars), vars);
    tape.backward(tape.l1_loss(out, tape.constant(tgt)));
    std::vector<Tensor<float>*> ps;
    std::vector<const Tensor<float>*> gs;
    std::vector<std::string> names;
    for (const auto& r : refs) {
      ps.push_back(r.tensor);
      gs.push_back(&tape.grad(r.var));
      names.push_back(r.name);
    }
    lfsafa::AdamState<float> st;
    if (!refs.empty()) lfsafa::adam_step<float>(ps, gs, names, st, 1e-3f);
  };

  const uint64_t before = lfsafa::params_checksum(p);
  run_step(p);
  REQUIRE(lfsafa::params_checksum(p) != before);

  BackboneParams<float> frozen = lfsafa::set_frozen(p, true);
  const uint64_t fr_before = lfsafa::params_checksum(frozen);
  for (int i = 0; i < 3; ++i) run_step(frozen);
  REQUIRE(lfsafa::params_checksum(frozen) == fr_before);
}

TEST_CASE("the weight checksum tracks every tensor", "[backbone]") {
  Rng rng(10);
  BackboneParams<float> p = lfsafa::make_backbone<float>(rng, 2, 1, 4, 1);
  const uint64_t h = lfsafa::params_checksum(p);
  REQUIRE(lfsafa::params_checksum(p) == h);
  p.tail.bias.data[0] += 1e-7f;
  REQUIRE(lfsafa::params_checksum(p) != h);

  int count = 0;
  lfsafa::for_each_param(p, [&](const std::string& name, const Tensor<float>&) {
    REQUIRE_FALSE(name.empty());
    ++count;
  });
  // head + 1 block (2 convs) + body_tail + 1 up stage + tail = 6 convs
  REQUIRE(count == 12);
}
