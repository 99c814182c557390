#include <catch2/catch_amalgamated.hpp>
#include <lfsafa/adam.hpp>

#include <array>
#include <limits>

using lfsafa::AdamState;
using lfsafa::Tensor;

namespace {

template <typename T>
void step(Tensor<T>& p, const Tensor<T>& g, AdamState<T>& st, T lr,
          const std::string& name = "p") {
  std::array<Tensor<T>*, 1> params{&p};
  std::array<const Tensor<T>*, 1> grads{&g};
  std::array<std::string, 1> names{name};
  lfsafa::adam_step<T>(params, grads, names, st, lr);
}

}  // namespace

TEST_CASE("zero gradients leave parameters untouched", "[adam]") {
  Tensor<float> p({2, 3}, {1.f, -2.f, 3.f, 0.5f, 0.f, -1.f});
  Tensor<float> before = p;
  Tensor<float> g({2, 3});
  AdamState<float> st;
  for (int i = 0; i < 10; ++i) step(p, g, st, 1e-2f);
  CHECK(p.data == before.data);
  CHECK(st.step == 10);
}

TEST_CASE("first step moves by about lr regardless of gradient size", "[adam]") {
  for (double g0 : {1e-3, 1.0, 1e3}) {
    Tensor<double> p({1}, 0.0);
    Tensor<double> g({1}, g0);
    AdamState<double> st;
    step(p, g, st, 1e-4);
    INFO("gradient " << g0);
    // bias-corrected first step is lr * g/(|g| + eps'), just under lr
    CHECK(std::abs(p.data[0]) == Catch::Approx(1e-4).epsilon(1e-3));
    CHECK(p.data[0] < 0.0);
  }
}

TEST_CASE("updates match a hand-rolled scalar trace", "[adam]") {
  const double g0 = 0.3, lr = 1e-2;
  Tensor<double> p({1}, 1.0);
  Tensor<double> g({1}, g0);
  AdamState<double> st;

  double m = 0.0, v = 0.0, ref = 1.0;
  for (int s = 1; s <= 5; ++s) {
    step(p, g, st, lr);
    m = 0.9 * m + 0.1 * g0;
    v = 0.999 * v + 0.001 * g0 * g0;
    double mhat = m / (1.0 - std::pow(0.9, s));
    double vhat = v / (1.0 - std::pow(0.999, s));
    ref -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    INFO("step " << s);
    REQUIRE(p.data[0] == Catch::Approx(ref).margin(1e-14));
  }
}

TEST_CASE("step counter advances by one per update", "[adam]") {
  Tensor<float> p({3}, 1.f);
  Tensor<float> g({3}, 0.1f);
  AdamState<float> st;
  for (int i = 1; i <= 4; ++i) {
    step(p, g, st, 1e-3f);
    REQUIRE(st.step == i);
  }
  REQUIRE(st.slots.size() == 1);
  REQUIRE(st.slots[0].m.shape == p.shape);
  REQUIRE(st.slots[0].v.shape == p.shape);
}

TEST_CASE("non-finite gradients are rejected by parameter name", "[adam]") {
  Tensor<float> p({2}, 1.f);
  Tensor<float> g({2}, {0.1f, std::numeric_limits<float>::infinity()});
  AdamState<float> st;
  REQUIRE_THROWS_WITH(step(p, g, st, 1e-3f, "sas0.conv1.kernel"),
                      Catch::Matchers::ContainsSubstring("sas0.conv1.kernel"));
  // the failed call must not have advanced the state
  CHECK(st.step == 0);
  CHECK(p.data == std::vector<float>{1.f, 1.f});
}

TEST_CASE("gradient shape mismatches are rejected", "[adam]") {
  Tensor<float> p({2, 2}, 1.f);
  Tensor<float> g({4}, 0.1f);
  AdamState<float> st;
  REQUIRE_THROWS_AS(step(p, g, st, 1e-3f), lfsafa::Error);
}

TEST_CASE("parameter count must match the state after the first step", "[adam]") {
  Tensor<float> a({2}, 1.f), b({2}, 1.f), g({2}, 0.1f);
  AdamState<float> st;
  step(a, g, st, 1e-3f);
  std::array<Tensor<float>*, 2> params{&a, &b};
  std::array<const Tensor<float>*, 2> grads{&g, &g};
  std::array<std::string, 2> names{"a", "b"};
  REQUIRE_THROWS_AS(lfsafa::adam_step<float>(params, grads, names, st, 1e-3f),
                    lfsafa::Error);
}
