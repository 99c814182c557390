#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lfsafa/common.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa {

// Adam with bias correction; moments are laid out parallel to the parameter
// list handed to the first adam_step call and keyed by position.
template <typename T>
struct AdamState {
  struct Slot {
    Tensor<T> m, v;
  };
  std::vector<Slot> slots;
  long step = 0;
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T eps = static_cast<T>(1e-8);
};

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads,
               std::span<const std::string> names, AdamState<T>& st, T lr) {
  require(params.size() == grads.size() && params.size() == names.size(),
          ErrorKind::InvalidArgument, "adam_step: params/grads/names length mismatch");
  if (st.slots.empty()) {
    st.slots.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      st.slots[i].m = Tensor<T>(params[i]->shape);
      st.slots[i].v = Tensor<T>(params[i]->shape);
    }
  }
  require(st.slots.size() == params.size(), ErrorKind::ShapeMismatch,
          "adam_step: state holds " + std::to_string(st.slots.size()) + " slots, got " +
              std::to_string(params.size()) + " parameters");
  for (size_t i = 0; i < params.size(); ++i) {
    require(params[i]->shape == st.slots[i].m.shape, ErrorKind::ShapeMismatch,
            "adam_step: parameter '" + names[i] + "' shape " + shape_str(params[i]->shape) +
                " does not match moment shape " + shape_str(st.slots[i].m.shape));
    require(grads[i]->shape == params[i]->shape, ErrorKind::ShapeMismatch,
            "adam_step: gradient shape " + shape_str(grads[i]->shape) + " for '" + names[i] +
                "' does not match parameter " + shape_str(params[i]->shape));
    for (const T& g : grads[i]->data)
      require(std::isfinite(static_cast<double>(g)), ErrorKind::NotFinite,
              "adam_step: non-finite gradient for parameter '" + names[i] + "'");
  }
  st.step += 1;
  const T c1 = T(1) - static_cast<T>(std::pow(static_cast<double>(st.beta1), st.step));
  const T c2 = T(1) - static_cast<T>(std::pow(static_cast<double>(st.beta2), st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = *grads[i];
    Tensor<T>& m = st.slots[i].m;
    Tensor<T>& v = st.slots[i].v;
    for (size_t j = 0; j < p.size(); ++j) {
      m.data[j] = st.beta1 * m.data[j] + (T(1) - st.beta1) * g.data[j];
      v.data[j] = st.beta2 * v.data[j] + (T(1) - st.beta2) * g.data[j] * g.data[j];
      const T mhat = m.data[j] / c1;
      const T vhat = v.data[j] / c2;
      p.data[j] -= lr * mhat / (static_cast<T>(std::sqrt(static_cast<double>(vhat))) + st.eps);
    }
  }
}

}  // namespace lfsafa
