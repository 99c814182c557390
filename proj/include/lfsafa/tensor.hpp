#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lfsafa/common.hpp"

namespace lfsafa {

inline size_t numel(std::span<const int> shape) {
  size_t n = 1;
  for (int d : shape) {
    require(d >= 0, ErrorKind::InvalidArgument, "negative dimension in shape");
    n *= static_cast<size_t>(d);
  }
  return n;
}

inline std::string shape_str(std::span<const int> shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major N-d array. The single value type for images, feature maps
// and gradients; T is float in training and double in gradient-check mode.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape), T(0)) {}
  Tensor(std::vector<int> s, T fill) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require(data.size() == numel(shape), ErrorKind::ShapeMismatch,
            "data length " + std::to_string(data.size()) + " does not match shape " +
                shape_str(shape));
  }

  size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](size_t i) { return data[i]; }
  const T& operator[](size_t i) const { return data[i]; }

  // [C,H,W] accessor
  T& at3(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
  }
  const T& at3(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, T v) { return Tensor(std::move(s), v); }
};

template <typename T>
bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape == b.shape;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const std::string& ctx) {
  require(same_shape(a, b), ErrorKind::ShapeMismatch,
          ctx + ": expected " + shape_str(a.shape) + ", got " + shape_str(b.shape));
}

// Validation hook: rejects NaN/Inf, naming the offending tensor and index.
template <typename T>
void assert_finite(const Tensor<T>& t, const std::string& name) {
  for (size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(static_cast<double>(t.data[i]))) {
      fail(ErrorKind::NotFinite,
           "tensor '" + name + "' has non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
uint64_t checksum(const Tensor<T>& t) {
  return fnv1a64(t.data.data(), t.data.size() * sizeof(T));
}

template <typename T>
Tensor<T> random_uniform(Rng& rng, std::vector<int> shape, T lo, T hi) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data) v = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
  return t;
}

template <typename T>
Tensor<T> random_normal(Rng& rng, std::vector<int> shape, T mean = T(0), T stddev = T(1)) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data) v = static_cast<T>(mean + stddev * static_cast<T>(rng.normal()));
  return t;
}

}  // namespace lfsafa
