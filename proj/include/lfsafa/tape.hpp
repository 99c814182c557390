#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lfsafa/common.hpp"
#include "lfsafa/conv.hpp"
#include "lfsafa/ops.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa {

// Reverse-mode tape. Operations are recorded in execution order; backward()
// replays them strictly in reverse and accumulates gradients into every node
// on a trainable path. Leaves registered with trainable=false (frozen weights,
// input images, targets) never receive a gradient entry, and whole subgraphs
// that cannot reach a trainable leaf are skipped during backward.
template <typename T>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var leaf(const Tensor<T>& value, bool trainable) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = value;
    n.needs_grad = trainable;
    return push(std::move(n));
  }

  Var constant(const Tensor<T>& value) { return leaf(value, false); }

  Var conv2d(Var x, Var kernel, Var bias) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& kv = value(kernel);
    const Tensor<T>& bv = value(bias);
    ConvParams<T> view{kv, bv};  // copies are small relative to the GEMM
    Node n;
    n.op = OpKind::Conv2d;
    n.inputs = {x.id, kernel.id, bias.id};
    n.value = ops::conv2d(xv, view);
    n.needs_grad = needs(x) || needs(kernel) || needs(bias);
    return push(std::move(n));
  }

  Var relu(Var x) {
    Node n;
    n.op = OpKind::Relu;
    n.inputs = {x.id};
    n.value = ops::relu(value(x));
    n.needs_grad = needs(x);
    // The sign pattern is the derivative pattern; fold it into the guard so
    // finite-difference checks can detect a kink crossing between probes.
    fold_sign_pattern(value(x), false);
    return push(std::move(n));
  }

  Var add(Var a, Var b) {
    Node n;
    n.op = OpKind::Add;
    n.inputs = {a.id, b.id};
    n.value = ops::add(value(a), value(b));
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
  }

  Var sub(Var a, Var b) {
    Node n;
    n.op = OpKind::Sub;
    n.inputs = {a.id, b.id};
    n.value = ops::sub(value(a), value(b));
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
  }

  Var scale(Var x, T s) {
    Node n;
    n.op = OpKind::Scale;
    n.inputs = {x.id};
    n.scalar = s;
    n.value = ops::scale(value(x), s);
    n.needs_grad = needs(x);
    return push(std::move(n));
  }

  Var concat_channels(std::span<const Var> xs) {
    require(!xs.empty(), ErrorKind::InvalidArgument, "concat_channels: empty input list");
    std::vector<const Tensor<T>*> ptrs;
    Node n;
    n.op = OpKind::ConcatChannels;
    for (Var v : xs) {
      ptrs.push_back(&value(v));
      n.inputs.push_back(v.id);
      n.needs_grad = n.needs_grad || needs(v);
    }
    n.value = ops::concat_channels<T>(std::span<const Tensor<T>* const>(ptrs));
    return push(std::move(n));
  }

  Var pixel_shuffle(Var x, int r) {
    Node n;
    n.op = OpKind::PixelShuffle;
    n.inputs = {x.id};
    n.iaux = r;
    n.value = ops::pixel_shuffle(value(x), r);
    n.needs_grad = needs(x);
    return push(std::move(n));
  }

  // Mean absolute difference; scalar result with shape [1].
  Var l1_loss(Var pred, Var target) {
    Node n;
    n.op = OpKind::L1;
    n.inputs = {pred.id, target.id};
    n.value = Tensor<T>({1}, ops::l1(value(pred), value(target)));
    n.needs_grad = needs(pred) || needs(target);
    // |x| kinks at pred == target, so the residual signs join the guard too.
    fold_sign_pattern(ops::sub(value(pred), value(target)), true);
    return push(std::move(n));
  }

  Var sum(Var x) {
    Node n;
    n.op = OpKind::Sum;
    n.inputs = {x.id};
    n.value = Tensor<T>({1}, ops::sum(value(x)));
    n.needs_grad = needs(x);
    return push(std::move(n));
  }

  const Tensor<T>& value(Var v) const { return node(v.id).value; }

  bool has_grad(Var v) const {
    const Node& n = node(v.id);
    return n.needs_grad && !n.grad.data.empty();
  }

  const Tensor<T>& grad(Var v) const {
    require(has_grad(v), ErrorKind::InvalidState,
            "no gradient recorded for node " + std::to_string(v.id));
    return node(v.id).grad;
  }

  void backward(Var loss) {
    require(!nodes_.empty(), ErrorKind::InvalidState, "backward called on an empty tape");
    Node& ln = node(loss.id);
    require(ln.value.size() == 1, ErrorKind::InvalidArgument,
            "backward: loss must be scalar, got " + shape_str(ln.value.shape));
    for (Node& n : nodes_) n.grad.data.clear();
    if (!ln.needs_grad) return;  // no trainable leaf feeds the loss
    accum(ln, Tensor<T>({1}, T(1)));
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.needs_grad || n.grad.data.empty()) continue;
      backprop(n);
    }
  }

  uint64_t guard() const { return guard_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  enum class OpKind { Leaf, Conv2d, Relu, Add, Sub, Scale, ConcatChannels, PixelShuffle, L1, Sum };

  struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<int> inputs;
    Tensor<T> value;
    Tensor<T> grad;  // allocated lazily on first accumulation
    T scalar = T(0);
    int iaux = 0;
    bool needs_grad = false;
  };

  Node& node(int id) {
    require(id >= 0 && static_cast<size_t>(id) < nodes_.size(), ErrorKind::InvalidState,
            "invalid tape node id " + std::to_string(id));
    return nodes_[static_cast<size_t>(id)];
  }
  const Node& node(int id) const {
    require(id >= 0 && static_cast<size_t>(id) < nodes_.size(), ErrorKind::InvalidState,
            "invalid tape node id " + std::to_string(id));
    return nodes_[static_cast<size_t>(id)];
  }

  bool needs(Var v) const { return node(v.id).needs_grad; }

  // Packs per-element derivative-branch bits into the guard hash. One bit
  // (v > 0) suffices for relu; |x| needs the negative side separated from the
  // kink itself, hence the second bit.
  void fold_sign_pattern(const Tensor<T>& v, bool two_sided) {
    uint64_t word = 0;
    int nbits = 0;
    auto bit = [&](unsigned b) {
      word = (word << 1) | b;
      if (++nbits == 64) {
        guard_ = fnv1a64(&word, sizeof word, guard_);
        word = 0;
        nbits = 0;
      }
    };
    for (size_t i = 0; i < v.size(); ++i) {
      bit(v.data[i] > T(0) ? 1u : 0u);
      if (two_sided) bit(v.data[i] < T(0) ? 1u : 0u);
    }
    if (nbits) guard_ = fnv1a64(&word, sizeof word, guard_);
  }

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void accum(Node& n, const Tensor<T>& g) {
    if (n.grad.data.empty()) {
      n.grad = Tensor<T>(n.value.shape);
    }
    for (size_t i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
  }

  // Accumulate directly without a temporary where profitable.
  void backprop(Node& n) {
    const Tensor<T>& g = n.grad;
    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::Conv2d: {
        Node& x = node(n.inputs[0]);
        Node& k = node(n.inputs[1]);
        Node& b = node(n.inputs[2]);
        const int cin = x.value.dim(0), h = x.value.dim(1), w = x.value.dim(2);
        const int cout = k.value.dim(0), ks = k.value.dim(2);
        if (x.needs_grad) {
          Tensor<T> dx(x.value.shape);
          detail::conv2d_same_grad_input(g.ptr(), cout, h, w, k.value.ptr(), cin, ks, dx.ptr());
          accum(x, dx);
        }
        if (k.needs_grad || b.needs_grad) {
          if (k.grad.data.empty()) k.grad = Tensor<T>(k.value.shape);
          if (b.grad.data.empty()) b.grad = Tensor<T>(b.value.shape);
          detail::conv2d_same_grad_params(x.value.ptr(), cin, h, w, g.ptr(), cout, ks,
                                          k.grad.ptr(), b.grad.ptr());
        }
        break;
      }
      case OpKind::Relu: {
        Node& x = node(n.inputs[0]);
        if (!x.needs_grad) break;
        Tensor<T> dx(x.value.shape);
        for (size_t i = 0; i < dx.size(); ++i)
          dx.data[i] = x.value.data[i] > T(0) ? g.data[i] : T(0);
        accum(x, dx);
        break;
      }
      case OpKind::Add: {
        Node& a = node(n.inputs[0]);
        Node& b = node(n.inputs[1]);
        if (a.needs_grad) accum(a, g);
        if (b.needs_grad) accum(b, g);
        break;
      }
      case OpKind::Sub: {
        Node& a = node(n.inputs[0]);
        Node& b = node(n.inputs[1]);
        if (a.needs_grad) accum(a, g);
        if (b.needs_grad) {
          if (b.grad.data.empty()) b.grad = Tensor<T>(b.value.shape);
          for (size_t i = 0; i < g.size(); ++i) b.grad.data[i] -= g.data[i];
        }
        break;
      }
      case OpKind::Scale: {
        Node& x = node(n.inputs[0]);
        if (!x.needs_grad) break;
        if (x.grad.data.empty()) x.grad = Tensor<T>(x.value.shape);
        for (size_t i = 0; i < g.size(); ++i) x.grad.data[i] += n.scalar * g.data[i];
        break;
      }
      case OpKind::ConcatChannels: {
        size_t off = 0;
        for (int id : n.inputs) {
          Node& x = node(id);
          const size_t cnt = x.value.size();
          if (x.needs_grad) {
            if (x.grad.data.empty()) x.grad = Tensor<T>(x.value.shape);
            for (size_t i = 0; i < cnt; ++i) x.grad.data[i] += g.data[off + i];
          }
          off += cnt;
        }
        break;
      }
      case OpKind::PixelShuffle: {
        Node& x = node(n.inputs[0]);
        if (!x.needs_grad) break;
        if (x.grad.data.empty()) x.grad = Tensor<T>(x.value.shape);
        detail::pixel_shuffle_bwd(g.ptr(), n.value.dim(0), n.iaux, x.value.dim(1),
                                  x.value.dim(2), x.grad.ptr());
        break;
      }
      case OpKind::L1: {
        Node& p = node(n.inputs[0]);
        Node& t = node(n.inputs[1]);
        const T g0 = g.data[0];
        const T inv_n = T(1) / static_cast<T>(p.value.size());
        // subgradient: sign(pred-target)/N with sign(0) = 0
        if (p.needs_grad) {
          if (p.grad.data.empty()) p.grad = Tensor<T>(p.value.shape);
          for (size_t i = 0; i < p.value.size(); ++i) {
            T d = p.value.data[i] - t.value.data[i];
            p.grad.data[i] += g0 * inv_n * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
          }
        }
        if (t.needs_grad) {
          if (t.grad.data.empty()) t.grad = Tensor<T>(t.value.shape);
          for (size_t i = 0; i < t.value.size(); ++i) {
            T d = p.value.data[i] - t.value.data[i];
            t.grad.data[i] -= g0 * inv_n * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
          }
        }
        break;
      }
      case OpKind::Sum: {
        Node& x = node(n.inputs[0]);
        if (!x.needs_grad) break;
        if (x.grad.data.empty()) x.grad = Tensor<T>(x.value.shape);
        const T g0 = g.data[0];
        for (size_t i = 0; i < x.value.size(); ++i) x.grad.data[i] += g0;
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  uint64_t guard_ = 0xcbf29ce484222325ull;
};

template <typename T>
using Var = typename Tape<T>::Var;

}  // namespace lfsafa
