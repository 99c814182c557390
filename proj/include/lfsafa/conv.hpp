#pragma once

#include <cstddef>
#include <vector>

#include "lfsafa/common.hpp"
#include "lfsafa/tensor.hpp"

namespace lfsafa::detail {

template <typename T>
std::vector<T>& scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

// col layout: row kk = (ic*k+dy)*k+dx, column i = y*W+x; zero padding by k/2.
template <typename T>
void im2col_same(const T* in, int cin, int h, int w, int k, T* col) {
  const int pad = k / 2;
  const size_t hw = static_cast<size_t>(h) * w;
  T* cp = col;
  for (int ic = 0; ic < cin; ++ic) {
    const T* src = in + static_cast<size_t>(ic) * hw;
    for (int dy = 0; dy < k; ++dy) {
      const int sy = dy - pad;
      for (int dx = 0; dx < k; ++dx) {
        const int sx = dx - pad;
        for (int y = 0; y < h; ++y) {
          const int yy = y + sy;
          if (yy < 0 || yy >= h) {
            for (int x = 0; x < w; ++x) *cp++ = T(0);
            continue;
          }
          const T* srow = src + static_cast<size_t>(yy) * w;
          int x = 0;
          for (; x < w && x + sx < 0; ++x) *cp++ = T(0);
          const int xend = (sx > 0) ? w - sx : w;
          for (; x < xend; ++x) *cp++ = srow[x + sx];
          for (; x < w; ++x) *cp++ = T(0);
        }
      }
    }
  }
}

// out[oc][:] = bias[oc] + sum_k a[oc][k] * b[k][:]; 4-way blocked over oc.
template <typename T>
void gemm_axpy(const T* a, const T* b, const T* bias, int rows, int kk, size_t n, T* out) {
  int oc = 0;
  for (; oc + 4 <= rows; oc += 4) {
    T* o0 = out + static_cast<size_t>(oc) * n;
    T* o1 = o0 + n;
    T* o2 = o1 + n;
    T* o3 = o2 + n;
    const T b0 = bias ? bias[oc] : T(0);
    const T b1 = bias ? bias[oc + 1] : T(0);
    const T b2 = bias ? bias[oc + 2] : T(0);
    const T b3 = bias ? bias[oc + 3] : T(0);
    for (size_t i = 0; i < n; ++i) {
      o0[i] = b0;
      o1[i] = b1;
      o2[i] = b2;
      o3[i] = b3;
    }
    const T* a0 = a + static_cast<size_t>(oc) * kk;
    const T* a1 = a0 + kk;
    const T* a2 = a1 + kk;
    const T* a3 = a2 + kk;
    for (int q = 0; q < kk; ++q) {
      const T w0 = a0[q], w1 = a1[q], w2 = a2[q], w3 = a3[q];
      const T* br = b + static_cast<size_t>(q) * n;
      for (size_t i = 0; i < n; ++i) {
        const T v = br[i];
        o0[i] += w0 * v;
        o1[i] += w1 * v;
        o2[i] += w2 * v;
        o3[i] += w3 * v;
      }
    }
  }
  for (; oc < rows; ++oc) {
    T* o = out + static_cast<size_t>(oc) * n;
    const T bi = bias ? bias[oc] : T(0);
    for (size_t i = 0; i < n; ++i) o[i] = bi;
    const T* ar = a + static_cast<size_t>(oc) * kk;
    for (int q = 0; q < kk; ++q) {
      const T w = ar[q];
      const T* br = b + static_cast<size_t>(q) * n;
      for (size_t i = 0; i < n; ++i) o[i] += w * br[i];
    }
  }
}

// Same-padding stride-1 convolution, im2col + blocked GEMM; k == 1 skips the
// col materialization entirely.
template <typename T>
void conv2d_same(const T* in, int cin, int h, int w, const T* ker, int cout, int k,
                 const T* bias, T* out) {
  const size_t hw = static_cast<size_t>(h) * w;
  if (k == 1) {
    gemm_axpy(ker, in, bias, cout, cin, hw, out);
    return;
  }
  const int kk = cin * k * k;
  std::vector<T>& col = scratch<T>();
  if (col.size() < static_cast<size_t>(kk) * hw) col.resize(static_cast<size_t>(kk) * hw);
  im2col_same(in, cin, h, w, k, col.data());
  gemm_axpy(ker, col.data(), bias, cout, kk, hw, out);
}

// dIn for a same-padding conv equals a same-padding conv of dOut with the
// kernel transposed over (cout,cin) and flipped spatially.
template <typename T>
void conv2d_same_grad_input(const T* dout, int cout, int h, int w, const T* ker, int cin,
                            int k, T* din) {
  std::vector<T> tk(static_cast<size_t>(cin) * cout * k * k);
  for (int oc = 0; oc < cout; ++oc)
    for (int ic = 0; ic < cin; ++ic)
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx) {
          size_t src = ((static_cast<size_t>(oc) * cin + ic) * k + dy) * k + dx;
          size_t dst =
              ((static_cast<size_t>(ic) * cout + oc) * k + (k - 1 - dy)) * k + (k - 1 - dx);
          tk[dst] = ker[src];
        }
  conv2d_same(dout, cout, h, w, tk.data(), cin, k, static_cast<const T*>(nullptr), din);
}

// Accumulates (+=) into dker/dbias so parameters shared by several ops sum
// their gradients across uses.
template <typename T>
void conv2d_same_grad_params(const T* in, int cin, int h, int w, const T* dout, int cout,
                             int k, T* dker, T* dbias) {
  const size_t hw = static_cast<size_t>(h) * w;
  const int kk = cin * k * k;
  const T* col;
  std::vector<T>* colbuf = nullptr;
  if (k == 1) {
    col = in;
  } else {
    colbuf = &scratch<T>();
    if (colbuf->size() < static_cast<size_t>(kk) * hw)
      colbuf->resize(static_cast<size_t>(kk) * hw);
    im2col_same(in, cin, h, w, k, colbuf->data());
    col = colbuf->data();
  }
  for (int oc = 0; oc < cout; ++oc) {
    const T* g = dout + static_cast<size_t>(oc) * hw;
    if (dbias) {
      T s = T(0);
      for (size_t i = 0; i < hw; ++i) s += g[i];
      dbias[oc] += s;
    }
    T* dk = dker + static_cast<size_t>(oc) * kk;
    int q = 0;
    for (; q + 4 <= kk; q += 4) {
      const T* c0 = col + static_cast<size_t>(q) * hw;
      const T* c1 = c0 + hw;
      const T* c2 = c1 + hw;
      const T* c3 = c2 + hw;
      T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
      for (size_t i = 0; i < hw; ++i) {
        const T gv = g[i];
        s0 += gv * c0[i];
        s1 += gv * c1[i];
        s2 += gv * c2[i];
        s3 += gv * c3[i];
      }
      dk[q] += s0;
      dk[q + 1] += s1;
      dk[q + 2] += s2;
      dk[q + 3] += s3;
    }
    for (; q < kk; ++q) {
      const T* c0 = col + static_cast<size_t>(q) * hw;
      T s = T(0);
      for (size_t i = 0; i < hw; ++i) s += g[i] * c0[i];
      dk[q] += s;
    }
  }
}

// out[c, r*y+dy, r*x+dx] = in[c*r*r + dy*r + dx, y, x]
template <typename T>
void pixel_shuffle_fwd(const T* in, int cout, int r, int h, int w, T* out) {
  const int oh = h * r, ow = w * r;
  for (int c = 0; c < cout; ++c) {
    for (int dy = 0; dy < r; ++dy) {
      for (int dx = 0; dx < r; ++dx) {
        const T* src = in + ((static_cast<size_t>(c) * r * r + dy * r + dx) * h) * w;
        for (int y = 0; y < h; ++y) {
          const T* srow = src + static_cast<size_t>(y) * w;
          T* orow = out + (static_cast<size_t>(c) * oh + y * r + dy) * ow + dx;
          for (int x = 0; x < w; ++x) orow[static_cast<size_t>(x) * r] = srow[x];
        }
      }
    }
  }
}

template <typename T>
void pixel_shuffle_bwd(const T* dout, int cout, int r, int h, int w, T* din) {
  const int oh = h * r, ow = w * r;
  for (int c = 0; c < cout; ++c) {
    for (int dy = 0; dy < r; ++dy) {
      for (int dx = 0; dx < r; ++dx) {
        T* dst = din + ((static_cast<size_t>(c) * r * r + dy * r + dx) * h) * w;
        for (int y = 0; y < h; ++y) {
          T* drow = dst + static_cast<size_t>(y) * w;
          const T* grow = dout + (static_cast<size_t>(c) * oh + y * r + dy) * ow + dx;
          for (int x = 0; x < w; ++x) drow[x] += grow[static_cast<size_t>(x) * r];
        }
      }
    }
  }
}

}  // namespace lfsafa::detail
