#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lfsafa {

enum class ErrorKind {
  ShapeMismatch,
  InvalidArgument,
  InvalidState,
  NotFinite,
  Io,
  Format,
  Usage,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InvalidState: return "invalid state";
    case ErrorKind::NotFinite: return "non-finite value";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

// FNV-1a, used for payload digests, weight checksums and output manifests.
inline uint64_t fnv1a64(const void* bytes, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distributions below are hand-rolled because std:: distribution algorithms
// are implementation-defined and would break bit-reproducibility of runs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed), seed_hash_(splitmix64(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // [0,1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0,n)
  int uniform_int(int n) {
    require(n > 0, ErrorKind::InvalidArgument, "uniform_int needs n > 0");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  bool coin() { return (eng_() & 1u) != 0; }

  // Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Derives an independent stream; used to decouple init from sampling.
  Rng fork(uint64_t stream) const {
    return Rng(splitmix64(seed_hash_ ^ splitmix64(stream + 0x9e37)));
  }

 private:
  std::mt19937_64 eng_;
  uint64_t seed_hash_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Thread cap from LFSAFA_THREADS; kernels are written with disjoint per-task
// outputs so results do not depend on the effective thread count.
inline int max_threads() {
  static int cached = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    int n = hw;
    if (const char* env = std::getenv("LFSAFA_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) n = static_cast<int>(v < hw ? v : hw);
    }
    return n;
  }();
  return cached;
}

// Runs fn(i) for i in [0, n). Tasks must write disjoint outputs; the split is
// by contiguous index ranges so results never depend on the thread count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  if (n <= 0) return;
  int nt = max_threads();
  if (nt > n) nt = n;
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nt));
  int chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    int lo = t * chunk;
    int hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace lfsafa
