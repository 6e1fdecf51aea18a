// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace csinas {

// splitmix64 stream. Deliberately not <random>: identical sequences on every
// platform and standard library, which the reproducibility contract depends on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller; caches the second deviate.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Integer in [0, n). n is tiny relative to 2^64 everywhere this is used,
  // so modulo bias is far below statistical noise.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // First k entries of a Fisher-Yates pass over 0..n-1.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(below(static_cast<uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Hash combiner for derived seeds (per-sample substreams, per-candidate
// training seeds). Runs the raw splitmix64 output function over each word.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  auto scramble = [](uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  uint64_t h = scramble(a + 0x9e3779b97f4a7c15ULL);
  h = scramble(h ^ (b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  return h;
}

inline uint64_t hash_str(uint64_t seed, const char* s) {
  uint64_t h = seed;
  for (; *s; ++s) h = mix_seed(h, static_cast<uint64_t>(static_cast<unsigned char>(*s)));
  return h;
}

}  // namespace csinas
