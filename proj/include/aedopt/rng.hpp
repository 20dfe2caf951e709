#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace aedopt {

// Seeding and sampling helpers. The engine is std::mt19937_64 (bit-exact per
// the standard); the distributions are implemented here because the stdlib
// distribution objects are not guaranteed to produce the same streams across
// implementations, and every artifact in this project is expected to be
// byte-reproducible.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable per-stage seed: hash of (master seed, stage label, repetition index).
inline uint64_t seed_for(uint64_t master, std::string_view label, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(master);
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  mix(index);
  return splitmix64(h);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t x, r;
    do {
      x = eng_();
      r = x % n;
    } while (x - r > UINT64_MAX - n + 1);
    return r;
  }

  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Knuth's product method; large means are split so the running product
  // never underflows.
  int64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean > 400.0) {
      double half = mean / 2.0;
      return poisson(half) + poisson(mean - half);
    }
    double limit = std::exp(-mean);
    int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace aedopt
