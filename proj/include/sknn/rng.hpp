#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace sknn {

// Deterministic RNG used everywhere randomness affects observable results.
// mt19937_64 has a standard-mandated output sequence; the helpers below avoid
// std::uniform_*_distribution, whose mapping is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t u64() { return gen_(); }

  // Uniform in [0, bound) via rejection sampling. bound must be nonzero.
  uint64_t below(uint64_t bound) {
    if (bound == 0) return 0;
    if ((bound & (bound - 1)) == 0) return gen_() & (bound - 1);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform `width`-bit value, width in [0, 64].
  uint64_t bits(uint32_t width) {
    if (width == 0) return 0;
    if (width >= 64) return gen_();
    return gen_() >> (64 - width);
  }

  bool coin() { return (gen_() >> 63) != 0; }

  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * real01() - 1.0;
      v = 2.0 * real01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  void fill(uint8_t* out, size_t len) {
    size_t i = 0;
    while (i + 8 <= len) {
      uint64_t w = gen_();
      for (int b = 0; b < 8; ++b) out[i++] = static_cast<uint8_t>(w >> (8 * b));
    }
    if (i < len) {
      uint64_t w = gen_();
      while (i < len) {
        out[i++] = static_cast<uint8_t>(w);
        w >>= 8;
      }
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer; used to derive independent seed streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag, uint64_t index = 0) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<uint32_t> random_permutation(size_t size, Rng& rng) {
  std::vector<uint32_t> perm(size);
  for (size_t i = 0; i < size; ++i) perm[i] = static_cast<uint32_t>(i);
  shuffle_in_place(perm, rng);
  return perm;
}

}  // namespace sknn
