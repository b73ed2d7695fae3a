#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace jsrl {

// splitmix64 step; decent mixing, used to derive independent seed streams
// from a single root seed so components never share generator state.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t a, uint64_t b = 0) {
  uint64_t s = root;
  uint64_t h = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
  h ^= splitmix64(s);
  s ^= b * 0xd6e8feb86659fd93ULL + 0xca5a826395121157ULL;
  h ^= splitmix64(s);
  return h;
}

inline std::mt19937_64 make_rng(uint64_t root, uint64_t a = 0, uint64_t b = 0) {
  return std::mt19937_64(derive_seed(root, a, b));
}

// Unbiased-enough bounded draw; implemented by hand so sequences do not
// depend on the standard library's distribution internals.
inline int bounded_int(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<uint64_t>(n));
}

inline double unit_uniform(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;  // 53 random bits in [0,1)
}

template <class T>
void fisher_yates(std::vector<T>& xs, std::mt19937_64& rng) {
  for (int i = static_cast<int>(xs.size()) - 1; i > 0; --i) {
    int j = bounded_int(rng, i + 1);
    std::swap(xs[i], xs[j]);
  }
}

inline std::vector<int> shuffled_indices(int n, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  fisher_yates(idx, rng);
  return idx;
}

}  // namespace jsrl
