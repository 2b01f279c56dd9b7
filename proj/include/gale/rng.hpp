#pragma once

#include "gale/common.hpp"

#include <cstdint>
#include <string_view>

namespace gale {

// Counter-free splittable generator. Everything random in the pipeline is
// derived from (root seed, stream name) so results are reproducible across
// runs and platforms, and adding a consumer never perturbs another stream.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_.next(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi_inclusive) {
    uint64_t span = static_cast<uint64_t>(hi_inclusive - lo) + 1;
    return lo + static_cast<int>(gen_.next() % span);
  }

 private:
  SplitMix64 gen_;
};

inline Rng stream_rng(uint64_t root_seed, std::string_view stream_name) {
  SplitMix64 mix(root_seed ^ 0x6a09e667f3bcc908ULL);
  return Rng(mix.next() ^ fnv1a64(stream_name));
}

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in is the input dimension of the map.
inline Matrix uniform_fanin_matrix(Rng& rng, int rows, int cols) {
  double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

inline Vector uniform_fanin_vector(Rng& rng, int size, int fan_in) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = rng.uniform(-bound, bound);
  return v;
}

}  // namespace gale
