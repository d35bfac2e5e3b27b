#pragma once
// The project's single random source: xoshiro256** seeded through the
// splitmix64 finalizer. Pure 64-bit integer state, identical output on every
// platform. Per-trial streams come from stream_seed(seed, trial) so that a
// serial sweep and a fan-out over trials draw from the same ensembles.

#include <cstdint>

namespace aeplab {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(0x5851F42D4C957F2DULL * (index + 1)));
}

class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& slot : s_) {
      z = mix64(z);
      slot = z ? z : 0x9E3779B97F4A7C15ULL;  // all-zero state is invalid
    }
  }

  static Xoshiro256 stream(std::uint64_t seed, std::uint64_t index) {
    return Xoshiro256(stream_seed(seed, index));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Index into a cumulative walk over probabilities; deterministic given the
  // probability doubles and the stream.
  template <typename Probs>
  int discrete(const Probs& p) {
    double u = unit();
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < static_cast<int>(p.size()); ++i) {
      if (p[i] <= 0.0) continue;
      acc += p[i];
      last = i;
      if (u < acc) return i;
    }
    return last;  // guard against acc summing to slightly under 1
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace aeplab
