#pragma once
// Minimal arbitrary-precision unsigned integer: add, multiply by a 64-bit
// factor, compare, natural log. This is all the exact-probability DP mode
// needs: masses are integer numerators over an implicit common denominator
// that is itself a product of small per-step scales.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aeplab/logsumexp.hpp"

namespace aeplab {

class BigUint {
 public:
  BigUint() = default;
  explicit BigUint(std::uint64_t v) {
    if (v != 0) limbs_.push_back(v);
  }

  bool is_zero() const { return limbs_.empty(); }

  void add(const BigUint& o) {
    if (o.limbs_.size() > limbs_.size()) limbs_.resize(o.limbs_.size(), 0);
    unsigned __int128 carry = 0;
    for (size_t i = 0; i < limbs_.size(); ++i) {
      unsigned __int128 s = carry + limbs_[i];
      if (i < o.limbs_.size()) s += o.limbs_[i];
      limbs_[i] = static_cast<std::uint64_t>(s);
      carry = s >> 64;
    }
    if (carry != 0) limbs_.push_back(static_cast<std::uint64_t>(carry));
  }

  void mul_small(std::uint64_t f) {
    if (f == 0 || is_zero()) {
      limbs_.clear();
      return;
    }
    unsigned __int128 carry = 0;
    for (auto& limb : limbs_) {
      unsigned __int128 p = static_cast<unsigned __int128>(limb) * f + carry;
      limb = static_cast<std::uint64_t>(p);
      carry = p >> 64;
    }
    if (carry != 0) limbs_.push_back(static_cast<std::uint64_t>(carry));
  }

  // Natural log; -inf for zero. Uses the top 128 bits, so the relative error
  // is ~1e-19 regardless of magnitude.
  double log_e() const {
    if (is_zero()) return kNegInf;
    size_t k = limbs_.size();
    long double top = static_cast<long double>(limbs_[k - 1]);
    long double shift = 0.0L;
    if (k >= 2) {
      top = top * 18446744073709551616.0L + static_cast<long double>(limbs_[k - 2]);
      shift = static_cast<long double>(k - 2) * 64.0L;
    }
    const long double ln2 = 0.69314718055994530942L;
    return static_cast<double>(std::log(top) + shift * ln2);
  }

 private:
  std::vector<std::uint64_t> limbs_;  // little-endian base 2^64
};

}  // namespace aeplab
