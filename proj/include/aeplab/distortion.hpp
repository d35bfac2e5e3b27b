#pragma once
// Single-letter distortion measure rho on S x T. Entries are nonnegative
// rationals with a common denominator L, so accumulated distortions are exact
// integers after scaling by L and the ball condition "sum <= n*D" is an
// integer comparison. Floating constructors accept a double only when it is
// exactly a rational with denominator at most 1e6.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeplab/rational.hpp"

namespace aeplab {

inline constexpr std::int64_t kMaxEntryDenominator = 1000000;
inline constexpr std::int64_t kMaxCommonDenominator = 1000000000000LL;  // headroom for n*L*rho

class DistortionMatrix {
 public:
  DistortionMatrix(std::size_t source_size, std::size_t repro_size, std::vector<Rational> entries)
      : ns_(source_size), nt_(repro_size), entries_(std::move(entries)) {
    if (ns_ == 0 || nt_ == 0) throw std::invalid_argument("DistortionMatrix: empty alphabet");
    if (entries_.size() != ns_ * nt_)
      throw std::invalid_argument("DistortionMatrix: entry count does not match dimensions");
    std::int64_t l = 1;
    for (const auto& e : entries_) {
      if (e.is_negative()) throw std::invalid_argument("DistortionMatrix: negative entry");
      l = lcm_checked(l, e.den());
      if (l > kMaxCommonDenominator)
        throw std::invalid_argument("DistortionMatrix: common denominator exceeds 1e12");
    }
    common_den_ = l;
    real_.reserve(entries_.size());
    scaled_.reserve(entries_.size());
    for (const auto& e : entries_) {
      real_.push_back(e.value());
      scaled_.push_back(e.num() * (common_den_ / e.den()));
    }
  }

  static DistortionMatrix from_reals(std::size_t ns, std::size_t nt, const std::vector<double>& vals) {
    std::vector<Rational> entries;
    entries.reserve(vals.size());
    for (double v : vals) {
      auto r = Rational::from_double(v);
      if (!r || r->den() > kMaxEntryDenominator)
        throw std::invalid_argument(
            "DistortionMatrix: entry " + std::to_string(v) +
            " is not exactly representable with denominator <= 1e6; pass rationals instead");
      entries.push_back(*r);
    }
    return DistortionMatrix(ns, nt, std::move(entries));
  }

  static DistortionMatrix hamming(std::size_t n) {
    std::vector<Rational> e(n * n, Rational(1));
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = Rational(0);
    return DistortionMatrix(n, n, std::move(e));
  }

  // rho(x, y) = |x - y| on integer-indexed alphabets.
  static DistortionMatrix absolute(std::size_t ns, std::size_t nt) {
    std::vector<Rational> e;
    e.reserve(ns * nt);
    for (std::size_t x = 0; x < ns; ++x)
      for (std::size_t y = 0; y < nt; ++y)
        e.emplace_back(static_cast<std::int64_t>(x > y ? x - y : y - x));
    return DistortionMatrix(ns, nt, std::move(e));
  }

  std::size_t source_size() const { return ns_; }
  std::size_t repro_size() const { return nt_; }

  const Rational& at(std::size_t x, std::size_t y) const { return entries_[x * nt_ + y]; }
  double real(std::size_t x, std::size_t y) const { return real_[x * nt_ + y]; }

  // Entry times the common denominator; an exact integer.
  std::int64_t scaled(std::size_t x, std::size_t y) const { return scaled_[x * nt_ + y]; }
  std::int64_t common_denominator() const { return common_den_; }

  std::int64_t max_scaled() const {
    std::int64_t m = 0;
    for (auto s : scaled_) m = std::max(m, s);
    return m;
  }

 private:
  std::size_t ns_;
  std::size_t nt_;
  std::vector<Rational> entries_;
  std::vector<double> real_;
  std::vector<std::int64_t> scaled_;
  std::int64_t common_den_ = 1;
};

}  // namespace aeplab
