#pragma once
// Log-domain accumulation helpers. Every expectation over codebook symbols in
// this library runs through these, so a tilt of lambda = -700 or lower never
// touches a raw exp().

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace aeplab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b) with -inf as the additive identity.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Max-shifted log sum over a span; returns -inf for an empty or all -inf span.
inline double log_sum(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace aeplab
