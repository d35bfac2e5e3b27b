// Prints the rate curve D -> R(P,Q,D) for a Bernoulli(1/2) source against a
// biased memoryless codebook under Hamming distortion, one CSV row per grid
// point, flagging the regime of each point.

#include <cstdio>

#include "aeplab/rate.hpp"

using namespace aeplab;

int main() {
  auto p = FiniteDistribution::uniform(2);
  auto q = FiniteDistribution::from_rationals({Rational(1, 4), Rational(3, 4)});
  auto rho = DistortionMatrix::hamming(2);
  std::printf("D,rate,regime\n");
  for (int i = 0; i <= 24; ++i) {
    Rational d(i, 40);  // 0, 0.025, ..., 0.6
    auto ev = rate(p, q, rho, d);
    std::printf("%.4f,%s,%s\n", d.value(), ev.rate.str().c_str(), regime_name(ev.regime));
  }
  return 0;
}
