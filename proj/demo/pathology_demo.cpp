// Reproduces the periodic-chain pathology at D = D_min: along one sampled
// path, L_n alternates between infinity and zero while the finite
// subsequence N_m converges to the rate.

#include <cstdio>

#include "aeplab/aep.hpp"

using namespace aeplab;

int main() {
  auto source = ProcessModel::markov(RowMatrix::from_rationals(
      2, 2, {Rational(0), Rational(1), Rational(1), Rational(0)}));
  auto codebook = ProcessModel::iid(FiniteDistribution::point_mass(2, 0));
  auto rho = DistortionMatrix::absolute(2, 2);

  auto verdict = classify_pathology(source, codebook, rho, Rational(1, 2));
  std::printf("pathological: %s\n", verdict.pathological ? "yes" : "no");

  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    auto recs = run_trajectory(source, codebook, rho, Rational(1, 2), 12, seed);
    if (!recs[0].l_n.is_infinite()) continue;  // want the X_1 = 1 start
    std::printf("l_n for n = 1..12:");
    for (const auto& r : recs) std::printf(" %s", r.l_n.str().c_str());
    std::printf("\nfinite subsequence:");
    for (int nidx : finite_subsequence(recs)) std::printf(" %d", nidx);
    std::printf("\n");
    return 0;
  }
  return 1;
}
