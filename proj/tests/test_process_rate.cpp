// Lambda_n / R_n with codebook memory, the +-log C / n sandwich, and the
// block-i.i.d. approximating codebook.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aeplab/process_rate.hpp"
#include "oracles.hpp"

using namespace aeplab;

namespace {

const DistortionMatrix kHamming2 = DistortionMatrix::hamming(2);

ProcessModel bench_source() {
  return ProcessModel::markov(RowMatrix::from_rationals(
      2, 2, {Rational(9, 10), Rational(1, 10), Rational(2, 10), Rational(8, 10)}));
}

ProcessModel bench_codebook() {
  return ProcessModel::markov(RowMatrix::from_rationals(
      2, 2, {Rational(3, 5), Rational(2, 5), Rational(2, 5), Rational(3, 5)}));
}

}  // namespace

TEST(LambdaN, ZeroTiltIsZero) {
  for (int n : {1, 3, 5})
    EXPECT_EQ(lambda_n(bench_source(), bench_codebook(), kHamming2, n, 0.0).value, 0.0);
}

TEST(LambdaN, MemorylessIdentity) {
  auto p = FiniteDistribution::from_rationals({Rational(3, 10), Rational(7, 10)});
  auto q = FiniteDistribution::from_rationals({Rational(1, 4), Rational(3, 4)});
  auto src = ProcessModel::iid(p);
  auto cb = ProcessModel::iid(q);
  for (int n : {1, 2, 3, 4})
    for (double lam : {-2.0, -0.5, 0.7}) {
      double vn = lambda_n(src, cb, kHamming2, n, n * lam).value / n;
      EXPECT_NEAR(vn, lambda_fn(p, q, kHamming2, lam), 1e-12);
    }
}

TEST(LambdaN, MarkovEnumerationOracle) {
  auto src = bench_source();
  auto cb = bench_codebook();
  const int n = 3;
  const double lam = -1.0;  // applied to rho_n
  long double acc = 0.0L;
  for (const auto& x : oracle::all_words(2, n)) {
    double lp = path_log_prob(src, x);
    acc += std::exp(static_cast<long double>(lp)) *
           oracle::word_mgf_log(cb, kHamming2, x, lam / n);
  }
  EXPECT_NEAR(lambda_n(src, cb, kHamming2, n, lam).value, static_cast<double>(acc), 1e-12);
}

TEST(LambdaN, HmmSourceAgainstEnumeration) {
  // a genuine HMM source: uneven emissions over the binary alphabet
  auto src = ProcessModel::hmm(
      RowMatrix::from_rationals(2, 2, {Rational(7, 10), Rational(3, 10), Rational(2, 5), Rational(3, 5)}),
      RowMatrix::from_rationals(2, 2, {Rational(9, 10), Rational(1, 10), Rational(1, 4), Rational(3, 4)}));
  auto cb = bench_codebook();
  const int n = 3;
  const double lam = -1.5;
  long double acc = 0.0L;
  for (const auto& x : oracle::all_words(2, n)) {
    double lp = path_log_prob(src, x);
    acc += std::exp(static_cast<long double>(lp)) *
           oracle::word_mgf_log(cb, kHamming2, x, lam / n);
  }
  EXPECT_NEAR(lambda_n(src, cb, kHamming2, n, lam).value, static_cast<double>(acc), 1e-12);
}

TEST(LambdaN, IdentityEmissionHmmMatchesItsChain) {
  // wrapping a chain as an HMM with identity emissions must change nothing
  auto markov_src = bench_source();
  auto hmm_src = ProcessModel::hmm(
      RowMatrix::from_rationals(2, 2, {Rational(9, 10), Rational(1, 10), Rational(2, 10), Rational(8, 10)}),
      RowMatrix::from_rationals(2, 2, {Rational(1), Rational(0), Rational(0), Rational(1)}));
  auto cb = bench_codebook();
  for (int n : {1, 2, 4})
    for (double lam : {-2.0, 0.5})
      EXPECT_NEAR(lambda_n(markov_src, cb, kHamming2, n, lam).value,
                  lambda_n(hmm_src, cb, kHamming2, n, lam).value, 1e-12);
  auto ra = r_n(markov_src, cb, kHamming2, 3, Rational(1, 4));
  auto rb = r_n(hmm_src, cb, kHamming2, 3, Rational(1, 4));
  EXPECT_NEAR(ra.value.value(), rb.value.value(), 1e-12);
}

TEST(LambdaN, ExactModeGuard) {
  EXPECT_THROW(lambda_n(bench_source(), bench_codebook(), kHamming2, 24, -1.0), ResourceError);
}

TEST(LambdaN, MonteCarloIsUnbiased) {
  auto src = bench_source();
  auto cb = bench_codebook();
  const int n = 4;
  const double lam = -2.0;
  double exact = lambda_n(src, cb, kHamming2, n, lam).value;
  auto mc = lambda_n(src, cb, kHamming2, n, lam, EvalMode::MonteCarlo, {100000, 99});
  ASSERT_GT(mc.std_error, 0.0);
  EXPECT_NEAR(mc.value, exact, 4.0 * mc.std_error);
}

TEST(RN, MemorylessMatchesSingleLetterRate) {
  auto p = FiniteDistribution::from_rationals({Rational(3, 10), Rational(7, 10)});
  auto q = FiniteDistribution::from_rationals({Rational(1, 4), Rational(3, 4)});
  auto src = ProcessModel::iid(p);
  auto cb = ProcessModel::iid(q);
  for (int n : {1, 2, 3, 4})
    for (Rational d : {Rational(1, 10), Rational(1, 4), Rational(2, 5)}) {
      auto rn = r_n(src, cb, kHamming2, n, d);
      auto r1 = rate(p, q, kHamming2, d);
      ASSERT_EQ(rn.value.is_finite(), r1.rate.is_finite());
      if (rn.value.is_finite()) {
        EXPECT_NEAR(rn.value.value(), r1.rate.value(), 1e-10);
      }
    }
}

TEST(RN, ZeroAtOrAboveDave) {
  // D_ave = 0.5 for the benchmark pair under Hamming
  EXPECT_EQ(r_n(bench_source(), bench_codebook(), kHamming2, 3, Rational(1, 2)).value,
            ExtReal::finite(0.0));
  EXPECT_EQ(r_n(bench_source(), bench_codebook(), kHamming2, 3, Rational(3, 4)).value,
            ExtReal::finite(0.0));
}

TEST(RN, InfiniteBelowCommonDmin) {
  DistortionMatrix rho(2, 2, {Rational(1), Rational(2), Rational(3), Rational(1)});
  auto rn = r_n(bench_source(), bench_codebook(), rho, 3, Rational(1, 2));
  EXPECT_TRUE(rn.value.is_infinite());
}

// Lambda_{n+m}((n+m) lambda) lies within Lambda_n(n lambda) +
// Lambda_m(m lambda) +- log C for every split and both signs of lambda.
TEST(LambdaN, SubadditivitySandwich) {
  auto src = bench_source();
  auto cb = bench_codebook();
  const double logc = std::log(mixing_constant(cb));
  for (double lam : {-4.0, -1.0, -0.25, 0.5}) {
    for (int total = 2; total <= 6; ++total) {
      double whole = lambda_n(src, cb, kHamming2, total, total * lam).value;
      for (int n = 1; n < total; ++n) {
        int m = total - n;
        double parts = lambda_n(src, cb, kHamming2, n, n * lam).value +
                       lambda_n(src, cb, kHamming2, m, m * lam).value;
        EXPECT_LE(whole, parts + logc + 1e-9) << "lam " << lam << " split " << n << "+" << m;
        EXPECT_GE(whole, parts - logc - 1e-9) << "lam " << lam << " split " << n << "+" << m;
      }
    }
  }
}

// |R_n - R| <= log C with the single-letter rate from the marginals.
TEST(RN, SingleLetterSandwich) {
  auto src = bench_source();
  auto cb = bench_codebook();
  double logc = std::log(mixing_constant(cb));
  auto r1 = rate(src.marginal(), cb.marginal(), kHamming2, Rational(1, 4));
  for (int n : {1, 2, 3, 4, 5}) {
    auto rn = r_n(src, cb, kHamming2, n, Rational(1, 4));
    ASSERT_TRUE(rn.value.is_finite());
    EXPECT_LE(std::fabs(rn.value.value() - r1.rate.value()), logc + 1e-9);
  }
}

TEST(RInfBounds, MemorylessCodebookHasZeroWidth) {
  auto src = bench_source();
  auto cb = ProcessModel::iid(FiniteDistribution::uniform(2));
  auto b = r_inf_bounds(src, cb, kHamming2, Rational(1, 4), 3);
  ASSERT_TRUE(b.lower.is_finite());
  EXPECT_DOUBLE_EQ(b.lower.value(), b.upper.value());
  EXPECT_DOUBLE_EQ(b.width.value(), 0.0);
  auto r1 = rate(src.marginal(), cb.marginal(), kHamming2, Rational(1, 4));
  EXPECT_NEAR(b.lower.value(), r1.rate.value(), 1e-10);
}

TEST(RInfBounds, WidthsShrinkAndNest) {
  auto src = bench_source();
  auto cb = bench_codebook();
  const double logc = std::log(mixing_constant(cb));
  auto b4 = r_inf_bounds(src, cb, kHamming2, Rational(1, 4), 4);
  auto b8 = r_inf_bounds(src, cb, kHamming2, Rational(1, 4), 8);
  for (const auto& b : {b4, b8}) {
    ASSERT_TRUE(b.lower.is_finite());
    EXPECT_LE(b.lower.value(), b.upper.value());
    EXPECT_NEAR(b.width.value(), 2.0 * logc / b.n_used, 1e-9);
  }
  EXPECT_GE(b8.lower.value(), b4.lower.value() - 1e-9);
  EXPECT_LE(b8.upper.value(), b4.upper.value() + 1e-9);
}

TEST(RInfBounds, AllIntervalsShareACommonPoint) {
  // every certified interval contains the same limit, dividing lengths or not
  auto src = bench_source();
  auto cb = bench_codebook();
  double lo = 0.0, hi = 1e300;
  for (int n : {2, 3, 4, 6}) {
    auto b = r_inf_bounds(src, cb, kHamming2, Rational(1, 4), n);
    ASSERT_TRUE(b.lower.is_finite());
    lo = std::max(lo, b.lower.value());
    hi = std::min(hi, b.upper.value());
  }
  EXPECT_LE(lo, hi + 1e-9);
}

TEST(RInfBounds, DegenerateBelowDmin) {
  DistortionMatrix rho(2, 2, {Rational(1), Rational(2), Rational(3), Rational(1)});
  auto b = r_inf_bounds(bench_source(), bench_codebook(), rho, Rational(1, 2), 4);
  EXPECT_TRUE(b.lower.is_infinite());
  EXPECT_TRUE(b.upper.is_infinite());
}

TEST(BlockCodebook, OneBlockEqualsMemoryless) {
  auto cb = bench_codebook();
  auto blocked = block_codebook(cb, 1);
  auto iid = ProcessModel::iid(cb.hidden_stationary());
  Xoshiro256 rng(61);
  for (int t = 0; t < 12; ++t) {
    auto word = oracle::random_word(rng, 2, 1 + rng.next() % 4);
    for (const auto& y : oracle::all_words(2, static_cast<int>(word.size()))) {
      EXPECT_NEAR(path_log_prob(blocked, y), path_log_prob(iid, y), 1e-12);
    }
  }
}

TEST(BlockCodebook, FullBlockIsExactLaw) {
  auto cb = bench_codebook();
  for (int n = 1; n <= 4; ++n) {
    auto blocked = block_codebook(cb, n);
    for (const auto& y : oracle::all_words(2, n))
      EXPECT_NEAR(path_log_prob(blocked, y), path_log_prob(cb, y), 1e-12);
  }
}

// C^{-l} Qhat_n(A) <= Q_n(A) <= C^l Qhat_n(A) with n = m*l + r, 1 <= r <= m:
// atom cylinders imply every cylinder event by summation; subsets checked
// directly for the binary lengths.
TEST(BlockCodebook, BlockMixingBoundOnCylinders) {
  auto cb = bench_codebook();
  const int m = 2;
  auto blocked = block_codebook(cb, m);
  const double c = mixing_constant(cb);
  for (int n = 1; n <= 4; ++n) {
    const int ell = (n - 1) / m;
    const double factor = std::pow(c, ell);
    auto atoms = oracle::all_words(2, n);
    std::vector<double> qn, qh;
    for (const auto& y : atoms) {
      qn.push_back(std::exp(path_log_prob(cb, y)));
      qh.push_back(std::exp(path_log_prob(blocked, y)));
      EXPECT_LE(qn.back(), factor * qh.back() + 1e-12);
      EXPECT_GE(qn.back(), qh.back() / factor - 1e-12);
    }
    if (n <= 3) {
      const std::size_t na = atoms.size();
      for (std::uint32_t mask = 1; mask < (1u << na); ++mask) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < na; ++i)
          if (mask & (1u << i)) {
            a += qn[i];
            b += qh[i];
          }
        EXPECT_LE(a, factor * b + 1e-12);
        EXPECT_GE(a, b / factor - 1e-12);
      }
    }
  }
}

// r_n under the blockified codebook approaches r_n under the original within
// log C / m.
TEST(BlockCodebook, RnApproachesOriginal) {
  auto src = bench_source();
  auto cb = bench_codebook();
  const double logc = std::log(mixing_constant(cb));
  const int n = 6;
  auto rn = r_n(src, cb, kHamming2, n, Rational(1, 4));
  ASSERT_TRUE(rn.value.is_finite());
  double prev_gap = 1e300;
  for (int m : {1, 2, 3}) {
    auto rhat = r_n(src, block_codebook(cb, m), kHamming2, n, Rational(1, 4));
    ASSERT_TRUE(rhat.value.is_finite());
    double gap = std::fabs(rhat.value.value() - rn.value.value());
    EXPECT_LE(gap, logc / m + 1e-6);
    prev_gap = std::min(prev_gap, gap);
  }
}

TEST(BlockCodebook, IidPassesThroughAndValidates) {
  auto iid = ProcessModel::iid(FiniteDistribution::uniform(2));
  auto blocked = block_codebook(iid, 3);
  EXPECT_TRUE(blocked.is_iid());
  EXPECT_THROW(block_codebook(bench_codebook(), 0), std::invalid_argument);
}

TEST(BlockCodebook, HmmCodebookBlockified) {
  auto cb = ProcessModel::hmm(
      RowMatrix::from_rationals(2, 2, {Rational(7, 10), Rational(3, 10), Rational(2, 5), Rational(3, 5)}),
      RowMatrix::from_rationals(2, 2, {Rational(4, 5), Rational(1, 5), Rational(1, 10), Rational(9, 10)}));
  const int m = 2;
  auto blocked = block_codebook(cb, m);
  const double c = mixing_constant(cb);
  // single block: exact law; beyond: within C^l on atoms
  for (int n = 1; n <= 4; ++n) {
    const double factor = std::pow(c, (n - 1) / m);
    for (const auto& y : oracle::all_words(2, n)) {
      double qn = std::exp(path_log_prob(cb, y));
      double qh = std::exp(path_log_prob(blocked, y));
      if (n <= m) {
        EXPECT_NEAR(qn, qh, 1e-12);
      } else {
        EXPECT_LE(qn, factor * qh + 1e-12);
        EXPECT_GE(qn, qh / factor - 1e-12);
      }
    }
  }
}

TEST(RN, MonteCarloTracksExact) {
  auto src = bench_source();
  auto cb = bench_codebook();
  auto exact = r_n(src, cb, kHamming2, 4, Rational(1, 4));
  auto mc = r_n(src, cb, kHamming2, 4, Rational(1, 4), EvalMode::MonteCarlo, {20000, 7});
  ASSERT_TRUE(exact.value.is_finite());
  ASSERT_TRUE(mc.value.is_finite());
  ASSERT_GT(mc.std_error, 0.0);
  EXPECT_NEAR(mc.value.value(), exact.value.value(), 5.0 * mc.std_error);
}
