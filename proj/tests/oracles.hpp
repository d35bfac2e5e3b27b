#pragma once
// Test-only oracles, all deliberately independent of the library's main code
// paths: brute-force enumeration, grid search, finite differences, hand
// linear solves. Expected values in the suites are frozen from (or checked
// live against) these.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/logsumexp.hpp"
#include "aeplab/process.hpp"
#include "aeplab/rational.hpp"
#include "aeplab/rng.hpp"

namespace oracle {

// Probability of a concrete word under an explicit stationary chain law,
// multiplied out term by term in long double.
inline long double markov_word_prob(const std::vector<double>& pi,
                                    const std::vector<std::vector<double>>& k,
                                    std::span<const int> word) {
  long double p = pi[static_cast<std::size_t>(word[0])];
  for (std::size_t i = 1; i < word.size(); ++i)
    p *= k[static_cast<std::size_t>(word[i - 1])][static_cast<std::size_t>(word[i])];
  return p;
}

inline long double iid_word_prob(const std::vector<double>& q, std::span<const int> word) {
  long double p = 1.0L;
  for (int s : word) p *= q[static_cast<std::size_t>(s)];
  return p;
}

// All words of a given length over {0, ..., base-1}, odometer order.
inline std::vector<std::vector<int>> all_words(int base, int length) {
  std::vector<std::vector<int>> out;
  std::vector<int> w(static_cast<std::size_t>(length), 0);
  while (true) {
    out.push_back(w);
    int i = length - 1;
    while (i >= 0 && ++w[static_cast<std::size_t>(i)] == base) {
      w[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

// Independent per-word MGF log E exp(t * sum_k rho(x_k, Y_k)): enumerate all
// codewords, accumulate p(y) e^{t sum rho} in long double.
inline double word_mgf_log(const aeplab::ProcessModel& cb, const aeplab::DistortionMatrix& rho,
                           const std::vector<int>& word, double t) {
  auto words = all_words(static_cast<int>(cb.alphabet_size()), static_cast<int>(word.size()));
  long double acc = 0.0L;
  for (const auto& y : words) {
    double lp = aeplab::path_log_prob(cb, y);
    if (lp == aeplab::kNegInf) continue;
    long double s = 0.0L;
    for (std::size_t k = 0; k < word.size(); ++k)
      s += rho.real(static_cast<std::size_t>(word[k]), static_cast<std::size_t>(y[k]));
    acc += std::exp(static_cast<long double>(lp) + t * s);
  }
  return static_cast<double>(std::log(acc));
}

// Hand 2x2 stationary solve: pi0 = k10 / (k01 + k10).
inline std::pair<double, double> stationary_2x2(double k01, double k10) {
  double pi0 = k10 / (k01 + k10);
  return {pi0, 1.0 - pi0};
}

// Single-letter log-MGF Lambda(P,Q,lambda), straight from the definition with
// plain exp/log in long double (safe for the moderate lambdas oracles use).
inline double lambda_direct(const aeplab::FiniteDistribution& p, const aeplab::FiniteDistribution& q,
                            const aeplab::DistortionMatrix& rho, double lambda) {
  long double acc = 0.0L;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p.prob(x) <= 0.0) continue;
    long double inner = 0.0L;
    for (std::size_t y = 0; y < q.size(); ++y) {
      if (q.prob(y) <= 0.0) continue;
      inner += static_cast<long double>(q.prob(y)) * std::exp(static_cast<long double>(lambda) * rho.real(x, y));
    }
    acc += static_cast<long double>(p.prob(x)) * std::log(inner);
  }
  return static_cast<double>(acc);
}

// Grid-search Fenchel-Legendre value sup_{lambda in [lo, 0]} lambda*D - Lambda.
inline double grid_rate(const aeplab::FiniteDistribution& p, const aeplab::FiniteDistribution& q,
                        const aeplab::DistortionMatrix& rho, double d, double lo = -30.0,
                        double step = 1e-5) {
  double best = 0.0;  // lambda = 0 gives 0
  for (double lambda = lo; lambda < 0.0; lambda += step) {
    double v = lambda * d - lambda_direct(p, q, rho, lambda);
    if (v > best) best = v;
  }
  return best;
}

// Centered finite difference of a scalar function.
template <typename F>
double central_diff(F&& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Binary entropy in nats.
inline double binary_entropy(double p) { return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p); }

// Random exact-rational probability vector: integer weights over a common
// total, so downstream D_min / D_ave comparisons are exact.
inline aeplab::FiniteDistribution random_rational_dist(aeplab::Xoshiro256& rng, std::size_t n,
                                                       bool allow_zero) {
  std::vector<std::int64_t> weights(n, 0);
  std::int64_t total = 0;
  while (total == 0) {
    total = 0;
    for (auto& w : weights) {
      w = static_cast<std::int64_t>(rng.next() % 10);
      if (!allow_zero && w == 0) w = 1;
      total += w;
    }
  }
  std::vector<aeplab::Rational> entries;
  entries.reserve(n);
  for (auto w : weights) entries.emplace_back(w, total);
  return aeplab::FiniteDistribution::from_rationals(entries);
}

// Random rational distortion matrix with entries in [0, 4] and small
// denominators; at least one zero-cost cell per row keeps D = 0 reachable
// often enough to exercise every regime.
inline aeplab::DistortionMatrix random_rational_rho(aeplab::Xoshiro256& rng, std::size_t ns,
                                                    std::size_t nt, bool zero_diagonal = false) {
  std::vector<aeplab::Rational> entries;
  entries.reserve(ns * nt);
  for (std::size_t x = 0; x < ns; ++x)
    for (std::size_t y = 0; y < nt; ++y) {
      std::int64_t den = 1 + static_cast<std::int64_t>(rng.next() % 4);
      std::int64_t num = static_cast<std::int64_t>(rng.next() % static_cast<std::uint64_t>(4 * den + 1));
      if (zero_diagonal && x == y) num = 0;
      entries.emplace_back(num, den);
    }
  return aeplab::DistortionMatrix(ns, nt, std::move(entries));
}

// Random row-stochastic rational matrix with strictly positive entries.
inline aeplab::RowMatrix random_positive_chain(aeplab::Xoshiro256& rng, std::size_t n) {
  std::vector<aeplab::Rational> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> w(n);
    std::int64_t total = 0;
    for (auto& x : w) {
      x = 1 + static_cast<std::int64_t>(rng.next() % 9);
      total += x;
    }
    for (auto x : w) entries.emplace_back(x, total);
  }
  return aeplab::RowMatrix::from_rationals(n, n, std::move(entries));
}

// Random codebook process over nt observation symbols with exactly-rational
// parameters: kind 0 = iid, 1 = positive Markov chain, 2 = HMM with a
// positive hidden chain (emission rows may have zeros).
inline aeplab::ProcessModel random_codebook(aeplab::Xoshiro256& rng, std::size_t nt, int kind) {
  switch (kind % 3) {
    case 0:
      return aeplab::ProcessModel::iid(random_rational_dist(rng, nt, rng.next() % 3 == 0));
    case 1:
      return aeplab::ProcessModel::markov(random_positive_chain(rng, nt));
    default: {
      std::size_t nh = 2 + rng.next() % 2;
      std::vector<aeplab::Rational> emis;
      for (std::size_t h = 0; h < nh; ++h) {
        auto row = random_rational_dist(rng, nt, rng.next() % 2 == 0);
        for (std::size_t y = 0; y < nt; ++y) emis.push_back(row.exact()[y]);
      }
      return aeplab::ProcessModel::hmm(
          random_positive_chain(rng, nh),
          aeplab::RowMatrix::from_rationals(nh, nt, std::move(emis)));
    }
  }
}

// Random source word over the rho source alphabet.
inline std::vector<int> random_word(aeplab::Xoshiro256& rng, std::size_t ns, std::size_t n) {
  std::vector<int> w(n);
  for (auto& s : w) s = static_cast<int>(rng.next() % ns);
  return w;
}

// A distortion level landing in the requested regime (0: below D_min,
// 1: exactly D_min, 2: interior, 3: at or above D_ave), exact rational
// arithmetic end to end. Degenerate geometry falls back to the nearest
// meaningful regime.
inline aeplab::Rational sample_distortion_in_regime(aeplab::Xoshiro256& rng,
                                                    const aeplab::Rational& dmin,
                                                    const aeplab::Rational& dave, int regime) {
  using aeplab::Rational;
  Rational frac(1 + static_cast<std::int64_t>(rng.next() % 7), 8);  // in (0, 1)
  switch (regime) {
    case 0:
      if (dmin.is_zero()) return dmin;  // below 0 impossible; degrade to "at"
      return dmin * frac;
    case 1:
      return dmin;
    case 2:
      if (dave <= dmin) return dmin;
      return dmin + (dave - dmin) * frac;
    default:
      return dave + frac;
  }
}

}  // namespace oracle
