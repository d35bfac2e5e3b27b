#pragma once
// The memory case: Lambda_n(P_n, Q_n, .) by exact source-word enumeration or
// Monte Carlo, R_n(P_n, Q_n, D) through the same regime split as the
// single-letter rate, certified two-sided bounds on the limit
// R_inf = lim R_n with width 2 log C / n, and the block-i.i.d. approximating
// codebook.
//
// The expectation over source words has no low-dimensional sufficient
// statistic for a general Markov source, so Exact mode enumerates all |S|^n
// words (guarded); the transfer-matrix trick applies only to the inner
// codebook expectation. Monte Carlo with per-trial seeded streams is the
// documented path for longer horizons.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeplab/ball.hpp"
#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/extended_real.hpp"
#include "aeplab/process.hpp"
#include "aeplab/rate.hpp"
#include "aeplab/rational.hpp"
#include "aeplab/rng.hpp"

namespace aeplab {

inline constexpr double kSourceEnumGuard = 1e7;  // |S|^n limit for Exact mode

enum class EvalMode { Exact, MonteCarlo };

struct McOptions {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
};

struct LambdaNResult {
  double value = 0.0;
  double std_error = 0.0;  // zero in Exact mode
};

struct RnResult {
  ExtReal value;
  double std_error = 0.0;
};

struct RInfBounds {
  int n_used = 0;
  ExtReal lower;
  ExtReal upper;
  ExtReal width;       // upper - lower when both finite; 0 for the degenerate {inf}
  ExtReal r_n_value;   // the R_n estimate behind the bounds
  double std_error = 0.0;
};

namespace detail {

struct WordEnsemble {
  std::vector<std::vector<int>> words;
  std::vector<double> weights;  // sum to 1
  bool monte_carlo = false;
};

inline WordEnsemble source_ensemble(const ProcessModel& source, int n, EvalMode mode,
                                    const McOptions& mc) {
  if (n < 1) throw std::invalid_argument("process_rate: n must be >= 1");
  WordEnsemble e;
  const std::size_t ns = source.alphabet_size();
  if (mode == EvalMode::Exact) {
    double count = std::pow(static_cast<double>(ns), static_cast<double>(n));
    if (count > kSourceEnumGuard)
      throw ResourceError("exact mode needs |S|^n = " + std::to_string(count) +
                              " source words, guard is 1e7",
                          static_cast<std::uint64_t>(count));
    std::vector<int> w(static_cast<std::size_t>(n), 0);
    while (true) {
      double lp = path_log_prob(source, w);
      if (lp != kNegInf) {
        e.words.push_back(w);
        e.weights.push_back(std::exp(lp));
      }
      std::size_t i = w.size();
      while (i > 0 && ++w[i - 1] == static_cast<int>(ns)) {
        w[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
    return e;
  }
  e.monte_carlo = true;
  if (mc.trials == 0) throw std::invalid_argument("process_rate: trials must be >= 1");
  e.words.reserve(mc.trials);
  const double wgt = 1.0 / static_cast<double>(mc.trials);
  for (std::uint64_t t = 0; t < mc.trials; ++t) {
    Xoshiro256 rng = Xoshiro256::stream(mc.seed, t);
    e.words.push_back(sample_path(source, n, rng));
    e.weights.push_back(wgt);
  }
  return e;
}

inline LambdaNResult ensemble_mean(const WordEnsemble& e, std::span<const double> values) {
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += e.weights[i] * values[i];
  LambdaNResult r{mean, 0.0};
  if (e.monte_carlo && values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size() - 1);
    r.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return r;
}

}  // namespace detail

// Lambda_n(P_n, Q_n, lambda) = E_{X_1^n} log E_{Y_1^n} e^{lambda rho_n}. The
// tilt applies to the *average* distortion rho_n; callers following the
// "optimize over n lambda" identity pass n*lambda here.
inline LambdaNResult lambda_n(const ProcessModel& source, const ProcessModel& codebook,
                              const DistortionMatrix& rho, int n, double lambda,
                              EvalMode mode = EvalMode::Exact, const McOptions& mc = {}) {
  if (codebook.alphabet_size() != rho.repro_size())
    throw std::invalid_argument("lambda_n: codebook alphabet does not match rho");
  if (source.alphabet_size() != rho.source_size())
    throw std::invalid_argument("lambda_n: source alphabet does not match rho");
  if (lambda == 0.0) return {0.0, 0.0};  // log of total codebook mass
  auto ens = detail::source_ensemble(source, n, mode, mc);
  const double t = lambda / static_cast<double>(n);
  std::vector<double> vals;
  vals.reserve(ens.words.size());
  for (const auto& w : ens.words) vals.push_back(word_log_mgf(codebook, rho, w, t).value);
  return detail::ensemble_mean(ens, vals);
}

// R_n(P_n, Q_n, D) = (1/n) sup_{lambda<=0} [lambda n D - Lambda_n(n lambda)].
// Regime endpoints use the single-letter marginals: under the mixing
// condition D_min and the per-letter essential infimum are the same objects
// as in the memoryless case.
inline RnResult r_n(const ProcessModel& source, const ProcessModel& codebook,
                    const DistortionMatrix& rho, int n, const Rational& distortion,
                    EvalMode mode = EvalMode::Exact, const McOptions& mc = {}) {
  if (distortion.is_negative()) throw std::invalid_argument("r_n: distortion must be >= 0");
  const FiniteDistribution& p = source.marginal();
  const FiniteDistribution& q = codebook.marginal();
  detail::Threshold dmin{d_min(p, q, rho), d_min_exact(p, q, rho)};
  detail::Threshold dave{d_ave(p, q, rho), d_ave_exact(p, q, rho)};
  const double dv = distortion.value();

  int against_min = dmin.compare(dv, distortion);
  if (against_min < 0) return {ExtReal::infinity(), 0.0};

  auto ens = detail::source_ensemble(source, n, mode, mc);

  if (against_min == 0) {
    // E_X[-log Q_n(A_n(X))] / n: per word, the ball DP at the word's own
    // essential infimum.
    std::vector<double> vals;
    vals.reserve(ens.words.size());
    for (const auto& w : ens.words) {
      std::int64_t smin = detail::reachable_min_scaled(codebook, rho, w);
      BallDpEngine dp(codebook, rho, smin);
      for (int s : w) dp.push(s);
      auto lp = dp.log_mass_at(smin);
      if (!lp) return {ExtReal::infinity(), 0.0};  // unreachable for mixing codebooks
      vals.push_back(-*lp / static_cast<double>(n));
    }
    auto m = detail::ensemble_mean(ens, vals);
    return {ExtReal::finite(m.value), m.std_error};
  }

  if (dave.compare(dv, distortion) >= 0) return {ExtReal::finite(0.0), 0.0};

  const double nd = static_cast<double>(n) * dv;
  auto slope = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < ens.words.size(); ++i)
      s += ens.weights[i] * word_log_mgf(codebook, rho, ens.words[i], t).slope;
    return s;
  };
  double t_star = detail::bracket_bisect_slope(slope, nd);
  std::vector<double> vals;
  vals.reserve(ens.words.size());
  for (const auto& w : ens.words)
    vals.push_back((t_star * nd - word_log_mgf(codebook, rho, w, t_star).value) /
                   static_cast<double>(n));
  auto m = detail::ensemble_mean(ens, vals);
  return {ExtReal::finite(std::max(0.0, m.value)), m.std_error};
}

// Certified interval for R_inf(P, Q, D): R_n plus/minus log C / n, from the
// subadditivity of Lambda_n +- log C. Lower endpoint clamps at 0.
inline RInfBounds r_inf_bounds(const ProcessModel& source, const ProcessModel& codebook,
                               const DistortionMatrix& rho, const Rational& distortion, int n,
                               EvalMode mode = EvalMode::Exact, const McOptions& mc = {}) {
  const double c = mixing_constant(codebook);
  RnResult rn = r_n(source, codebook, rho, n, distortion, mode, mc);
  RInfBounds b;
  b.n_used = n;
  b.r_n_value = rn.value;
  b.std_error = rn.std_error;
  if (rn.value.is_infinite()) {
    b.lower = ExtReal::infinity();
    b.upper = ExtReal::infinity();
    b.width = ExtReal::finite(0.0);
    return b;
  }
  const double slack = std::log(c) / static_cast<double>(n);
  b.lower = ExtReal::finite(std::max(0.0, rn.value.value() - slack));
  b.upper = ExtReal::finite(rn.value.value() + slack);
  b.width = ExtReal::finite(b.upper.value() - b.lower.value());
  return b;
}

// The block-i.i.d. approximating codebook: length-m blocks drawn
// independently from Q_m, materialized as an HMM whose hidden state is
// (phase, original state) and whose chain resets to the stationary law at
// every block boundary. Blocks are pinned to start at time 1 (phase 0), so
// the process is not stationary; Q_hat_n equals Q_n exactly while n <= m.
inline ProcessModel block_codebook(const ProcessModel& codebook, int m) {
  if (m < 1) throw std::invalid_argument("block_codebook: m must be >= 1");
  if (codebook.is_iid()) return codebook;  // blocks of i.i.d. are i.i.d.

  const bool is_hmm = codebook.kind() == ProcessModel::Kind::Hmm;
  const RowMatrix& k0 = codebook.transition();
  const FiniteDistribution& pi0 = codebook.hidden_stationary();
  const std::size_t nh0 = k0.rows;
  const std::size_t nt = codebook.alphabet_size();
  const std::size_t nh = static_cast<std::size_t>(m) * nh0;
  const bool exact_ok = k0.exact.has_value() && pi0.has_exact() &&
                        (!is_hmm || codebook.emission().exact.has_value());

  auto idx = [&](int phase, std::size_t s) { return static_cast<std::size_t>(phase) * nh0 + s; };

  std::vector<double> trans(nh * nh, 0.0);
  std::vector<Rational> trans_x;
  if (exact_ok) trans_x.assign(nh * nh, Rational(0));
  for (int j = 0; j < m; ++j) {
    const bool wrap = (j == m - 1);
    for (std::size_t s = 0; s < nh0; ++s)
      for (std::size_t s2 = 0; s2 < nh0; ++s2) {
        std::size_t row = idx(j, s), col = idx(wrap ? 0 : j + 1, s2);
        trans[row * nh + col] = wrap ? pi0.prob(s2) : k0.at(s, s2);
        if (exact_ok)
          trans_x[row * nh + col] = wrap ? pi0.exact()[s2] : (*k0.exact)[s * nh0 + s2];
      }
  }

  std::vector<double> emis(nh * nt, 0.0);
  std::vector<Rational> emis_x;
  if (exact_ok) emis_x.assign(nh * nt, Rational(0));
  for (int j = 0; j < m; ++j)
    for (std::size_t s = 0; s < nh0; ++s) {
      std::size_t row = idx(j, s);
      if (is_hmm) {
        const RowMatrix& e0 = codebook.emission();
        for (std::size_t y = 0; y < nt; ++y) {
          emis[row * nt + y] = e0.at(s, y);
          if (exact_ok) emis_x[row * nt + y] = (*e0.exact)[s * nt + y];
        }
      } else {
        emis[row * nt + s] = 1.0;
        if (exact_ok) emis_x[row * nt + s] = Rational(1);
      }
    }

  // stationary: uniform phase x pi0; initial law: phase 0 x pi0
  std::vector<double> stat(nh, 0.0), init(nh, 0.0);
  std::vector<Rational> stat_x, init_x;
  if (exact_ok) {
    stat_x.assign(nh, Rational(0));
    init_x.assign(nh, Rational(0));
  }
  for (int j = 0; j < m; ++j)
    for (std::size_t s = 0; s < nh0; ++s) {
      stat[idx(j, s)] = pi0.prob(s) / static_cast<double>(m);
      if (exact_ok) stat_x[idx(j, s)] = pi0.exact()[s] * Rational(1, m);
      if (j == 0) {
        init[idx(0, s)] = pi0.prob(s);
        if (exact_ok) init_x[idx(0, s)] = pi0.exact()[s];
      }
    }

  RowMatrix kmat = exact_ok ? RowMatrix::from_rationals(nh, nh, std::move(trans_x))
                            : RowMatrix(nh, nh, std::move(trans));
  RowMatrix emat = exact_ok ? RowMatrix::from_rationals(nh, nt, std::move(emis_x))
                            : RowMatrix(nh, nt, std::move(emis));
  FiniteDistribution stationary =
      exact_ok ? FiniteDistribution::from_rationals(stat_x) : FiniteDistribution(stat);
  FiniteDistribution initial =
      exact_ok ? FiniteDistribution::from_rationals(init_x) : FiniteDistribution(init);
  return ProcessModel::hmm(std::move(kmat), std::move(emat), std::move(stationary),
                           std::move(initial));
}

}  // namespace aeplab
