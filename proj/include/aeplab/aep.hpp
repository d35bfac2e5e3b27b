#pragma once
// Simulation and classification of the generalized AEP: trajectories of
// L_n = -(1/n) log Q_n(B_n(X_1^n, D)) along a sampled source path, the
// pathology verdict for D = D_min, the random subsequence N_m on which L_n
// is finite, and the recurrence statistics of the centered walk
// W_n = sum_k (rho_Q(X_k) - D_min).
//
// Two theorem-backed equivalences are asserted at runtime and turned into
// permanent self-checks: L_n is finite exactly when the cumulative
// per-letter essential infimum stays within budget (the N_m
// characterization), and exactly when the per-word rate is finite (the
// Chernoff-bound pairing). Both need the codebook mixing condition, which is
// validated up front.

#include <cmath>
#include <cstdint>
#include <optional>
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

struct PathologyVerdict {
  bool pathological = false;
  bool d_equals_dmin = false;
  bool d_positive = false;
  bool dmin_finite = false;
  bool rate_finite = false;
  bool rho_q_constant = false;
};

// Pathology classification: the limit of L_n fails to exist with
// positive probability exactly when 0 < D = D_min < inf, the rate at D_min
// is finite, and rho_Q(X_1) is not a.s. constant. D_min and rho_Q come from
// the single-letter marginals (the mixing condition makes the memory case
// reduce to them); comparisons are exact rationals whenever inputs permit.
inline PathologyVerdict classify_pathology(const ProcessModel& source, const ProcessModel& codebook,
                                           const DistortionMatrix& rho, const Rational& distortion) {
  if (distortion.is_negative())
    throw std::invalid_argument("classify_pathology: distortion must be >= 0");
  const FiniteDistribution& p = source.marginal();
  const FiniteDistribution& q = codebook.marginal();
  detail::Threshold dmin{d_min(p, q, rho), d_min_exact(p, q, rho)};

  PathologyVerdict v;
  v.d_positive = Rational(0) < distortion;
  v.d_equals_dmin = dmin.compare(distortion.value(), distortion) == 0;
  v.dmin_finite = true;  // finite alphabets, finite rho
  v.rate_finite = rate_at_dmin(p, q, rho).is_finite();

  std::optional<std::int64_t> common;
  v.rho_q_constant = true;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    std::int64_t r = rho_q_scaled(static_cast<int>(x), q, rho);
    if (!common)
      common = r;
    else if (*common != r)
      v.rho_q_constant = false;
  }

  v.pathological =
      v.d_positive && v.d_equals_dmin && v.dmin_finite && v.rate_finite && !v.rho_q_constant;
  return v;
}

struct TrajectoryRecord {
  int n = 0;
  ExtReal l_n;
  ExtReal word_rate;
  double cum_rho_q_mean = 0.0;  // (1/n) sum_{k<=n} rho_Q(x_k)
  bool in_nm = false;           // cumulative mean <= D, exact comparison
  double walk_value = 0.0;      // W_n = sum_k (rho_Q(x_k) - D_min)
};

// One sampled source path, with every prefix length n <= n_max evaluated:
// l_n by the incremental ball DP (one sweep per symbol), the per-word rate,
// the cumulative rho_Q statistics, N_m membership and the centered walk.
// For memoryless codebooks the per-word rate reduces to the empirical-
// distribution rate (cheap, O(1) state per step); codebooks with memory
// rerun the transfer pass per prefix, which costs O(n_max^2) overall.
inline std::vector<TrajectoryRecord> run_trajectory(const ProcessModel& source,
                                                    const ProcessModel& codebook,
                                                    const DistortionMatrix& rho,
                                                    const Rational& distortion, int n_max,
                                                    std::uint64_t seed,
                                                    std::uint64_t cell_cap = kDefaultCellCap) {
  if (n_max < 1) throw std::invalid_argument("run_trajectory: n_max must be >= 1");
  if (distortion.is_negative())
    throw std::invalid_argument("run_trajectory: distortion must be >= 0");
  codebook.require_codebook_mixing("run_trajectory");
  source.require_irreducible_source("run_trajectory");
  if (source.alphabet_size() != rho.source_size() || codebook.alphabet_size() != rho.repro_size())
    throw std::invalid_argument("run_trajectory: alphabets do not match rho");

  const std::int64_t l = rho.common_denominator();
  const std::vector<int> path = sample_path(source, n_max, seed);

  const FiniteDistribution& p = source.marginal();
  const FiniteDistribution& q = codebook.marginal();
  const std::optional<Rational> dmin_x = d_min_exact(p, q, rho);
  const double dmin_d = d_min(p, q, rho);

  std::vector<std::int64_t> rho_q_row(rho.source_size());
  for (std::size_t x = 0; x < rho.source_size(); ++x)
    rho_q_row[x] = rho_q_scaled(static_cast<int>(x), q, rho);

  const std::int64_t cap = floor_scaled(distortion, n_max, l);
  BallDpEngine dp(codebook, rho, cap, cell_cap);
  const bool iid_codebook = codebook.is_iid();
  std::vector<std::int64_t> counts(rho.source_size(), 0);

  std::vector<TrajectoryRecord> out;
  out.reserve(static_cast<std::size_t>(n_max));
  std::int64_t cum = 0;

  for (int n = 1; n <= n_max; ++n) {
    const int x = path[static_cast<std::size_t>(n - 1)];
    dp.push(x);
    cum += rho_q_row[static_cast<std::size_t>(x)];
    ++counts[static_cast<std::size_t>(x)];

    TrajectoryRecord rec;
    rec.n = n;
    rec.cum_rho_q_mean =
        static_cast<double>(cum) / (static_cast<double>(n) * static_cast<double>(l));
    // in_Nm: cum / (n L) <= D, cross-multiplied in 128-bit integers
    rec.in_nm = static_cast<__int128>(cum) * distortion.den() <=
                static_cast<__int128>(distortion.num()) * n * l;

    if (dmin_x) {
      __int128 num = static_cast<__int128>(cum) * dmin_x->den() -
                     static_cast<__int128>(dmin_x->num()) * n * l;
      rec.walk_value = static_cast<double>(num) /
                       (static_cast<double>(l) * static_cast<double>(dmin_x->den()));
    } else {
      rec.walk_value = static_cast<double>(cum) / static_cast<double>(l) - n * dmin_d;
    }

    rec.l_n = BallResult::from_log_prob(dp.log_mass_at(floor_scaled(distortion, n, l)), n).l_n;
    if (iid_codebook) {
      rec.word_rate = rate(FiniteDistribution::from_counts(counts), q, rho, distortion).rate;
    } else {
      std::span<const int> prefix(path.data(), static_cast<std::size_t>(n));
      rec.word_rate = word_rate(prefix, codebook, rho, distortion, cell_cap);
    }

    // Theorem-backed self-checks; a mismatch is a bug, not a recoverable state.
    if (rec.in_nm != rec.l_n.is_finite())
      throw std::logic_error("run_trajectory: N_m membership disagrees with L_n finiteness at n=" +
                             std::to_string(n));
    if (rec.word_rate.is_finite() != rec.l_n.is_finite())
      throw std::logic_error("run_trajectory: word rate finiteness disagrees with L_n at n=" +
                             std::to_string(n));
    out.push_back(rec);
  }
  return out;
}

// Indices n with l_n finite. Re-asserts the N_m characterization before
// trusting the flags.
inline std::vector<int> finite_subsequence(const std::vector<TrajectoryRecord>& records) {
  std::vector<int> out;
  for (const auto& r : records) {
    if (r.in_nm != r.l_n.is_finite())
      throw std::logic_error("finite_subsequence: N_m membership disagrees with L_n finiteness");
    if (r.l_n.is_finite()) out.push_back(r.n);
  }
  return out;
}

struct WalkSummary {
  int positive_count = 0;        // n with W_n > 0
  int nonpositive_count = 0;     // n with W_n <= 0
  int longest_positive_run = 0;  // longest stretch of consecutive W_n > 0
  int sign_changes = 0;          // crossings between W_n > 0 and W_n <= 0
};

inline WalkSummary walk_statistics(const std::vector<TrajectoryRecord>& records) {
  WalkSummary s;
  int run = 0;
  std::optional<bool> prev;
  for (const auto& r : records) {
    const bool pos = r.walk_value > 0.0;
    if (pos) {
      ++s.positive_count;
      ++run;
      s.longest_positive_run = std::max(s.longest_positive_run, run);
    } else {
      ++s.nonpositive_count;
      run = 0;
    }
    if (prev && *prev != pos) ++s.sign_changes;
    prev = pos;
  }
  return s;
}

}  // namespace aeplab
