#pragma once
// Exact distortion-ball log-probabilities log Q_n(B_n(x_1^n, D)) by dynamic
// programming over (codebook state, accumulated scaled distortion), for
// memoryless, Markov and HMM codebooks; a full-enumeration oracle; and the
// per-word rate R_n(delta_x, Q_n, D) through transfer matrices.
//
// The DP state s is the integer sum of L * rho(x_k, y_k) where L is the
// common denominator of rho, and the ball condition rho_n <= D becomes
// s <= floor(n * L * D) with the floor taken in exact rational arithmetic.
// That makes the finite/infinite classification of L_n exact, which is the
// whole point at D = D_min. Mass above the cap can never be accepted later
// (distortion only accumulates), so it is dropped, which keeps the table
// window narrow. Masses live in the log domain: a reachable state is exactly
// "log mass > -inf" and no underflow can fake an infinite L_n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeplab/bignum.hpp"
#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/extended_real.hpp"
#include "aeplab/logsumexp.hpp"
#include "aeplab/process.hpp"
#include "aeplab/rate.hpp"
#include "aeplab/rational.hpp"

namespace aeplab {

inline constexpr std::uint64_t kDefaultCellCap = 100000000ULL;  // 1e8 DP cells
inline constexpr double kEnumerationGuard = 1e7;                // |T|^n limit for the oracle

class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& msg, std::uint64_t required)
      : std::runtime_error(msg), required_(required) {}
  std::uint64_t required() const { return required_; }

 private:
  std::uint64_t required_;
};

struct BallQuery {
  std::vector<int> word;
  ProcessModel codebook;
  DistortionMatrix rho;
  Rational distortion;
  std::uint64_t cell_cap = kDefaultCellCap;
  bool exact_probabilities = false;  // big-rational masses instead of log doubles

  void validate() const {
    if (word.empty()) throw std::invalid_argument("BallQuery: empty source word");
    if (codebook.alphabet_size() != rho.repro_size())
      throw std::invalid_argument("BallQuery: codebook alphabet does not match rho");
    for (int s : word)
      if (s < 0 || static_cast<std::size_t>(s) >= rho.source_size())
        throw std::invalid_argument("BallQuery: source symbol out of range");
    if (distortion.is_negative()) throw std::invalid_argument("BallQuery: distortion must be >= 0");
  }
};

struct BallResult {
  std::optional<double> log_prob;  // nullopt <=> ball mass exactly zero
  ExtReal l_n;                     // -log_prob / n; infinite iff log_prob absent

  static BallResult from_log_prob(std::optional<double> lp, std::size_t n) {
    BallResult r;
    if (lp) {
      r.log_prob = std::min(0.0, *lp);
      r.l_n = ExtReal::finite(-*r.log_prob / static_cast<double>(n) + 0.0);  // no negative zero
    } else {
      r.l_n = ExtReal::infinity();
    }
    return r;
  }
};

// ---------------------------------------------------------------------------
// Incremental DP engine (log-double masses). One instance carries the table
// for a growing prefix; trajectories push one symbol per step and query the
// accepted mass at each length's threshold. The caller owns the codebook and
// rho and keeps them alive.
// ---------------------------------------------------------------------------
class BallDpEngine {
 public:
  BallDpEngine(const ProcessModel& codebook, const DistortionMatrix& rho, std::int64_t cap_scaled,
               std::uint64_t cell_cap = kDefaultCellCap)
      : cb_(codebook), rho_(rho), cap_(cap_scaled), cell_cap_(cell_cap) {
    if (cb_.alphabet_size() != rho_.repro_size())
      throw std::invalid_argument("BallDpEngine: codebook alphabet does not match rho");
    nh_ = cb_.hidden_count();
    nt_ = cb_.alphabet_size();
    build_tables();
  }

  int length() const { return n_; }

  void push(int x) {
    if (x < 0 || static_cast<std::size_t>(x) >= rho_.source_size())
      throw std::invalid_argument("BallDpEngine: source symbol out of range");
    const bool first = (n_ == 0);
    if (!first && width() == 0) {
      ++n_;  // table already dead above the cap; stays dead
      return;
    }
    const auto& allowed = first ? emit_first_ : emit_later_;

    std::int64_t dmin = std::numeric_limits<std::int64_t>::max();
    std::int64_t dmax = std::numeric_limits<std::int64_t>::min();
    for (std::size_t y = 0; y < nt_; ++y) {
      if (!allowed[y]) continue;
      std::int64_t d = rho_.scaled(static_cast<std::size_t>(x), y);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (dmin > dmax) throw std::logic_error("BallDpEngine: no admissible codebook symbol");

    std::int64_t new_lo = (first ? 0 : lo_) + dmin;
    std::int64_t new_hi = std::min((first ? 0 : hi_) + dmax, cap_);
    if (new_lo > cap_) {  // every continuation overshoots; dead table
      cells_.clear();
      lo_ = 0;
      hi_ = -1;
      ++n_;
      return;
    }
    const std::size_t w = static_cast<std::size_t>(new_hi - new_lo + 1);
    cells_used_ += static_cast<std::uint64_t>(w) * nh_;
    if (cells_used_ > cell_cap_)
      throw ResourceError("ball DP state space needs at least " + std::to_string(cells_used_) +
                              " cells, cap is " + std::to_string(cell_cap_),
                          cells_used_);
    std::vector<double> next(w * nh_, kNegInf);

    auto bump = [&](std::size_t h, std::int64_t s, double v) {
      double& cell = next[h * w + static_cast<std::size_t>(s - new_lo)];
      cell = log_add(cell, v);
    };
    auto srow = [&](std::size_t y) { return rho_.scaled(static_cast<std::size_t>(x), y); };
    switch (cb_.kind()) {
      case ProcessModel::Kind::Iid: {
        for (std::size_t y = 0; y < nt_; ++y) {
          if (!allowed[y]) continue;
          const double wq = log_q_[y];
          const std::int64_t d = srow(y);
          if (first) {
            if (d <= cap_) bump(0, d, wq);
          } else {
            for (std::int64_t s = lo_; s <= hi_; ++s) {
              double src = cells_[idx(0, s)];
              if (src == kNegInf || s + d > cap_) continue;
              bump(0, s + d, src + wq);
            }
          }
        }
        break;
      }
      case ProcessModel::Kind::Markov: {
        for (std::size_t y2 = 0; y2 < nt_; ++y2) {
          if (!allowed[y2]) continue;
          const std::int64_t d = srow(y2);
          if (first) {
            if (log_init_[y2] != kNegInf && d <= cap_) bump(y2, d, log_init_[y2]);
            continue;
          }
          for (std::size_t y1 = 0; y1 < nh_; ++y1) {
            const double lk = log_k_[y1 * nt_ + y2];
            if (lk == kNegInf) continue;
            for (std::int64_t s = lo_; s <= hi_; ++s) {
              double src = cells_[idx(y1, s)];
              if (src == kNegInf || s + d > cap_) continue;
              bump(y2, s + d, src + lk);
            }
          }
        }
        break;
      }
      case ProcessModel::Kind::Hmm: {
        for (std::size_t h2 = 0; h2 < nh_; ++h2) {
          for (std::size_t y = 0; y < nt_; ++y) {
            const double le = log_e_[h2 * nt_ + y];
            if (le == kNegInf) continue;
            const std::int64_t d = srow(y);
            if (first) {
              if (log_init_[h2] != kNegInf && d <= cap_) bump(h2, d, log_init_[h2] + le);
              continue;
            }
            for (std::size_t h1 = 0; h1 < nh_; ++h1) {
              const double lk = log_k_[h1 * nh_ + h2];
              if (lk == kNegInf) continue;
              for (std::int64_t s = lo_; s <= hi_; ++s) {
                double src = cells_[idx(h1, s)];
                if (src == kNegInf || s + d > cap_) continue;
                bump(h2, s + d, src + lk + le);
              }
            }
          }
        }
        break;
      }
    }
    cells_.swap(next);
    lo_ = new_lo;
    hi_ = new_hi;
    ++n_;
  }

  // log of the mass with accumulated scaled distortion <= threshold;
  // nullopt means exactly zero (no reachable accepting state).
  std::optional<double> log_mass_at(std::int64_t threshold) const {
    if (n_ == 0) throw std::logic_error("BallDpEngine: no symbols pushed");
    if (width() == 0) return std::nullopt;
    std::int64_t top = std::min(hi_, threshold);
    if (top < lo_) return std::nullopt;
    double m = kNegInf;
    for (std::size_t h = 0; h < nh_; ++h)
      for (std::int64_t s = lo_; s <= top; ++s) m = std::max(m, cells_[idx(h, s)]);
    if (m == kNegInf) return std::nullopt;
    double acc = 0.0;
    for (std::size_t h = 0; h < nh_; ++h)
      for (std::int64_t s = lo_; s <= top; ++s) {
        double c = cells_[idx(h, s)];
        if (c != kNegInf) acc += std::exp(c - m);
      }
    return std::min(0.0, m + std::log(acc));
  }

 private:
  std::size_t width() const { return hi_ < lo_ ? 0 : static_cast<std::size_t>(hi_ - lo_ + 1); }
  std::size_t idx(std::size_t h, std::int64_t s) const {
    return h * width() + static_cast<std::size_t>(s - lo_);
  }
  void build_tables() {
    auto log_of = [](double v) { return v > 0.0 ? std::log(v) : kNegInf; };
    emit_first_.assign(nt_, 0);
    emit_later_.assign(nt_, 0);
    switch (cb_.kind()) {
      case ProcessModel::Kind::Iid: {
        log_q_.resize(nt_);
        for (std::size_t y = 0; y < nt_; ++y) {
          log_q_[y] = log_of(cb_.marginal().prob(y));
          emit_first_[y] = emit_later_[y] = cb_.marginal().in_support(y) ? 1 : 0;
        }
        break;
      }
      case ProcessModel::Kind::Markov: {
        const RowMatrix& k = cb_.transition();
        log_init_.resize(nt_);
        log_k_.resize(nt_ * nt_);
        for (std::size_t y = 0; y < nt_; ++y) {
          log_init_[y] = log_of(cb_.hidden_stationary().prob(y));
          emit_first_[y] = cb_.hidden_stationary().in_support(y) ? 1 : 0;
        }
        for (std::size_t a = 0; a < nt_; ++a)
          for (std::size_t b = 0; b < nt_; ++b) {
            log_k_[a * nt_ + b] = log_of(k.at(a, b));
            if (k.at(a, b) > 0.0) emit_later_[b] = 1;
          }
        break;
      }
      case ProcessModel::Kind::Hmm: {
        const RowMatrix& k = cb_.transition();
        const RowMatrix& e = cb_.emission();
        log_init_.resize(nh_);
        log_k_.resize(nh_ * nh_);
        log_e_.resize(nh_ * nt_);
        std::vector<char> col_reachable(nh_, 0);
        for (std::size_t a = 0; a < nh_; ++a)
          for (std::size_t b = 0; b < nh_; ++b) {
            log_k_[a * nh_ + b] = log_of(k.at(a, b));
            if (k.at(a, b) > 0.0) col_reachable[b] = 1;
          }
        for (std::size_t h = 0; h < nh_; ++h) {
          log_init_[h] = log_of(cb_.initial_hidden().prob(h));
          for (std::size_t y = 0; y < nt_; ++y) {
            log_e_[h * nt_ + y] = log_of(e.at(h, y));
            if (e.at(h, y) > 0.0) {
              if (cb_.initial_hidden().in_support(h)) emit_first_[y] = 1;
              if (col_reachable[h]) emit_later_[y] = 1;
            }
          }
        }
        break;
      }
    }
  }

  const ProcessModel& cb_;
  const DistortionMatrix& rho_;
  std::int64_t cap_;
  std::uint64_t cell_cap_;
  std::uint64_t cells_used_ = 0;
  std::size_t nh_ = 1;
  std::size_t nt_ = 1;
  int n_ = 0;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = -1;
  std::vector<double> cells_;
  std::vector<double> log_q_;
  std::vector<double> log_init_;
  std::vector<double> log_k_;
  std::vector<double> log_e_;
  std::vector<char> emit_first_;
  std::vector<char> emit_later_;
};

namespace detail {

// Integer numerators over one common denominator for a probability vector or
// a stochastic matrix; the exact DP multiplies numerators and tracks the
// denominator as a big-integer product.
struct ExactWeights {
  std::vector<std::uint64_t> num;
  std::uint64_t den = 1;
};

inline constexpr std::int64_t kMaxExactDenominator = 1000000000000000LL;  // 1e15

inline ExactWeights exact_weights(const std::vector<Rational>& entries, const std::string& what) {
  std::int64_t den = 1;
  for (const auto& e : entries) {
    den = lcm_checked(den, e.den());
    if (den > kMaxExactDenominator)
      throw std::domain_error(what + ": exact mode denominator exceeds 1e15");
  }
  ExactWeights w;
  w.den = static_cast<std::uint64_t>(den);
  w.num.reserve(entries.size());
  for (const auto& e : entries)
    w.num.push_back(static_cast<std::uint64_t>(e.num() * (den / e.den())));
  return w;
}

inline ExactWeights exact_weights(const FiniteDistribution& d, const std::string& what) {
  if (!d.has_exact())
    throw std::domain_error(what + ": exact mode requires exactly-rational probabilities");
  return exact_weights(d.exact(), what);
}

inline ExactWeights exact_weights(const RowMatrix& m, const std::string& what) {
  if (!m.exact)
    throw std::domain_error(what + ": exact mode requires exactly-rational matrix entries");
  return exact_weights(*m.exact, what);
}

// Big-rational ball DP: numerators in BigUint cells over [0, cap], the
// denominator tracked separately. Used as the correctness anchor; cost grows
// with word length, so this is a test/acceptance path, not the default.
inline std::optional<double> exact_ball_dp(const ProcessModel& cb, const DistortionMatrix& rho,
                                           std::span<const int> word, std::int64_t threshold,
                                           std::uint64_t cell_cap) {
  if (threshold < 0) return std::nullopt;
  const std::size_t nh = cb.hidden_count();
  const std::size_t nt = cb.alphabet_size();
  const std::size_t w = static_cast<std::size_t>(threshold) + 1;
  const std::uint64_t cells_needed =
      static_cast<std::uint64_t>(w) * nh * static_cast<std::uint64_t>(word.size());
  if (cells_needed > cell_cap)
    throw ResourceError("exact ball DP needs " + std::to_string(cells_needed) +
                            " cells, cap is " + std::to_string(cell_cap),
                        cells_needed);

  ExactWeights init, trans, emis;
  switch (cb.kind()) {
    case ProcessModel::Kind::Iid:
      init = exact_weights(cb.marginal(), "exact_ball_log_prob");
      break;
    case ProcessModel::Kind::Markov:
      init = exact_weights(cb.hidden_stationary(), "exact_ball_log_prob");
      trans = exact_weights(cb.transition(), "exact_ball_log_prob");
      break;
    case ProcessModel::Kind::Hmm:
      init = exact_weights(cb.initial_hidden(), "exact_ball_log_prob");
      trans = exact_weights(cb.transition(), "exact_ball_log_prob");
      emis = exact_weights(cb.emission(), "exact_ball_log_prob");
      break;
  }

  std::vector<BigUint> cells(w * nh);
  BigUint denom(1);
  auto at = [&](std::vector<BigUint>& v, std::size_t h, std::int64_t s) -> BigUint& {
    return v[h * w + static_cast<std::size_t>(s)];
  };

  for (std::size_t k = 0; k < word.size(); ++k) {
    const auto x = static_cast<std::size_t>(word[k]);
    const bool first = (k == 0);
    std::vector<BigUint> next(w * nh);
    switch (cb.kind()) {
      case ProcessModel::Kind::Iid: {
        denom.mul_small(init.den);
        for (std::size_t y = 0; y < nt; ++y) {
          if (init.num[y] == 0) continue;
          std::int64_t d = rho.scaled(x, y);
          if (first) {
            if (d <= threshold) {
              BigUint m(init.num[y]);
              at(next, 0, d).add(m);
            }
            continue;
          }
          for (std::int64_t s = 0; s + d <= threshold; ++s) {
            BigUint src = at(cells, 0, s);
            if (src.is_zero()) continue;
            src.mul_small(init.num[y]);
            at(next, 0, s + d).add(src);
          }
        }
        break;
      }
      case ProcessModel::Kind::Markov: {
        denom.mul_small(first ? init.den : trans.den);
        for (std::size_t y2 = 0; y2 < nt; ++y2) {
          std::int64_t d = rho.scaled(x, y2);
          if (first) {
            if (init.num[y2] != 0 && d <= threshold) {
              BigUint m(init.num[y2]);
              at(next, y2, d).add(m);
            }
            continue;
          }
          for (std::size_t y1 = 0; y1 < nh; ++y1) {
            std::uint64_t kn = trans.num[y1 * nt + y2];
            if (kn == 0) continue;
            for (std::int64_t s = 0; s + d <= threshold; ++s) {
              BigUint src = at(cells, y1, s);
              if (src.is_zero()) continue;
              src.mul_small(kn);
              at(next, y2, s + d).add(src);
            }
          }
        }
        break;
      }
      case ProcessModel::Kind::Hmm: {
        denom.mul_small(first ? init.den : trans.den);
        denom.mul_small(emis.den);
        for (std::size_t h2 = 0; h2 < nh; ++h2) {
          for (std::size_t y = 0; y < nt; ++y) {
            std::uint64_t en = emis.num[h2 * nt + y];
            if (en == 0) continue;
            std::int64_t d = rho.scaled(x, y);
            if (first) {
              if (init.num[h2] != 0 && d <= threshold) {
                BigUint m(init.num[h2]);
                m.mul_small(en);
                at(next, h2, d).add(m);
              }
              continue;
            }
            for (std::size_t h1 = 0; h1 < nh; ++h1) {
              std::uint64_t kn = trans.num[h1 * nh + h2];
              if (kn == 0) continue;
              for (std::int64_t s = 0; s + d <= threshold; ++s) {
                BigUint src = at(cells, h1, s);
                if (src.is_zero()) continue;
                src.mul_small(kn);
                src.mul_small(en);
                at(next, h2, s + d).add(src);
              }
            }
          }
        }
        break;
      }
    }
    cells.swap(next);
  }

  BigUint total;
  for (const auto& c : cells) total.add(c);
  if (total.is_zero()) return std::nullopt;
  return std::min(0.0, total.log_e() - denom.log_e());
}

}  // namespace detail

// log Q_n(B_n(x, D)) by the scaled-distortion DP. The result is exact up to
// floating accumulation; pass exact_probabilities for big-rational masses.
inline BallResult exact_ball_log_prob(const BallQuery& q) {
  q.validate();
  const std::size_t n = q.word.size();
  const std::int64_t threshold =
      floor_scaled(q.distortion, static_cast<std::int64_t>(n), q.rho.common_denominator());
  if (q.exact_probabilities)
    return BallResult::from_log_prob(
        detail::exact_ball_dp(q.codebook, q.rho, q.word, threshold, q.cell_cap), n);
  BallDpEngine dp(q.codebook, q.rho, threshold, q.cell_cap);
  for (int s : q.word) dp.push(s);
  return BallResult::from_log_prob(dp.log_mass_at(threshold), n);
}

// Full enumeration over all |T|^n reproduction words; the independent oracle
// for the DP. Distortions are compared in exact integers, masses accumulate
// in long double.
inline BallResult enumerate_ball_log_prob(const BallQuery& q) {
  q.validate();
  const std::size_t n = q.word.size();
  const std::size_t nt = q.codebook.alphabet_size();
  double count = std::pow(static_cast<double>(nt), static_cast<double>(n));
  if (count > kEnumerationGuard)
    throw ResourceError("enumeration needs |T|^n = " + std::to_string(count) +
                            " words, guard is 1e7",
                        static_cast<std::uint64_t>(count));
  const std::int64_t threshold =
      floor_scaled(q.distortion, static_cast<std::int64_t>(n), q.rho.common_denominator());

  std::vector<int> y(n, 0);
  long double total = 0.0L;
  bool any = false;
  while (true) {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < n; ++k)
      s += q.rho.scaled(static_cast<std::size_t>(q.word[k]), static_cast<std::size_t>(y[k]));
    if (s <= threshold) {
      double lp = path_log_prob(q.codebook, y);
      if (lp != kNegInf) {
        total += std::exp(static_cast<long double>(lp));
        any = true;
      }
    }
    std::size_t i = n;
    while (i > 0 && ++y[i - 1] == static_cast<int>(nt)) {
      y[i - 1] = 0;
      --i;
    }
    if (i == 0) break;
  }
  if (!any || total <= 0.0L) return BallResult::from_log_prob(std::nullopt, n);
  return BallResult::from_log_prob(static_cast<double>(std::log(total)), n);
}

// ---------------------------------------------------------------------------
// Per-word log-MGF g(t) = log E exp(t * sum_k rho(x_k, Y_k)) and its
// t-derivative, by a transfer-matrix pass over codebook states in the log
// domain. This is the engine behind R_n(delta_x, Q_n, D).
// ---------------------------------------------------------------------------
struct MgfPoint {
  double value;
  double slope;
};

inline MgfPoint word_log_mgf(const ProcessModel& cb, const DistortionMatrix& rho,
                             std::span<const int> word, double t) {
  const std::size_t nt = cb.alphabet_size();
  const std::size_t nh = cb.hidden_count();
  auto log_of = [](double v) { return v > 0.0 ? std::log(v) : kNegInf; };

  switch (cb.kind()) {
    case ProcessModel::Kind::Iid: {
      double g = 0.0, gp = 0.0;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        double m = kNegInf;
        for (std::size_t y = 0; y < nt; ++y)
          if (cb.marginal().in_support(y))
            m = std::max(m, log_of(cb.marginal().prob(y)) + t * rho.real(x, y));
        double den = 0.0, num = 0.0;
        for (std::size_t y = 0; y < nt; ++y) {
          if (!cb.marginal().in_support(y)) continue;
          double w = std::exp(log_of(cb.marginal().prob(y)) + t * rho.real(x, y) - m);
          den += w;
          num += w * rho.real(x, y);
        }
        g += m + std::log(den);
        gp += num / den;
      }
      return {g, gp};
    }
    case ProcessModel::Kind::Markov: {
      const RowMatrix& k = cb.transition();
      std::vector<double> a(nt, kNegInf), b(nt, 0.0), a2(nt), b2(nt);
      bool first = true;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        if (first) {
          for (std::size_t y = 0; y < nt; ++y) {
            a[y] = log_of(cb.hidden_stationary().prob(y)) + t * rho.real(x, y);
            b[y] = rho.real(x, y);
          }
          first = false;
          continue;
        }
        for (std::size_t y2 = 0; y2 < nt; ++y2) {
          double m = kNegInf;
          for (std::size_t y1 = 0; y1 < nt; ++y1)
            m = std::max(m, a[y1] + log_of(k.at(y1, y2)));
          if (m == kNegInf) {
            a2[y2] = kNegInf;
            b2[y2] = 0.0;
            continue;
          }
          double den = 0.0, num = 0.0;
          for (std::size_t y1 = 0; y1 < nt; ++y1) {
            double lk = log_of(k.at(y1, y2));
            if (a[y1] == kNegInf || lk == kNegInf) continue;
            double w = std::exp(a[y1] + lk - m);
            den += w;
            num += w * b[y1];
          }
          a2[y2] = m + std::log(den) + t * rho.real(x, y2);
          b2[y2] = num / den + rho.real(x, y2);
        }
        a.swap(a2);
        b.swap(b2);
      }
      double m = kNegInf;
      for (double v : a) m = std::max(m, v);
      double den = 0.0, num = 0.0;
      for (std::size_t y = 0; y < nt; ++y) {
        if (a[y] == kNegInf) continue;
        double w = std::exp(a[y] - m);
        den += w;
        num += w * b[y];
      }
      return {m + std::log(den), num / den};
    }
    case ProcessModel::Kind::Hmm: {
      const RowMatrix& k = cb.transition();
      const RowMatrix& e = cb.emission();
      auto emit = [&](std::size_t h, std::size_t x) -> MgfPoint {
        double m = kNegInf;
        for (std::size_t y = 0; y < nt; ++y) {
          double le = log_of(e.at(h, y));
          if (le != kNegInf) m = std::max(m, le + t * rho.real(x, y));
        }
        if (m == kNegInf) return {kNegInf, 0.0};
        double den = 0.0, num = 0.0;
        for (std::size_t y = 0; y < nt; ++y) {
          double le = log_of(e.at(h, y));
          if (le == kNegInf) continue;
          double w = std::exp(le + t * rho.real(x, y) - m);
          den += w;
          num += w * rho.real(x, y);
        }
        return {m + std::log(den), num / den};
      };
      std::vector<double> a(nh, kNegInf), b(nh, 0.0), a2(nh), b2(nh);
      bool first = true;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        if (first) {
          for (std::size_t h = 0; h < nh; ++h) {
            MgfPoint em = emit(h, x);
            a[h] = log_of(cb.initial_hidden().prob(h)) + em.value;
            b[h] = em.slope;
          }
          first = false;
          continue;
        }
        for (std::size_t h2 = 0; h2 < nh; ++h2) {
          double m = kNegInf;
          for (std::size_t h1 = 0; h1 < nh; ++h1)
            m = std::max(m, a[h1] + log_of(k.at(h1, h2)));
          MgfPoint em = emit(h2, x);
          if (m == kNegInf || em.value == kNegInf) {
            a2[h2] = kNegInf;
            b2[h2] = 0.0;
            continue;
          }
          double den = 0.0, num = 0.0;
          for (std::size_t h1 = 0; h1 < nh; ++h1) {
            double lk = log_of(k.at(h1, h2));
            if (a[h1] == kNegInf || lk == kNegInf) continue;
            double w = std::exp(a[h1] + lk - m);
            den += w;
            num += w * b[h1];
          }
          a2[h2] = m + std::log(den) + em.value;
          b2[h2] = num / den + em.slope;
        }
        a.swap(a2);
        b.swap(b2);
      }
      double m = kNegInf;
      for (double v : a) m = std::max(m, v);
      if (m == kNegInf) return {kNegInf, 0.0};
      double den = 0.0, num = 0.0;
      for (std::size_t h = 0; h < nh; ++h) {
        if (a[h] == kNegInf) continue;
        double w = std::exp(a[h] - m);
        den += w;
        num += w * b[h];
      }
      return {m + std::log(den), num / den};
    }
  }
  return {kNegInf, 0.0};
}

namespace detail {

// Reachable essential infimum of sum_k L * rho(x_k, Y_k): a min-plus pass
// over codebook states. For mixing codebooks this coincides with
// sum_k rho_Q(x_k) computed from the single-letter marginal.
inline std::int64_t reachable_min_scaled(const ProcessModel& cb, const DistortionMatrix& rho,
                                         std::span<const int> word) {
  const std::size_t nt = cb.alphabet_size();
  const std::size_t nh = cb.hidden_count();
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  switch (cb.kind()) {
    case ProcessModel::Kind::Iid: {
      std::int64_t acc = 0;
      for (int x : word) acc += rho_q_scaled(x, cb.marginal(), rho);
      return acc;
    }
    case ProcessModel::Kind::Markov: {
      const RowMatrix& k = cb.transition();
      std::vector<std::int64_t> v(nt, inf), v2(nt);
      bool first = true;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        if (first) {
          for (std::size_t y = 0; y < nt; ++y)
            v[y] = cb.hidden_stationary().in_support(y) ? rho.scaled(x, y) : inf;
          first = false;
          continue;
        }
        for (std::size_t y2 = 0; y2 < nt; ++y2) {
          std::int64_t best = inf;
          for (std::size_t y1 = 0; y1 < nt; ++y1)
            if (k.at(y1, y2) > 0.0 && v[y1] < best) best = v[y1];
          v2[y2] = best >= inf ? inf : best + rho.scaled(x, y2);
        }
        v.swap(v2);
      }
      std::int64_t best = inf;
      for (auto x : v) best = std::min(best, x);
      return best;
    }
    case ProcessModel::Kind::Hmm: {
      const RowMatrix& k = cb.transition();
      const RowMatrix& e = cb.emission();
      auto emit_min = [&](std::size_t h, std::size_t x) {
        std::int64_t best = inf;
        for (std::size_t y = 0; y < nt; ++y)
          if (e.at(h, y) > 0.0) best = std::min(best, rho.scaled(x, y));
        return best;
      };
      std::vector<std::int64_t> v(nh, inf), v2(nh);
      bool first = true;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        if (first) {
          for (std::size_t h = 0; h < nh; ++h)
            v[h] = cb.initial_hidden().in_support(h) ? emit_min(h, x) : inf;
          first = false;
          continue;
        }
        for (std::size_t h2 = 0; h2 < nh; ++h2) {
          std::int64_t best = inf;
          for (std::size_t h1 = 0; h1 < nh; ++h1)
            if (k.at(h1, h2) > 0.0 && v[h1] < best) best = v[h1];
          std::int64_t em = emit_min(h2, x);
          v2[h2] = (best >= inf || em >= inf) ? inf : best + em;
        }
        v.swap(v2);
      }
      std::int64_t best = inf;
      for (auto x : v) best = std::min(best, x);
      return best;
    }
  }
  return inf;
}

// sum_k E rho(x_k, Y_k), propagating the hidden marginal so non-stationary
// starts (blockified codebooks) are handled too.
inline double word_average_distortion(const ProcessModel& cb, const DistortionMatrix& rho,
                                      std::span<const int> word) {
  const std::size_t nt = cb.alphabet_size();
  switch (cb.kind()) {
    case ProcessModel::Kind::Iid:
    case ProcessModel::Kind::Markov: {
      double acc = 0.0;
      const FiniteDistribution& q = cb.marginal();
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        for (std::size_t y = 0; y < nt; ++y)
          if (q.in_support(y)) acc += q.prob(y) * rho.real(x, y);
      }
      return acc;
    }
    case ProcessModel::Kind::Hmm: {
      const RowMatrix& k = cb.transition();
      const RowMatrix& e = cb.emission();
      const std::size_t nh = cb.hidden_count();
      std::vector<double> hm(nh), hm2(nh);
      for (std::size_t h = 0; h < nh; ++h) hm[h] = cb.initial_hidden().prob(h);
      double acc = 0.0;
      bool first = true;
      for (int xs : word) {
        const auto x = static_cast<std::size_t>(xs);
        if (!first) {
          for (std::size_t h2 = 0; h2 < nh; ++h2) {
            double s = 0.0;
            for (std::size_t h1 = 0; h1 < nh; ++h1) s += hm[h1] * k.at(h1, h2);
            hm2[h2] = s;
          }
          hm.swap(hm2);
        }
        first = false;
        for (std::size_t h = 0; h < nh; ++h)
          for (std::size_t y = 0; y < nt; ++y) acc += hm[h] * e.at(h, y) * rho.real(x, y);
      }
      return acc;
    }
  }
  return 0.0;
}

}  // namespace detail

// R_n(delta_x, Q_n, D) = (1/n) sup_{lambda<=0} [lambda n D - g(lambda)] with
// g the per-word log-MGF. The sup is infinite strictly below the reachable
// essential infimum; exactly there it equals L_n (Chernoff with equality), so
// that branch reuses the ball DP; the interior goes through the same
// bracket-and-bisect as the single-letter rate.
inline ExtReal word_rate(std::span<const int> word, const ProcessModel& codebook,
                         const DistortionMatrix& rho, const Rational& distortion,
                         std::uint64_t cell_cap = kDefaultCellCap) {
  if (word.empty()) throw std::invalid_argument("word_rate: empty source word");
  if (codebook.alphabet_size() != rho.repro_size())
    throw std::invalid_argument("word_rate: codebook alphabet does not match rho");
  if (distortion.is_negative()) throw std::invalid_argument("word_rate: distortion must be >= 0");
  const auto n = static_cast<std::int64_t>(word.size());
  const std::int64_t l = rho.common_denominator();

  const std::int64_t smin = detail::reachable_min_scaled(codebook, rho, word);
  const __int128 lhs = static_cast<__int128>(smin) * distortion.den();
  const __int128 rhs = static_cast<__int128>(distortion.num()) * n * l;
  if (rhs < lhs) return ExtReal::infinity();
  if (rhs == lhs) {
    BallDpEngine dp(codebook, rho, smin, cell_cap);
    for (int s : word) dp.push(s);
    auto lp = dp.log_mass_at(smin);
    if (!lp) return ExtReal::infinity();  // unreachable: smin is attained
    return ExtReal::finite(-*lp / static_cast<double>(n));
  }

  const double nd = static_cast<double>(n) * distortion.value();
  if (nd >= detail::word_average_distortion(codebook, rho, word)) return ExtReal::finite(0.0);

  double t = detail::bracket_bisect_slope(
      [&](double tt) { return word_log_mgf(codebook, rho, word, tt).slope; }, nd);
  double g = word_log_mgf(codebook, rho, word, t).value;
  return ExtReal::finite(std::max(0.0, t * nd - g) / static_cast<double>(n));
}

// R(P_x, Q, D): the empirical-distribution variant of the per-word rate.
inline ExtReal empirical_rate(std::span<const int> word, const FiniteDistribution& q,
                              const DistortionMatrix& rho, const Rational& distortion) {
  return rate(empirical_distribution(word, rho.source_size()), q, rho, distortion).rate;
}

}  // namespace aeplab
