#pragma once
// Stationary source/codebook processes over finite alphabets: i.i.d.,
// Markov chains, and hidden Markov models. Includes the stationary
// distribution solver, the strong mixing constant C, the per-letter
// essential infimum rho_Q, seeded path sampling, and path likelihoods.
//
// Codebook processes must satisfy the mixing condition
//   C^{-1} Q(A) Q(B) <= Q(A n B) <= C Q(A) Q(B),
// which for a finite chain means strictly positive transition probabilities.
// Source chains only need irreducibility; periodic sources are legitimate
// (and are exactly where the D = D_min pathology shows its teeth).

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/logsumexp.hpp"
#include "aeplab/rational.hpp"
#include "aeplab/rng.hpp"

namespace aeplab {

inline constexpr double kStationaryFixTol = 1e-10;
inline constexpr double kPowerIterTol = 1e-13;
inline constexpr int kPowerIterCap = 1000000;

// Row-major matrix of reals with an optional exact rational view (kept only
// when every entry is exactly rational, same policy as FiniteDistribution).
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;
  std::optional<std::vector<Rational>> exact;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c, std::vector<double> vals)
      : rows(r), cols(c), v(std::move(vals)) {
    if (v.size() != rows * cols) throw std::invalid_argument("RowMatrix: size mismatch");
    attach_exact();
  }

  static RowMatrix from_rationals(std::size_t r, std::size_t c, std::vector<Rational> vals) {
    if (vals.size() != r * c) throw std::invalid_argument("RowMatrix: size mismatch");
    RowMatrix m;
    m.rows = r;
    m.cols = c;
    m.v.reserve(vals.size());
    for (const auto& x : vals) m.v.push_back(x.value());
    m.exact = std::move(vals);
    return m;
  }

  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  void require_row_stochastic(const std::string& what, double tol = kProbSumTol) const {
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        double x = at(i, j);
        if (!(x >= 0.0))
          throw std::invalid_argument(what + ": negative entry in row " + std::to_string(i));
        sum += x;
      }
      if (std::fabs(sum - 1.0) > tol)
        throw std::invalid_argument(what + ": row " + std::to_string(i) + " sums to " +
                                    std::to_string(sum) + ", expected 1");
    }
  }

 private:
  void attach_exact() {
    std::vector<Rational> e;
    e.reserve(v.size());
    for (double x : v) {
      auto r = Rational::from_double(x);
      if (!r) return;
      e.push_back(*r);
    }
    exact = std::move(e);
  }
};

namespace detail {

inline bool strongly_connected(const RowMatrix& k) {
  const std::size_t n = k.rows;
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < n; ++w) {
        double edge = transpose ? k.at(w, u) : k.at(u, w);
        if (edge > 0.0 && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    for (char c : seen)
      if (!c) return false;
    return true;
  };
  return reach(false) && reach(true);
}

// Exact stationary row vector of an irreducible rational chain, by Gaussian
// elimination on (K^T - I) with the normalization row appended. Returns
// nullopt when entries are not exactly rational or int64 overflows.
inline std::optional<std::vector<Rational>> exact_stationary(const RowMatrix& k) {
  if (!k.exact) return std::nullopt;
  const std::size_t n = k.rows;
  try {
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] = (*k.exact)[j * n + i];  // K^T
        if (i == j) a[i][j] = a[i][j] - Rational(1);
      }
    }
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = Rational(1);
    a[n - 1][n] = Rational(1);

    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      while (pivot < n && a[pivot][col].is_zero()) ++pivot;
      if (pivot == n) return std::nullopt;
      std::swap(a[col], a[pivot]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col || a[r][col].is_zero()) continue;
        Rational f = a[r][col] / a[col][col];
        for (std::size_t c = col; c <= n; ++c) a[r][c] = a[r][c] - f * a[col][c];
      }
    }
    std::vector<Rational> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
    Rational sum(0);
    for (const auto& p : pi) {
      if (p.is_negative()) return std::nullopt;
      sum = sum + p;
    }
    if (!(sum == Rational(1))) return std::nullopt;
    return pi;
  } catch (const std::overflow_error&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Stationary distribution of an irreducible row-stochastic matrix. Damped
// power iteration on (K + I)/2 (same fixed point, converges for periodic
// chains too) to 1e-13, capped at 1e6 sweeps. Carries an exact rational view
// whenever the chain does and the exact solve stays inside int64.
inline FiniteDistribution stationary_distribution(const RowMatrix& transition) {
  if (transition.rows != transition.cols || transition.rows == 0)
    throw std::invalid_argument("stationary_distribution: transition must be square");
  transition.require_row_stochastic("stationary_distribution");
  if (!detail::strongly_connected(transition))
    throw std::domain_error(
        "stationary_distribution: transition graph is reducible, stationary law is not unique");

  const std::size_t n = transition.rows;
  if (auto exact = detail::exact_stationary(transition)) return FiniteDistribution::from_rationals(*exact);

  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  for (int it = 0; it < kPowerIterCap; ++it) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.5 * pi[j];
      for (std::size_t i = 0; i < n; ++i) acc += 0.5 * pi[i] * transition.at(i, j);
      next[j] = acc;
    }
    double delta = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      delta = std::max(delta, std::fabs(next[j] - pi[j]));
      sum += next[j];
    }
    for (std::size_t j = 0; j < n; ++j) pi[j] = next[j] / sum;
    if (delta <= kPowerIterTol) break;
  }
  return FiniteDistribution(pi);
}

class ProcessModel {
 public:
  enum class Kind { Iid, Markov, Hmm };

  static ProcessModel iid(FiniteDistribution marginal) {
    ProcessModel m;
    m.kind_ = Kind::Iid;
    m.marginal_ = std::move(marginal);
    return m;
  }

  static ProcessModel markov(RowMatrix transition) {
    FiniteDistribution pi = stationary_distribution(transition);
    return markov(std::move(transition), std::move(pi));
  }

  static ProcessModel markov(RowMatrix transition, FiniteDistribution stationary) {
    if (transition.rows != transition.cols)
      throw std::invalid_argument("ProcessModel: transition must be square");
    transition.require_row_stochastic("ProcessModel(markov)");
    if (stationary.size() != transition.rows)
      throw std::invalid_argument("ProcessModel: stationary size mismatch");
    require_fixed_point(transition, stationary, "ProcessModel(markov)");
    ProcessModel m;
    m.kind_ = Kind::Markov;
    m.transition_ = std::move(transition);
    m.hidden_stationary_ = stationary;
    m.marginal_ = std::move(stationary);
    return m;
  }

  static ProcessModel hmm(RowMatrix hidden_transition, RowMatrix emission) {
    FiniteDistribution pi = stationary_distribution(hidden_transition);
    return hmm(std::move(hidden_transition), std::move(emission), std::move(pi), std::nullopt);
  }

  // The initial hidden law defaults to the stationary one. Block-i.i.d.
  // approximating codebooks pin a start phase instead, which is the one place
  // a non-stationary start is deliberate.
  static ProcessModel hmm(RowMatrix hidden_transition, RowMatrix emission,
                          FiniteDistribution hidden_stationary,
                          std::optional<FiniteDistribution> initial_hidden) {
    if (hidden_transition.rows != hidden_transition.cols)
      throw std::invalid_argument("ProcessModel: hidden transition must be square");
    hidden_transition.require_row_stochastic("ProcessModel(hmm) transition");
    emission.require_row_stochastic("ProcessModel(hmm) emission");
    if (emission.rows != hidden_transition.rows)
      throw std::invalid_argument("ProcessModel: emission rows must match hidden states");
    if (hidden_stationary.size() != hidden_transition.rows)
      throw std::invalid_argument("ProcessModel: hidden stationary size mismatch");
    require_fixed_point(hidden_transition, hidden_stationary, "ProcessModel(hmm)");
    if (initial_hidden && initial_hidden->size() != hidden_transition.rows)
      throw std::invalid_argument("ProcessModel: initial hidden size mismatch");

    ProcessModel m;
    m.kind_ = Kind::Hmm;
    m.transition_ = std::move(hidden_transition);
    m.emission_ = std::move(emission);
    m.hidden_stationary_ = hidden_stationary;
    m.initial_hidden_ = initial_hidden ? std::move(*initial_hidden) : hidden_stationary;
    m.marginal_ = observation_marginal(*m.initial_hidden_, *m.emission_);
    return m;
  }

  Kind kind() const { return kind_; }
  bool is_iid() const { return kind_ == Kind::Iid; }

  std::size_t alphabet_size() const {
    return kind_ == Kind::Hmm ? emission_->cols : marginal_->size();
  }
  std::size_t hidden_count() const {
    switch (kind_) {
      case Kind::Iid: return 1;
      case Kind::Markov: return transition_->rows;
      case Kind::Hmm: return transition_->rows;
    }
    return 1;
  }

  // Law of the first observed symbol (the stationary single-letter marginal
  // for stationary models).
  const FiniteDistribution& marginal() const { return *marginal_; }

  const RowMatrix& transition() const {
    if (kind_ == Kind::Iid) throw std::logic_error("ProcessModel: iid model has no transition");
    return *transition_;
  }
  const RowMatrix& emission() const {
    if (kind_ != Kind::Hmm) throw std::logic_error("ProcessModel: not an HMM");
    return *emission_;
  }
  const FiniteDistribution& hidden_stationary() const {
    if (kind_ == Kind::Iid) throw std::logic_error("ProcessModel: iid model has no hidden chain");
    return *hidden_stationary_;
  }
  const FiniteDistribution& initial_hidden() const {
    if (kind_ == Kind::Hmm) return *initial_hidden_;
    return hidden_stationary();
  }

  // Codebook validity: memoryless always; chains need all transitions > 0.
  bool satisfies_codebook_mixing() const {
    if (kind_ == Kind::Iid) return true;
    for (double x : transition_->v)
      if (!(x > 0.0)) return false;
    return true;
  }
  void require_codebook_mixing(const std::string& what) const {
    if (!satisfies_codebook_mixing())
      throw std::domain_error(what + ": codebook chain has a zero transition probability");
  }

  // Source validity: the chain must be irreducible (periodic is fine).
  void require_irreducible_source(const std::string& what) const {
    if (kind_ == Kind::Iid) return;
    if (!detail::strongly_connected(*transition_))
      throw std::domain_error(what + ": source chain is reducible");
  }

 private:
  static void require_fixed_point(const RowMatrix& k, const FiniteDistribution& pi,
                                  const std::string& what) {
    for (std::size_t j = 0; j < k.cols; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k.rows; ++i) acc += pi.prob(i) * k.at(i, j);
      if (std::fabs(acc - pi.prob(j)) > kStationaryFixTol)
        throw std::invalid_argument(what + ": stationary vector is not a fixed point within 1e-10");
    }
  }

  static FiniteDistribution observation_marginal(const FiniteDistribution& hidden,
                                                 const RowMatrix& emission) {
    std::vector<double> probs(emission.cols, 0.0);
    for (std::size_t h = 0; h < emission.rows; ++h)
      for (std::size_t y = 0; y < emission.cols; ++y) probs[y] += hidden.prob(h) * emission.at(h, y);
    double sum = 0.0;
    for (double& p : probs) sum += p;
    for (double& p : probs) p /= sum;  // shave accumulation dust
    if (hidden.has_exact() && emission.exact) {
      std::vector<Rational> e(emission.cols, Rational(0));
      try {
        for (std::size_t h = 0; h < emission.rows; ++h)
          for (std::size_t y = 0; y < emission.cols; ++y)
            e[y] = e[y] + hidden.exact()[h] * (*emission.exact)[h * emission.cols + y];
        return FiniteDistribution::from_rationals(e);
      } catch (const std::exception&) {
        // fall through to the double view
      }
    }
    return FiniteDistribution(probs);
  }

  Kind kind_ = Kind::Iid;
  std::optional<FiniteDistribution> marginal_;
  std::optional<RowMatrix> transition_;
  std::optional<RowMatrix> emission_;
  std::optional<FiniteDistribution> hidden_stationary_;
  std::optional<FiniteDistribution> initial_hidden_;
};

// Strong mixing constant. Memoryless processes are exactly 1. For a chain
// with stationary pi, C = max over (s, s') of max(K(s,s')/pi(s'),
// pi(s')/K(s,s')); an HMM inherits the constant of its hidden chain (the
// observation sigma-fields are coarser). A zero transition entry means the
// constant is infinite, which is an error.
inline double mixing_constant(const ProcessModel& model) {
  if (model.is_iid()) return 1.0;
  model.require_codebook_mixing("mixing_constant");
  const RowMatrix& k = model.transition();
  const FiniteDistribution& pi = model.hidden_stationary();
  double c = 1.0;
  for (std::size_t s = 0; s < k.rows; ++s)
    for (std::size_t t = 0; t < k.cols; ++t) {
      double ratio = k.at(s, t) / pi.prob(t);
      c = std::max(c, std::max(ratio, 1.0 / ratio));
    }
  return c;
}

// Essential infimum of rho(x, Y) under the codebook single-letter marginal:
// the cheapest reproduction the codebook ever offers symbol x. Scaled variant
// returns the exact integer rho_Q(x) * L.
inline std::int64_t rho_q_scaled(int x, const FiniteDistribution& codebook_marginal,
                                 const DistortionMatrix& rho) {
  if (x < 0 || static_cast<std::size_t>(x) >= rho.source_size())
    throw std::invalid_argument("rho_q: source symbol out of range");
  if (codebook_marginal.size() != rho.repro_size())
    throw std::invalid_argument("rho_q: codebook alphabet does not match rho");
  std::int64_t best = -1;
  for (std::size_t y = 0; y < rho.repro_size(); ++y) {
    if (!codebook_marginal.in_support(y)) continue;
    std::int64_t s = rho.scaled(static_cast<std::size_t>(x), y);
    if (best < 0 || s < best) best = s;
  }
  if (best < 0) throw std::invalid_argument("rho_q: codebook marginal has empty support");
  return best;
}

inline double rho_q(int x, const FiniteDistribution& codebook_marginal, const DistortionMatrix& rho) {
  return static_cast<double>(rho_q_scaled(x, codebook_marginal, rho)) /
         static_cast<double>(rho.common_denominator());
}

// Deterministic sample of n observed symbols. The first symbol comes from the
// model's initial law (stationary for stationary models), so the path law is
// stationary. HMM paths expose observations only.
inline std::vector<int> sample_path(const ProcessModel& model, int n, Xoshiro256& rng) {
  if (n < 1) throw std::invalid_argument("sample_path: n must be >= 1");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& p = model.marginal().probs();
      for (int k = 0; k < n; ++k) out.push_back(rng.discrete(p));
      break;
    }
    case ProcessModel::Kind::Markov: {
      const RowMatrix& k = model.transition();
      int state = rng.discrete(model.hidden_stationary().probs());
      out.push_back(state);
      for (int step = 1; step < n; ++step) {
        std::span<const double> row(k.v.data() + static_cast<std::size_t>(state) * k.cols, k.cols);
        state = rng.discrete(row);
        out.push_back(state);
      }
      break;
    }
    case ProcessModel::Kind::Hmm: {
      const RowMatrix& k = model.transition();
      const RowMatrix& e = model.emission();
      int h = rng.discrete(model.initial_hidden().probs());
      for (int step = 0; step < n; ++step) {
        if (step > 0) {
          std::span<const double> row(k.v.data() + static_cast<std::size_t>(h) * k.cols, k.cols);
          h = rng.discrete(row);
        }
        std::span<const double> erow(e.v.data() + static_cast<std::size_t>(h) * e.cols, e.cols);
        out.push_back(rng.discrete(erow));
      }
      break;
    }
  }
  return out;
}

inline std::vector<int> sample_path(const ProcessModel& model, int n, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  return sample_path(model, n, rng);
}

// log P(word) under the model (forward algorithm for HMMs); -inf when the
// word has probability zero.
inline double path_log_prob(const ProcessModel& model, std::span<const int> word) {
  if (word.empty()) throw std::invalid_argument("path_log_prob: empty word");
  auto check = [&](int s) {
    if (s < 0 || static_cast<std::size_t>(s) >= model.alphabet_size())
      throw std::invalid_argument("path_log_prob: symbol out of range");
    return static_cast<std::size_t>(s);
  };
  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      double acc = 0.0;
      for (int s : word) acc += std::log(model.marginal().prob(check(s)));
      return acc;
    }
    case ProcessModel::Kind::Markov: {
      const RowMatrix& k = model.transition();
      double acc = std::log(model.hidden_stationary().prob(check(word[0])));
      for (std::size_t i = 1; i < word.size(); ++i)
        acc += std::log(k.at(check(word[i - 1]), check(word[i])));
      return acc;
    }
    case ProcessModel::Kind::Hmm: {
      const RowMatrix& k = model.transition();
      const RowMatrix& e = model.emission();
      const std::size_t nh = model.hidden_count();
      std::vector<double> alpha(nh), next(nh);
      for (std::size_t h = 0; h < nh; ++h)
        alpha[h] = std::log(model.initial_hidden().prob(h)) + std::log(e.at(h, check(word[0])));
      for (std::size_t i = 1; i < word.size(); ++i) {
        for (std::size_t h2 = 0; h2 < nh; ++h2) {
          double acc = kNegInf;
          for (std::size_t h1 = 0; h1 < nh; ++h1)
            acc = log_add(acc, alpha[h1] + std::log(k.at(h1, h2)));
          next[h2] = acc + std::log(e.at(h2, check(word[i])));
        }
        alpha.swap(next);
      }
      return log_sum(alpha);
    }
  }
  return kNegInf;
}

}  // namespace aeplab
