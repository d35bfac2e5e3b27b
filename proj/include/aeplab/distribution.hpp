#pragma once
// Probability vectors over an indexed finite alphabet. Support is decided by
// exact strict positivity, no epsilon, because the essential infimum
// rho_Q(x), and through it D_min, depends on which symbols carry mass at all.
// When every entry is available as an exact rational (decimal-string input,
// empirical counts, exact dyadic doubles) the vector carries that exact view
// alongside the doubles, which is what makes regime ties like D == D_min
// decidable.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeplab/rational.hpp"

namespace aeplab {

inline constexpr double kProbSumTol = 1e-12;

class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    validate();
    attach_exact_from_doubles();
  }

  static FiniteDistribution from_rationals(const std::vector<Rational>& entries) {
    std::vector<double> probs;
    probs.reserve(entries.size());
    Rational sum(0);
    for (const auto& e : entries) {
      if (e.is_negative()) throw std::invalid_argument("FiniteDistribution: negative probability");
      probs.push_back(e.value());
      sum = sum + e;
    }
    if (!(sum == Rational(1)))
      throw std::invalid_argument("FiniteDistribution: rational entries must sum to exactly 1");
    FiniteDistribution d;
    d.probs_ = std::move(probs);
    d.exact_ = entries;
    d.validate();
    return d;
  }

  static FiniteDistribution from_counts(std::span<const std::int64_t> counts) {
    std::int64_t total = 0;
    for (auto c : counts) {
      if (c < 0) throw std::invalid_argument("FiniteDistribution: negative count");
      total += c;
    }
    if (total <= 0) throw std::invalid_argument("FiniteDistribution: empty counts");
    std::vector<Rational> entries;
    entries.reserve(counts.size());
    for (auto c : counts) entries.emplace_back(c, total);
    return from_rationals(entries);
  }

  static FiniteDistribution point_mass(std::size_t size, std::size_t index) {
    if (index >= size) throw std::invalid_argument("FiniteDistribution: point mass out of range");
    std::vector<Rational> entries(size, Rational(0));
    entries[index] = Rational(1);
    return from_rationals(entries);
  }

  static FiniteDistribution uniform(std::size_t size) {
    if (size == 0) throw std::invalid_argument("FiniteDistribution: empty alphabet");
    std::vector<Rational> entries(size, Rational(1, static_cast<std::int64_t>(size)));
    return from_rationals(entries);
  }

  std::size_t size() const { return probs_.size(); }
  double prob(std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  bool in_support(std::size_t i) const { return probs_[i] > 0.0; }
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < probs_.size(); ++i)
      if (probs_[i] > 0.0) s.push_back(i);
    return s;
  }

  bool has_exact() const { return exact_.has_value(); }
  const std::vector<Rational>& exact() const {
    if (!exact_) throw std::logic_error("FiniteDistribution: no exact view");
    return *exact_;
  }
  std::optional<Rational> exact_at(std::size_t i) const {
    if (!exact_) return std::nullopt;
    return (*exact_)[i];
  }

 private:
  FiniteDistribution() = default;

  void validate() const {
    if (probs_.empty()) throw std::invalid_argument("FiniteDistribution: empty alphabet");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw std::invalid_argument("FiniteDistribution: negative probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > kProbSumTol)
      throw std::invalid_argument("FiniteDistribution: probabilities sum to " + std::to_string(sum) +
                                  ", expected 1 within 1e-12");
  }

  // Keep an exact view only when it is genuinely exact: every entry dyadic
  // and the rational sum equal to 1. (0.5, 0.5) qualifies; (0.3, 0.7) does
  // not, since those doubles are not 3/10 and 7/10.
  void attach_exact_from_doubles() {
    std::vector<Rational> entries;
    entries.reserve(probs_.size());
    Rational sum(0);
    for (double p : probs_) {
      auto r = Rational::from_double(p);
      if (!r) return;
      entries.push_back(*r);
      try {
        sum = sum + *r;
      } catch (const std::overflow_error&) {
        return;
      }
    }
    if (sum == Rational(1)) exact_ = std::move(entries);
  }

  std::vector<double> probs_;
  std::optional<std::vector<Rational>> exact_;
};

// Empirical distribution of a symbol sequence; entries are count/n, exactly.
inline FiniteDistribution empirical_distribution(std::span<const int> word, std::size_t alphabet_size) {
  if (word.empty()) throw std::invalid_argument("empirical_distribution: empty sequence");
  std::vector<std::int64_t> counts(alphabet_size, 0);
  for (int s : word) {
    if (s < 0 || static_cast<std::size_t>(s) >= alphabet_size)
      throw std::invalid_argument("empirical_distribution: symbol out of range");
    ++counts[static_cast<std::size_t>(s)];
  }
  return FiniteDistribution::from_counts(counts);
}

}  // namespace aeplab
