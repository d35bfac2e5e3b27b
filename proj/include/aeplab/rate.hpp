#pragma once
// Single-letter rate function machinery: the log-moment generating function
// Lambda(P,Q,lambda) = E_X log E_Y e^{lambda rho(X,Y)}, its derivative, and
// the one-sided convex conjugate
//   R(P,Q,D) = Lambda*(P,Q,D) = sup_{lambda<=0} [lambda D - Lambda(lambda)],
// in every regime:
//   D <  D_min             -> +inf
//   D == D_min             -> E_X[-log Q{rho(X,Y) = rho_Q(X)}]   (closed form)
//   D_min < D < D_ave      -> lambda_D D - Lambda(lambda_D), Lambda'(lambda_D)=D
//   D >= D_ave             -> 0 with lambda = 0
// plus the couplings attaining it, relative entropy, and the outer
// minimization over Q (alternating minimization). Regime ties are decided in
// exact rational arithmetic whenever the inputs carry exact views; bisection
// is never run at an endpoint, where it degenerates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/extended_real.hpp"
#include "aeplab/logsumexp.hpp"
#include "aeplab/process.hpp"
#include "aeplab/rational.hpp"

namespace aeplab {

enum class RateRegime { BelowDmin, AtDmin, Interior, AtOrAboveDave };

inline const char* regime_name(RateRegime r) {
  switch (r) {
    case RateRegime::BelowDmin: return "BelowDmin";
    case RateRegime::AtDmin: return "AtDmin";
    case RateRegime::Interior: return "Interior";
    case RateRegime::AtOrAboveDave: return "AtOrAboveDave";
  }
  return "?";
}

struct RateEvaluation {
  double distortion = 0.0;
  ExtReal rate;
  std::optional<double> lambda_star;  // absent when rate is infinite or at D_min
  RateRegime regime = RateRegime::Interior;
};

namespace detail {

// A scalar threshold carrying an exact rational view when the inputs allow
// one. compare() is then exact; otherwise it falls back to double ordering.
struct Threshold {
  double approx = 0.0;
  std::optional<Rational> exact;

  // -1: d below, 0: tie, +1: d above. Exact when both sides carry rationals,
  // double ordering otherwise.
  int compare(double dv, const std::optional<Rational>& dex) const {
    if (exact && dex) {
      if (*dex < *exact) return -1;
      if (*exact < *dex) return 1;
      return 0;
    }
    if (dv < approx) return -1;
    if (dv > approx) return 1;
    return 0;
  }
};

inline void check_shapes(const FiniteDistribution& p, const FiniteDistribution& q,
                         const DistortionMatrix& rho) {
  if (p.size() != rho.source_size())
    throw std::invalid_argument("rate_core: source alphabet does not match rho");
  if (q.size() != rho.repro_size())
    throw std::invalid_argument("rate_core: reproduction alphabet does not match rho");
}

inline constexpr double kSlopeTol = 1e-12;      // |Lambda'(lambda) - D| target
inline constexpr double kDualityGapTol = 1e-10; // |lambda| * |Lambda'(lambda) - D| target
inline constexpr int kBisectIters = 200;
inline constexpr double kLambdaCap = -1.1e12;   // ~ -2^40, slope has long since plateaued

// Bracket-and-bisect on a nondecreasing slope function defined on lambda < 0.
// Doubles lambda in {-1, -2, -4, ...} until the slope drops below the target,
// then bisects. Safe because the slope is monotone (derivative of a convex
// function); derivative-free and robust in the flat tail.
template <typename F>
double bracket_bisect_slope(F&& slope, double target) {
  double lo = -1.0;
  double hi = 0.0;
  while (slope(lo) >= target) {
    hi = lo;
    lo *= 2.0;
    if (lo < kLambdaCap) break;
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kBisectIters; ++it) {
    mid = 0.5 * (lo + hi);
    double s = slope(mid);
    double gap = s - target;
    if (std::fabs(gap) <= kSlopeTol && std::fabs(mid) * std::fabs(gap) <= kDualityGapTol) return mid;
    if (s < target)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

}  // namespace detail

// Lambda(P,Q,lambda); finite for every real lambda on finite alphabets.
inline double lambda_fn(const FiniteDistribution& p, const FiniteDistribution& q,
                        const DistortionMatrix& rho, double lambda) {
  detail::check_shapes(p, q, rho);
  if (lambda == 0.0) return 0.0;  // log of total mass, exactly
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    double m = kNegInf;
    for (std::size_t y = 0; y < q.size(); ++y) {
      if (!q.in_support(y)) continue;
      m = std::max(m, std::log(q.prob(y)) + lambda * rho.real(x, y));
    }
    double inner = 0.0;
    for (std::size_t y = 0; y < q.size(); ++y) {
      if (!q.in_support(y)) continue;
      inner += std::exp(std::log(q.prob(y)) + lambda * rho.real(x, y) - m);
    }
    acc += p.prob(x) * (m + std::log(inner));
  }
  return acc;
}

// Lambda'(lambda) = E_X[ E_Y rho e^{lambda rho} / E_Y e^{lambda rho} ],
// guaranteed by convexity only on lambda < 0.
inline double lambda_prime(const FiniteDistribution& p, const FiniteDistribution& q,
                           const DistortionMatrix& rho, double lambda) {
  detail::check_shapes(p, q, rho);
  if (!(lambda < 0.0))
    throw std::invalid_argument("lambda_prime: lambda must be strictly negative");
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    double m = kNegInf;
    for (std::size_t y = 0; y < q.size(); ++y) {
      if (!q.in_support(y)) continue;
      m = std::max(m, std::log(q.prob(y)) + lambda * rho.real(x, y));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t y = 0; y < q.size(); ++y) {
      if (!q.in_support(y)) continue;
      double w = std::exp(std::log(q.prob(y)) + lambda * rho.real(x, y) - m);
      num += rho.real(x, y) * w;
      den += w;
    }
    acc += p.prob(x) * (num / den);
  }
  return acc;
}

// D_min = E rho_Q(X); the smallest distortion with a finite rate.
inline double d_min(const FiniteDistribution& p, const FiniteDistribution& q,
                    const DistortionMatrix& rho) {
  detail::check_shapes(p, q, rho);
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p.in_support(x)) acc += p.prob(x) * rho_q(static_cast<int>(x), q, rho);
  return acc;
}

inline std::optional<Rational> d_min_exact(const FiniteDistribution& p, const FiniteDistribution& q,
                                           const DistortionMatrix& rho) {
  if (!p.has_exact()) return std::nullopt;
  try {
    Rational acc(0);
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (!p.in_support(x)) continue;
      Rational rq(rho_q_scaled(static_cast<int>(x), q, rho), rho.common_denominator());
      acc = acc + p.exact()[x] * rq;
    }
    return acc;
  } catch (const std::overflow_error&) {
    return std::nullopt;
  }
}

// D_ave = E rho(X,Y) for independent X ~ P, Y ~ Q; the rate is 0 from here up.
inline double d_ave(const FiniteDistribution& p, const FiniteDistribution& q,
                    const DistortionMatrix& rho) {
  detail::check_shapes(p, q, rho);
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    for (std::size_t y = 0; y < q.size(); ++y)
      if (q.in_support(y)) acc += p.prob(x) * q.prob(y) * rho.real(x, y);
  }
  return acc;
}

inline std::optional<Rational> d_ave_exact(const FiniteDistribution& p, const FiniteDistribution& q,
                                           const DistortionMatrix& rho) {
  if (!p.has_exact() || !q.has_exact()) return std::nullopt;
  try {
    Rational acc(0);
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (!p.in_support(x)) continue;
      for (std::size_t y = 0; y < q.size(); ++y) {
        if (!q.in_support(y)) continue;
        acc = acc + p.exact()[x] * q.exact()[y] * rho.at(x, y);
      }
    }
    return acc;
  } catch (const std::overflow_error&) {
    return std::nullopt;
  }
}

// Lambda*(D_min) = E_X[-log Q{y : rho(X,y) = rho_Q(X)}]. Membership in the
// minimizing set is exact rational equality through the scaled entries. On a
// finite alphabet the inner mass is always positive, but the infinite branch
// is kept for contract completeness.
inline ExtReal rate_at_dmin(const FiniteDistribution& p, const FiniteDistribution& q,
                            const DistortionMatrix& rho) {
  detail::check_shapes(p, q, rho);
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    std::int64_t best = rho_q_scaled(static_cast<int>(x), q, rho);
    double mass = 0.0;
    for (std::size_t y = 0; y < q.size(); ++y)
      if (q.in_support(y) && rho.scaled(x, y) == best) mass += q.prob(y);
    if (mass <= 0.0) return ExtReal::infinity();
    acc += p.prob(x) * (-std::log(mass));
  }
  return ExtReal::finite(acc);
}

namespace detail {

inline RateEvaluation rate_impl(const FiniteDistribution& p, const FiniteDistribution& q,
                                const DistortionMatrix& rho, double dv,
                                const std::optional<Rational>& dex) {
  check_shapes(p, q, rho);
  if (dv < 0.0) throw std::invalid_argument("rate: distortion must be >= 0");

  Threshold dmin{d_min(p, q, rho), d_min_exact(p, q, rho)};
  Threshold dave{d_ave(p, q, rho), d_ave_exact(p, q, rho)};

  RateEvaluation ev;
  ev.distortion = dv;

  int against_min = dmin.compare(dv, dex);
  if (against_min < 0) {
    ev.rate = ExtReal::infinity();
    ev.regime = RateRegime::BelowDmin;
    return ev;
  }
  if (against_min == 0) {
    ev.rate = rate_at_dmin(p, q, rho);
    ev.regime = RateRegime::AtDmin;
    return ev;
  }
  if (dave.compare(dv, dex) >= 0) {
    ev.rate = ExtReal::finite(0.0);
    ev.lambda_star = 0.0;
    ev.regime = RateRegime::AtOrAboveDave;
    return ev;
  }

  double lam = bracket_bisect_slope([&](double l) { return lambda_prime(p, q, rho, l); }, dv);
  ev.lambda_star = lam;
  ev.rate = ExtReal::finite(std::max(0.0, lam * dv - lambda_fn(p, q, rho, lam)));
  ev.regime = RateRegime::Interior;
  return ev;
}

}  // namespace detail

// R(P,Q,D) with the four-way regime split.
inline RateEvaluation rate(const FiniteDistribution& p, const FiniteDistribution& q,
                           const DistortionMatrix& rho, const Rational& distortion) {
  if (distortion.is_negative()) throw std::invalid_argument("rate: distortion must be >= 0");
  return detail::rate_impl(p, q, rho, distortion.value(), distortion);
}

inline RateEvaluation rate(const FiniteDistribution& p, const FiniteDistribution& q,
                           const DistortionMatrix& rho, double distortion) {
  return detail::rate_impl(p, q, rho, distortion, Rational::from_double(distortion));
}

// Joint distribution on S x T with source marginal P.
struct Coupling {
  std::size_t ns = 0;
  std::size_t nt = 0;
  std::vector<double> w;  // row-major

  Coupling(std::size_t source_size, std::size_t repro_size)
      : ns(source_size), nt(repro_size), w(ns * nt, 0.0) {}

  double& at(std::size_t x, std::size_t y) { return w[x * nt + y]; }
  double at(std::size_t x, std::size_t y) const { return w[x * nt + y]; }

  double total_mass() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
  double row_sum(std::size_t x) const {
    double s = 0.0;
    for (std::size_t y = 0; y < nt; ++y) s += at(x, y);
    return s;
  }
  double expected_distortion(const DistortionMatrix& rho) const {
    double s = 0.0;
    for (std::size_t x = 0; x < ns; ++x)
      for (std::size_t y = 0; y < nt; ++y) s += at(x, y) * rho.real(x, y);
    return s;
  }
};

// H(W || P x Q) in nats, with 0 log 0 = 0; +inf as soon as W charges a
// product-null cell.
inline ExtReal relative_entropy(const Coupling& w, const FiniteDistribution& p,
                                const FiniteDistribution& q) {
  if (w.ns != p.size() || w.nt != q.size())
    throw std::invalid_argument("relative_entropy: shape mismatch");
  double acc = 0.0;
  for (std::size_t x = 0; x < w.ns; ++x)
    for (std::size_t y = 0; y < w.nt; ++y) {
      double v = w.at(x, y);
      if (v <= 0.0) continue;
      double base = p.prob(x) * q.prob(y);
      if (base <= 0.0) return ExtReal::infinity();
      acc += v * std::log(v / base);
    }
  return ExtReal::finite(acc);
}

namespace detail {

inline Coupling optimal_coupling_impl(const FiniteDistribution& p, const FiniteDistribution& q,
                                      const DistortionMatrix& rho, const RateEvaluation& ev) {
  if (ev.rate.is_infinite())
    throw std::domain_error("optimal_coupling: W(P,D) is empty, the rate is infinite");

  Coupling w(p.size(), q.size());
  switch (ev.regime) {
    case RateRegime::AtOrAboveDave: {
      for (std::size_t x = 0; x < p.size(); ++x)
        for (std::size_t y = 0; y < q.size(); ++y) w.at(x, y) = p.prob(x) * q.prob(y);
      break;
    }
    case RateRegime::AtDmin: {
      for (std::size_t x = 0; x < p.size(); ++x) {
        if (!p.in_support(x)) continue;
        std::int64_t best = rho_q_scaled(static_cast<int>(x), q, rho);
        double z = 0.0;
        for (std::size_t y = 0; y < q.size(); ++y)
          if (q.in_support(y) && rho.scaled(x, y) == best) z += q.prob(y);
        for (std::size_t y = 0; y < q.size(); ++y)
          if (q.in_support(y) && rho.scaled(x, y) == best) w.at(x, y) = p.prob(x) * q.prob(y) / z;
      }
      break;
    }
    case RateRegime::Interior: {
      const double lam = *ev.lambda_star;
      for (std::size_t x = 0; x < p.size(); ++x) {
        if (!p.in_support(x)) continue;
        double m = kNegInf;
        for (std::size_t y = 0; y < q.size(); ++y)
          if (q.in_support(y)) m = std::max(m, std::log(q.prob(y)) + lam * rho.real(x, y));
        double z = 0.0;
        for (std::size_t y = 0; y < q.size(); ++y)
          if (q.in_support(y)) z += std::exp(std::log(q.prob(y)) + lam * rho.real(x, y) - m);
        for (std::size_t y = 0; y < q.size(); ++y)
          if (q.in_support(y))
            w.at(x, y) =
                p.prob(x) * std::exp(std::log(q.prob(y)) + lam * rho.real(x, y) - m) / z;
      }
      break;
    }
    case RateRegime::BelowDmin: break;  // unreachable, rate was finite
  }
  return w;
}

}  // namespace detail

// The minimizer of H(W || P x Q) over W(P, D): the product coupling at or
// above D_ave, the tilted coupling in the interior, and the minimizing-set
// coupling at D_min.
inline Coupling optimal_coupling(const FiniteDistribution& p, const FiniteDistribution& q,
                                 const DistortionMatrix& rho, const Rational& distortion) {
  return detail::optimal_coupling_impl(p, q, rho, rate(p, q, rho, distortion));
}

inline Coupling optimal_coupling(const FiniteDistribution& p, const FiniteDistribution& q,
                                 const DistortionMatrix& rho, double distortion) {
  return detail::optimal_coupling_impl(p, q, rho, rate(p, q, rho, distortion));
}

namespace detail {

struct BaPoint {
  double distortion;
  double rate;
};

// One converged alternating-minimization pass at fixed tilt s < 0:
// tilted channel W(y|x) ~ q(y) e^{s rho(x,y)}, output marginal update
// q'(y) = sum_x P(x) W(y|x), repeated until the marginal stops moving.
inline BaPoint ba_fixed_tilt(const FiniteDistribution& p, const DistortionMatrix& rho, double s,
                             int iterations) {
  const std::size_t ns = p.size(), nt = rho.repro_size();
  std::vector<double> logq(nt, -std::log(static_cast<double>(nt)));
  std::vector<double> channel(ns * nt, 0.0);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t x = 0; x < ns; ++x) {
      if (!p.in_support(x)) continue;
      double m = kNegInf;
      for (std::size_t y = 0; y < nt; ++y) m = std::max(m, logq[y] + s * rho.real(x, y));
      double z = 0.0;
      for (std::size_t y = 0; y < nt; ++y) {
        channel[x * nt + y] = std::exp(logq[y] + s * rho.real(x, y) - m);
        z += channel[x * nt + y];
      }
      for (std::size_t y = 0; y < nt; ++y) channel[x * nt + y] /= z;
    }
    double delta = 0.0;
    for (std::size_t y = 0; y < nt; ++y) {
      double qy = 0.0;
      for (std::size_t x = 0; x < ns; ++x)
        if (p.in_support(x)) qy += p.prob(x) * channel[x * nt + y];
      double lq = qy > 0.0 ? std::log(qy) : kNegInf;
      delta = std::max(delta, std::fabs(std::exp(logq[y]) - qy));
      logq[y] = lq;
    }
    if (delta <= 1e-14) break;
  }
  BaPoint pt{0.0, 0.0};
  for (std::size_t x = 0; x < ns; ++x) {
    if (!p.in_support(x)) continue;
    for (std::size_t y = 0; y < nt; ++y) {
      double v = p.prob(x) * channel[x * nt + y];
      if (v <= 0.0) continue;
      pt.distortion += v * rho.real(x, y);
      pt.rate += v * (std::log(channel[x * nt + y]) - logq[y]);
    }
  }
  pt.rate = std::max(0.0, pt.rate);
  return pt;
}

}  // namespace detail

namespace detail {

inline double rate_distortion_impl(const FiniteDistribution& p, const DistortionMatrix& rho,
                                   double dv, const std::optional<Rational>& dex, int iterations,
                                   double tolerance) {
  if (p.size() != rho.source_size())
    throw std::invalid_argument("rate_distortion: source alphabet does not match rho");
  if (dv < 0.0) throw std::invalid_argument("rate_distortion: distortion must be >= 0");
  (void)tolerance;  // converged below solver tolerances; kept for the call contract

  // Feasibility floor: E_X min_y rho(X,y); zero-rate ceiling: min_y E_X rho(X,y).
  Rational feas(0);
  bool feas_exact = p.has_exact();
  double feas_d = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!p.in_support(x)) continue;
    std::int64_t best = rho.scaled(x, 0);
    for (std::size_t y = 1; y < rho.repro_size(); ++y) best = std::min(best, rho.scaled(x, y));
    feas_d += p.prob(x) * static_cast<double>(best) / static_cast<double>(rho.common_denominator());
    if (feas_exact) {
      try {
        feas = feas + p.exact()[x] * Rational(best, rho.common_denominator());
      } catch (const std::overflow_error&) {
        feas_exact = false;
      }
    }
  }
  Threshold feas_t{feas_d, feas_exact ? std::optional<Rational>(feas) : std::nullopt};
  if (feas_t.compare(dv, dex) < 0)
    throw std::domain_error("rate_distortion: no reproduction attains the requested distortion");

  double zero_ceiling;
  {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < rho.repro_size(); ++y) {
      double col = 0.0;
      for (std::size_t x = 0; x < p.size(); ++x)
        if (p.in_support(x)) col += p.prob(x) * rho.real(x, y);
      best = std::min(best, col);
    }
    zero_ceiling = best;
  }
  if (dv >= zero_ceiling) return 0.0;

  if (feas_t.compare(dv, dex) == 0) return ba_fixed_tilt(p, rho, -1e4, iterations).rate;

  double s = bracket_bisect_slope(
      [&](double tilt) { return ba_fixed_tilt(p, rho, tilt, iterations).distortion; }, dv);
  return ba_fixed_tilt(p, rho, s, iterations).rate;
}

}  // namespace detail

// Rate-distortion function R(P,D) = inf_Q R(P,Q,D), by alternating
// minimization parametrized by the tilt, with an outer slope search matching
// the distortion constraint.
inline double rate_distortion(const FiniteDistribution& p, const DistortionMatrix& rho,
                              const Rational& distortion, int iterations = 10000,
                              double tolerance = 1e-8) {
  if (distortion.is_negative())
    throw std::invalid_argument("rate_distortion: distortion must be >= 0");
  return detail::rate_distortion_impl(p, rho, distortion.value(), distortion, iterations, tolerance);
}

inline double rate_distortion(const FiniteDistribution& p, const DistortionMatrix& rho,
                              double distortion, int iterations = 10000, double tolerance = 1e-8) {
  return detail::rate_distortion_impl(p, rho, distortion, Rational::from_double(distortion),
                                      iterations, tolerance);
}

}  // namespace aeplab
