#pragma once
// Exact rational arithmetic on int64 numerator / denominator with __int128
// intermediates. Distortion entries, distortion budgets D and probability
// grids are kept rational so that threshold comparisons (s <= n*D) and regime
// ties (D == D_min) are decided exactly, never through a float epsilon.
//
// Overflow is an error, not silent wraparound: desk-scale inputs (denominators
// up to 1e6, horizons up to 1e4) stay far inside int64 after reduction.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace aeplab {

class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit integers are handy
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
    reduce();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  // Exact conversion: every finite double is a dyadic rational. Returns
  // nullopt when the reduced form does not fit int64 (e.g. 1e-300).
  static std::optional<Rational> from_double(double x) {
    if (!std::isfinite(x)) return std::nullopt;
    if (x == 0.0) return Rational(0);
    int exp = 0;
    double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
    auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    exp -= 53;
    while (mant != 0 && (mant % 2) == 0) {
      mant /= 2;
      ++exp;
    }
    if (exp >= 0) {
      if (exp > 62) return std::nullopt;
      __int128 n = static_cast<__int128>(mant) << exp;
      if (n > std::numeric_limits<std::int64_t>::max() ||
          n < std::numeric_limits<std::int64_t>::min())
        return std::nullopt;
      return Rational(static_cast<std::int64_t>(n), 1);
    }
    if (-exp > 62) return std::nullopt;
    return Rational(mant, std::int64_t{1} << (-exp));
  }

  // Parses "p/q", an integer literal, or a plain decimal like "0.25".
  static Rational parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("Rational::parse: empty string");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
      std::int64_t p = parse_int(text.substr(0, slash));
      std::int64_t q = parse_int(text.substr(slash + 1));
      return Rational(p, q);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_int(text));
    std::string head = text.substr(0, dot);
    std::string tail = text.substr(dot + 1);
    if (tail.empty()) return Rational(parse_int(head));
    if (tail.size() > 18) throw std::invalid_argument("Rational::parse: too many decimals: " + text);
    bool neg = !head.empty() && head[0] == '-';
    std::int64_t ip = head.empty() || head == "-" ? 0 : parse_int(head);
    std::int64_t fp = parse_int(tail);
    if (fp < 0) throw std::invalid_argument("Rational::parse: malformed decimal: " + text);
    std::int64_t scale = 1;
    for (size_t i = 0; i < tail.size(); ++i) scale = checked_mul(scale, 10);
    __int128 n = static_cast<__int128>(ip) * scale + (neg ? -static_cast<__int128>(fp) : fp);
    return Rational(narrow(n), scale);
  }

  Rational operator-() const { return make(-static_cast<__int128>(num_), den_); }
  Rational operator+(const Rational& o) const {
    return make(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
                static_cast<__int128>(den_) * o.den_);
  }
  Rational operator-(const Rational& o) const { return *this + (-o); }
  Rational operator*(const Rational& o) const {
    return make(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::invalid_argument("Rational: division by zero");
    return make(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Rational r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  static std::int64_t narrow(__int128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() ||
        v < std::numeric_limits<std::int64_t>::min())
      throw std::overflow_error("Rational: 64-bit overflow");
    return static_cast<std::int64_t>(v);
  }

  static std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    return narrow(static_cast<__int128>(a) * b);
  }

  static std::int64_t parse_int(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("Rational::parse: empty integer field");
    size_t pos = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("Rational::parse: bad integer: " + s);
    }
    if (pos != s.size()) throw std::invalid_argument("Rational::parse: bad integer: " + s);
    return v;
  }

  void reduce() {
    if (den_ < 0) {
      num_ = narrow(-static_cast<__int128>(num_));
      den_ = narrow(-static_cast<__int128>(den_));
    }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_;
  std::int64_t den_;
};

inline std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
  std::int64_t g = std::gcd(a, b);
  __int128 l = static_cast<__int128>(a / g) * b;
  if (l > std::numeric_limits<std::int64_t>::max())
    throw std::overflow_error("lcm_checked: 64-bit overflow");
  return static_cast<std::int64_t>(l);
}

// floor(n * scale * d) for d = p/q, computed in 128-bit integers.
inline std::int64_t floor_scaled(const Rational& d, std::int64_t n, std::int64_t scale) {
  __int128 num = static_cast<__int128>(d.num()) * n * scale;
  __int128 q = d.den();
  __int128 fl = num >= 0 ? num / q : -((-num + q - 1) / q);
  if (fl > std::numeric_limits<std::int64_t>::max() || fl < std::numeric_limits<std::int64_t>::min())
    throw std::overflow_error("floor_scaled: 64-bit overflow");
  return static_cast<std::int64_t>(fl);
}

}  // namespace aeplab
