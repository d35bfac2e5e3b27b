#pragma once
// Extended real values on [0, +inf]: finite doubles plus a positive-infinity
// point. Rates, normalized log-probabilities and bound endpoints live here.
// Arithmetic: finite + inf = inf. Ordering is total with inf greatest.

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace aeplab {

// Shortest decimal that round-trips to the same double.
inline std::string shortest_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class ExtReal {
 public:
  ExtReal() : v_(0.0) {}

  static ExtReal finite(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("ExtReal::finite: value is not finite");
    ExtReal r;
    r.v_ = v;
    return r;
  }

  static ExtReal infinity() {
    ExtReal r;
    r.v_ = std::numeric_limits<double>::infinity();
    return r;
  }

  bool is_finite() const { return std::isfinite(v_); }
  bool is_infinite() const { return !std::isfinite(v_); }

  // Finite value; throws on the infinite point.
  double value() const {
    if (!is_finite()) throw std::domain_error("ExtReal::value: infinite");
    return v_;
  }

  // Raw double, +inf allowed. Convenient for arithmetic and printing.
  double as_double() const { return v_; }

  ExtReal operator+(const ExtReal& o) const {
    if (is_infinite() || o.is_infinite()) return infinity();
    return finite(v_ + o.v_);
  }

  friend bool operator<(const ExtReal& a, const ExtReal& b) { return a.v_ < b.v_; }
  friend bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
  friend bool operator<=(const ExtReal& a, const ExtReal& b) { return !(b < a); }
  friend bool operator>=(const ExtReal& a, const ExtReal& b) { return !(a < b); }
  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return (a.is_infinite() && b.is_infinite()) || (a.is_finite() && b.is_finite() && a.v_ == b.v_);
  }
  friend bool operator!=(const ExtReal& a, const ExtReal& b) { return !(a == b); }

  // Serialized form used across all CLI outputs: the literal "inf" for the
  // infinite point, shortest round-trip decimal otherwise.
  std::string str() const {
    if (is_infinite()) return "inf";
    return shortest_double(v_);
  }

 private:
  double v_;
};

}  // namespace aeplab
