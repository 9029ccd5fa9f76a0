#pragma once

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace otcert {

using Rational = mpq_class;

/// Per-number-type policy: parsing, formatting and the comparison tolerance.
/// Rational mode is exact (tolerance zero); float mode compares with 1e-9.
template <class T>
struct NumberTraits;

template <>
struct NumberTraits<Rational> {
  static constexpr bool exact = true;
  static constexpr const char* mode_name = "rational";

  static Rational tolerance() { return Rational(0); }
  static Rational parse(std::string_view text);
  static std::string format(const Rational& v);
  static double to_double(const Rational& v) { return v.get_d(); }
  static Rational from_double(double v) { return Rational(v); }
  static Rational abs(const Rational& v) { return ::abs(v); }
};

template <>
struct NumberTraits<double> {
  static constexpr bool exact = false;
  static constexpr const char* mode_name = "float";

  static double tolerance() { return 1e-9; }
  static double parse(std::string_view text);
  static std::string format(double v);
  static double to_double(double v) { return v; }
  static double from_double(double v) { return v; }
  static double abs(double v) { return std::fabs(v); }
};

/// a < b beyond the mode tolerance.
template <class T>
bool definitely_less(const T& a, const T& b) {
  return a + NumberTraits<T>::tolerance() < b;
}

/// |a - b| within the mode tolerance.
template <class T>
bool nearly_equal(const T& a, const T& b) {
  return NumberTraits<T>::abs(a - b) <= NumberTraits<T>::tolerance();
}

/// a <= b up to the mode tolerance.
template <class T>
bool nearly_leq(const T& a, const T& b) {
  return !definitely_less(b, a);
}

/// Extended real: a finite value, +inf or -inf.
///
/// Costs only ever hold finite values or +inf. Potentials may hold -inf.
/// (+inf) + (-inf) is a hard error and never silently produced.
template <class T>
class ExtReal {
 public:
  enum class Kind : std::uint8_t { NegInf, Finite, PosInf };

  ExtReal() : kind_(Kind::Finite), value_(0) {}
  ExtReal(T v) : kind_(Kind::Finite), value_(std::move(v)) {}  // NOLINT
  ExtReal(int v) : kind_(Kind::Finite), value_(v) {}           // NOLINT

  static ExtReal pos_inf() { return ExtReal(Kind::PosInf); }
  static ExtReal neg_inf() { return ExtReal(Kind::NegInf); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  const T& value() const {
    if (!is_finite()) throw std::domain_error("ExtReal::value on an infinite value");
    return value_;
  }

  ExtReal operator-() const {
    switch (kind_) {
      case Kind::PosInf: return neg_inf();
      case Kind::NegInf: return pos_inf();
      default: return ExtReal(T(-value_));
    }
  }

  friend ExtReal operator+(const ExtReal& a, const ExtReal& b) {
    if (a.is_finite() && b.is_finite()) return ExtReal(T(a.value_ + b.value_));
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
      throw std::domain_error("extended arithmetic: (+inf) + (-inf) is undefined");
    return a.is_finite() ? b : a;
  }
  friend ExtReal operator-(const ExtReal& a, const ExtReal& b) { return a + (-b); }
  ExtReal& operator+=(const ExtReal& o) { return *this = *this + o; }
  ExtReal& operator-=(const ExtReal& o) { return *this = *this - o; }

  /// Scaling by a strictly positive finite weight keeps infinities.
  friend ExtReal operator*(const T& w, const ExtReal& a) {
    if (a.is_finite()) return ExtReal(T(w * a.value_));
    if (!(T(0) < w)) throw std::domain_error("extended arithmetic: non-positive scale of an infinity");
    return a;
  }

  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    if (a.kind_ != b.kind_) return false;
    return !a.is_finite() || a.value_ == b.value_;
  }
  friend bool operator<(const ExtReal& a, const ExtReal& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    return a.is_finite() && a.value_ < b.value_;
  }
  friend bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
  friend bool operator<=(const ExtReal& a, const ExtReal& b) { return !(b < a); }
  friend bool operator>=(const ExtReal& a, const ExtReal& b) { return !(a < b); }

 private:
  explicit ExtReal(Kind k) : kind_(k), value_(0) {}

  Kind kind_;
  T value_;
};

/// Tolerance-aware strict comparison: equal infinities are never "less".
template <class T>
bool definitely_less(const ExtReal<T>& a, const ExtReal<T>& b) {
  if (a.is_finite() && b.is_finite()) return definitely_less(a.value(), b.value());
  return a < b;
}

template <class T>
bool nearly_equal(const ExtReal<T>& a, const ExtReal<T>& b) {
  if (a.is_finite() && b.is_finite()) return nearly_equal(a.value(), b.value());
  return a == b;
}

/// Parses "inf", "+inf", "-inf" or a finite literal.
template <class T>
ExtReal<T> parse_ext(std::string_view text) {
  if (text == "inf" || text == "+inf") return ExtReal<T>::pos_inf();
  if (text == "-inf") return ExtReal<T>::neg_inf();
  return ExtReal<T>(NumberTraits<T>::parse(text));
}

template <class T>
std::string format_ext(const ExtReal<T>& v) {
  if (v.is_pos_inf()) return "inf";
  if (v.is_neg_inf()) return "-inf";
  return NumberTraits<T>::format(v.value());
}

}  // namespace otcert
