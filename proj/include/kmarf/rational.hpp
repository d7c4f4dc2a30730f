#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kmarf {

// Exact rational with int64 components. Always normalized: den > 0 and
// gcd(|num|, den) == 1, so value equality is representation equality.
// Arithmetic runs through __int128; a result that does not normalize back
// into int64 components throws Overflow.
class Rational {
 public:
  struct Overflow : std::overflow_error {
    Overflow() : std::overflow_error("rational out of 64-bit range") {}
  };

  Rational() = default;
  Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design
  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    assign(num, den);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  bool is_negative() const { return num_ < 0; }

  // Total order; exact (cross-multiplies in 128 bits).
  static int compare(const Rational& a, const Rational& b) {
    __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return -1;
    if (lhs > rhs) return 1;
    return 0;
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) { return compare(a, b) < 0; }
  friend bool operator<=(const Rational& a, const Rational& b) { return compare(a, b) <= 0; }
  friend bool operator>(const Rational& a, const Rational& b) { return compare(a, b) > 0; }
  friend bool operator>=(const Rational& a, const Rational& b) { return compare(a, b) >= 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                   static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                   static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.num_,
                   static_cast<__int128>(a.den_) * b.den_);
  }
  // Throws std::domain_error on division by zero; callers that want the
  // soft "no such tuple" outcome check the divisor first.
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("division by zero");
    return from128(static_cast<__int128>(a.num_) * b.den_,
                   static_cast<__int128>(a.den_) * b.num_);
  }

  Rational abs() const { return num_ < 0 ? from128(-static_cast<__int128>(num_), den_) : *this; }

  // Canonical text: "5", "-5", "3/2", "-3/7".
  std::string to_text() const {
    std::string out = std::to_string(num_);
    if (den_ != 1) {
      out += '/';
      out += std::to_string(den_);
    }
    return out;
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational from128(__int128 num, __int128 den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num == 0) den = 1;
    __int128 g = gcd128(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    constexpr __int128 lo = INT64_MIN;
    constexpr __int128 hi = INT64_MAX;
    if (num < lo || num > hi || den > hi) throw Overflow{};
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  void assign(std::int64_t num, std::int64_t den) {
    *this = from128(num, den);
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace kmarf
