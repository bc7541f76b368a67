#pragma once

// Exact rational numbers. Values whose numerator and denominator fit in 64
// bits stay on a machine-integer fast path; anything larger is promoted to a
// GMP rational and demoted again when it shrinks back.

#include <gmpxx.h>

#include <climits>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polysched {

class Rational {
public:
  Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {} // NOLINT: implicit by design of arithmetic types
  Rational(int n) : num_(n), den_(1) {}          // NOLINT
  Rational(std::int64_t n, std::int64_t d) { assignSmall(n, d); }

  explicit Rational(const mpq_class &q) { assignBig(q); }

  /// Parses "p", "-p" or "p/q".
  static Rational parse(std::string_view text) {
    std::string s(text);
    if (s.empty())
      throw std::invalid_argument("empty rational literal");
    mpq_class q;
    if (q.set_str(s, 10) != 0)
      throw std::invalid_argument("malformed rational literal '" + s + "'");
    if (q.get_den() == 0)
      throw std::invalid_argument("zero denominator in '" + s + "'");
    q.canonicalize();
    return Rational(q);
  }

  [[nodiscard]] bool isSmall() const { return !big_; }
  [[nodiscard]] bool isZero() const { return !big_ && num_ == 0; }
  [[nodiscard]] bool isInteger() const {
    return big_ ? big_->get_den() == 1 : den_ == 1;
  }
  [[nodiscard]] int sign() const {
    if (big_)
      return sgn(*big_);
    return (num_ > 0) - (num_ < 0);
  }

  [[nodiscard]] mpq_class toMpq() const {
    if (big_)
      return *big_;
    mpq_class q(mpz_from(num_), mpz_from(den_));
    q.canonicalize();
    return q;
  }
  [[nodiscard]] mpz_class numerator() const {
    return big_ ? mpz_class(big_->get_num()) : mpz_from(num_);
  }
  [[nodiscard]] mpz_class denominator() const {
    return big_ ? mpz_class(big_->get_den()) : mpz_from(den_);
  }
  /// Numerator as int64; throws if out of range or not an integer.
  [[nodiscard]] std::int64_t toInt64() const {
    if (big_ || den_ != 1)
      throw std::range_error("rational " + str() + " is not a small integer");
    return num_;
  }
  [[nodiscard]] double toDouble() const {
    return big_ ? big_->get_d()
                : static_cast<double>(num_) / static_cast<double>(den_);
  }

  [[nodiscard]] Rational floor() const {
    if (isInteger())
      return *this;
    if (!big_) {
      std::int64_t q = num_ / den_;
      if (num_ < 0)
        --q;
      return Rational(q);
    }
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), big_->get_num_mpz_t(), big_->get_den_mpz_t());
    return Rational(mpq_class(r));
  }
  [[nodiscard]] Rational ceil() const {
    if (isInteger())
      return *this;
    return floor() + Rational(1);
  }

  [[nodiscard]] std::string str() const {
    if (big_)
      return big_->get_str();
    if (den_ == 1)
      return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  Rational operator-() const {
    if (!big_ && num_ != INT64_MIN)
      return fromReduced(-num_, den_);
    return Rational(mpq_class(-toMpq()));
  }

  friend Rational operator+(const Rational &a, const Rational &b) {
    if (a.isSmall() && b.isSmall()) {
      if (a.den_ == 1 && b.den_ == 1) {
        std::int64_t r;
        if (!__builtin_add_overflow(a.num_, b.num_, &r))
          return fromReduced(r, 1);
      } else {
        std::int64_t x, y, n, d;
        if (!__builtin_mul_overflow(a.num_, b.den_, &x) &&
            !__builtin_mul_overflow(b.num_, a.den_, &y) &&
            !__builtin_add_overflow(x, y, &n) &&
            !__builtin_mul_overflow(a.den_, b.den_, &d))
          return Rational(n, d);
      }
    }
    return Rational(mpq_class(a.toMpq() + b.toMpq()));
  }
  friend Rational operator-(const Rational &a, const Rational &b) {
    if (a.isSmall() && b.isSmall()) {
      if (a.den_ == 1 && b.den_ == 1) {
        std::int64_t r;
        if (!__builtin_sub_overflow(a.num_, b.num_, &r))
          return fromReduced(r, 1);
      } else {
        std::int64_t x, y, n, d;
        if (!__builtin_mul_overflow(a.num_, b.den_, &x) &&
            !__builtin_mul_overflow(b.num_, a.den_, &y) &&
            !__builtin_sub_overflow(x, y, &n) &&
            !__builtin_mul_overflow(a.den_, b.den_, &d))
          return Rational(n, d);
      }
    }
    return Rational(mpq_class(a.toMpq() - b.toMpq()));
  }
  friend Rational operator*(const Rational &a, const Rational &b) {
    if (a.isSmall() && b.isSmall()) {
      if (a.num_ == 0 || b.num_ == 0)
        return Rational();
      // Cross-cancel first to keep intermediates small.
      std::int64_t g1 = std::gcd(a.num_, b.den_);
      std::int64_t g2 = std::gcd(b.num_, a.den_);
      std::int64_t n, d;
      if (!__builtin_mul_overflow(a.num_ / g1, b.num_ / g2, &n) &&
          !__builtin_mul_overflow(a.den_ / g2, b.den_ / g1, &d))
        return fromReduced(n, d);
    }
    return Rational(mpq_class(a.toMpq() * b.toMpq()));
  }
  friend Rational operator/(const Rational &a, const Rational &b) {
    if (b.isZero())
      throw std::domain_error("rational division by zero");
    if (a.isSmall() && b.isSmall() && b.num_ != INT64_MIN) {
      std::int64_t bn = b.num_ < 0 ? -b.num_ : b.num_;
      std::int64_t bd = b.num_ < 0 ? -b.den_ : b.den_;
      if (a.num_ == 0)
        return Rational();
      std::int64_t g1 = std::gcd(a.num_, bn);
      std::int64_t g2 = std::gcd(a.den_, bd);
      std::int64_t n, d;
      if (!__builtin_mul_overflow(a.num_ / g1, bd / g2, &n) &&
          !__builtin_mul_overflow(a.den_ / g2, bn / g1, &d))
        return fromReduced(n, d);
    }
    return Rational(mpq_class(a.toMpq() / b.toMpq()));
  }

  Rational &operator+=(const Rational &o) { return *this = *this + o; }
  Rational &operator-=(const Rational &o) { return *this = *this - o; }
  Rational &operator*=(const Rational &o) { return *this = *this * o; }
  Rational &operator/=(const Rational &o) { return *this = *this / o; }

  friend bool operator==(const Rational &a, const Rational &b) {
    if (a.isSmall() && b.isSmall())
      return a.num_ == b.num_ && a.den_ == b.den_;
    if (a.isSmall() != b.isSmall())
      return false; // canonical forms: big values never fit the small path
    return *a.big_ == *b.big_;
  }
  friend std::strong_ordering operator<=>(const Rational &a,
                                          const Rational &b) {
    if (a.isSmall() && b.isSmall()) {
      if (a.den_ == b.den_)
        return a.num_ <=> b.num_;
      __int128 x = static_cast<__int128>(a.num_) * b.den_;
      __int128 y = static_cast<__int128>(b.num_) * a.den_;
      return x <=> y;
    }
    int c = cmp(a.toMpq(), b.toMpq());
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater
                          : std::strong_ordering::equal);
  }

  friend std::ostream &operator<<(std::ostream &os, const Rational &r) {
    return os << r.str();
  }

  [[nodiscard]] std::size_t hash() const {
    if (big_)
      return std::hash<std::string>{}(big_->get_str());
    return std::hash<std::int64_t>{}(num_) * 31 ^
           std::hash<std::int64_t>{}(den_);
  }

private:
  static mpz_class mpz_from(std::int64_t v) {
    static_assert(sizeof(long) == sizeof(std::int64_t));
    return mpz_class(static_cast<long>(v));
  }

  static Rational fromReduced(std::int64_t n, std::int64_t d) {
    if (n == INT64_MIN)
      return Rational(n, d);
    Rational r;
    r.num_ = n;
    r.den_ = d;
    return r;
  }

  void assignSmall(std::int64_t n, std::int64_t d) {
    if (d == 0)
      throw std::domain_error("rational with zero denominator");
    if (n == INT64_MIN || d == INT64_MIN) {
      mpq_class q(mpz_from(n), mpz_from(d));
      q.canonicalize();
      assignBig(q);
      return;
    }
    if (d < 0) {
      n = -n;
      d = -d;
    }
    std::int64_t g = std::gcd(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    num_ = n;
    den_ = d;
    big_.reset();
  }

  void assignBig(const mpq_class &q) {
    if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p() &&
        q.get_num() != LONG_MIN) {
      num_ = q.get_num().get_si();
      den_ = q.get_den().get_si();
      big_.reset();
    } else {
      num_ = 0;
      den_ = 1;
      big_ = std::make_shared<const mpq_class>(q);
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  std::shared_ptr<const mpq_class> big_;
};

inline Rational abs(const Rational &r) { return r.sign() < 0 ? -r : r; }

/// Least common multiple of two positive big integers.
inline mpz_class lcm(const mpz_class &a, const mpz_class &b) {
  mpz_class r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Rational fromMpz(const mpz_class &z) { return Rational(mpq_class(z)); }

} // namespace polysched

template <> struct std::hash<polysched::Rational> {
  std::size_t operator()(const polysched::Rational &r) const noexcept {
    return r.hash();
  }
};
