#pragma once

// Exact rational numbers. Values whose numerator and denominator fit in 64
// bits are stored inline and handled with overflow-checked machine
// arithmetic; anything larger moves to a GMP rational and moves back once it
// fits again.

#include <gmpxx.h>

#include <climits>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace fedosov {

namespace detail {

template <class U>
U binary_gcd(U a, U b) {
  if (a == 0) return b;
  if (b == 0) return a;
  auto ctz = [](U x) {
    if constexpr (sizeof(U) > 8) {
      const auto lo = static_cast<unsigned long long>(x);
      return lo ? __builtin_ctzll(lo) : 64 + __builtin_ctzll(static_cast<unsigned long long>(x >> 64));
    } else {
      return __builtin_ctzll(x);
    }
  };
  const int shift = ctz(a | b);
  a >>= ctz(a);
  do {
    b >>= ctz(b);
    if (a > b) std::swap(a, b);
    b -= a;
  } while (b != 0);
  return a << shift;
}

inline long gcd(long a, long b) {
  auto ua = a < 0 ? 0UL - static_cast<unsigned long>(a) : static_cast<unsigned long>(a);
  auto ub = b < 0 ? 0UL - static_cast<unsigned long>(b) : static_cast<unsigned long>(b);
  return static_cast<long>(binary_gcd(ua, ub));
}

}  // namespace detail

class Rational {
 public:
  Rational() = default;
  Rational(long value) : num_(value) {}  // NOLINT(implicit)
  Rational(long num, long den) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    if (den < 0) {
      if (num == INT64_MIN || den == INT64_MIN) {
        set_big(mpq_class(mpz_class(num), mpz_class(den)));
        return;
      }
      num = -num;
      den = -den;
    }
    const long g = detail::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
  }
  explicit Rational(const mpq_class& q) { set_big(q); }

  Rational(const Rational& o) : num_(o.num_), den_(o.den_), big_(o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr) {}
  Rational(Rational&&) noexcept = default;
  Rational& operator=(const Rational& o) {
    if (this != &o) {
      num_ = o.num_;
      den_ = o.den_;
      big_ = o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr;
    }
    return *this;
  }
  Rational& operator=(Rational&&) noexcept = default;

  bool is_small() const { return !big_; }
  bool is_zero() const { return !big_ && num_ == 0; }
  int sign() const {
    if (big_) return sgn(*big_);
    return (num_ > 0) - (num_ < 0);
  }

  mpq_class to_mpq() const {
    if (big_) return *big_;
    return mpq_class(mpz_class(num_), mpz_class(den_));
  }
  double to_double() const {
    if (big_) return big_->get_d();
    return static_cast<double>(num_) / static_cast<double>(den_);
  }
  std::string str() const {
    if (big_) return big_->get_str();
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  Rational operator-() const {
    if (!big_ && num_ != INT64_MIN) {
      Rational r;
      r.num_ = -num_;
      r.den_ = den_;
      return r;
    }
    return Rational(mpq_class(-to_mpq()));
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    Rational r;
    if (a.big_ || b.big_ || !add_small(a.num_, a.den_, b.num_, b.den_, r.num_, r.den_))
      r.set_big(a.to_mpq() + b.to_mpq());
    return r;
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    Rational r;
    if (a.big_ || b.big_ || !mul_small(a.num_, a.den_, b.num_, b.den_, r.num_, r.den_))
      r.set_big(a.to_mpq() * b.to_mpq());
    return r;
  }
  Rational& operator+=(const Rational& o) {
    if (!big_ && !o.big_) {
      long n, d;
      if (add_small(num_, den_, o.num_, o.den_, n, d)) {
        num_ = n;
        den_ = d;
        return *this;
      }
    }
    set_big(to_mpq() + o.to_mpq());
    return *this;
  }
  Rational& operator-=(const Rational& o) { return *this += -o; }
  // this += a * b
  void add_product(const Rational& a, const Rational& b) {
    if (!big_ && !a.big_ && !b.big_) {
      long pn, pd, n, d;
      if (mul_small(a.num_, a.den_, b.num_, b.den_, pn, pd) && add_small(num_, den_, pn, pd, n, d)) {
        num_ = n;
        den_ = d;
        return;
      }
    }
    set_big(to_mpq() + a.to_mpq() * b.to_mpq());
  }
  // this -= a * b
  void sub_product(const Rational& a, const Rational& b) {
    if (!big_ && !a.big_ && !b.big_ && a.num_ != INT64_MIN) {
      long pn, pd, n, d;
      if (mul_small(-a.num_, a.den_, b.num_, b.den_, pn, pd) && add_small(num_, den_, pn, pd, n, d)) {
        num_ = n;
        den_ = d;
        return;
      }
    }
    set_big(to_mpq() - a.to_mpq() * b.to_mpq());
  }
  Rational inverse() const {
    if (is_zero()) throw std::domain_error("Rational: division by zero");
    if (!big_ && num_ != INT64_MIN) return Rational(num_ < 0 ? -den_ : den_, num_ < 0 ? -num_ : num_);
    return Rational(mpq_class(1 / to_mpq()));
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    // Both sides are canonical: small whenever they fit.
    if (a.big_ || b.big_) return a.big_ && b.big_ && *a.big_ == *b.big_;
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  std::optional<Rational> sqrt_exact() const {
    if (sign() < 0) return std::nullopt;
    const mpq_class q = to_mpq();
    const mpz_class& n = q.get_num();
    const mpz_class& d = q.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
    return Rational(mpq_class(sqrt(n), sqrt(d)));
  }

 private:
  static bool add_small(long an, long ad, long bn, long bd, long& rn, long& rd) {
    // Knuth's reduced addition keeps intermediates small.
    const long g = detail::gcd(ad, bd);
    long t1, t2, t;
    if (g == 1) {
      if (__builtin_mul_overflow(an, bd, &t1) || __builtin_mul_overflow(bn, ad, &t2) || __builtin_add_overflow(t1, t2, &t) ||
          __builtin_mul_overflow(ad, bd, &rd))
        return false;
      rn = t;
      if (rn == 0) rd = 1;
      return true;
    }
    if (__builtin_mul_overflow(an, bd / g, &t1) || __builtin_mul_overflow(bn, ad / g, &t2) || __builtin_add_overflow(t1, t2, &t))
      return false;
    if (t == 0) {
      rn = 0;
      rd = 1;
      return true;
    }
    const long g2 = detail::gcd(t, g);
    if (__builtin_mul_overflow(ad / g, bd / g2, &rd)) return false;
    rn = t / g2;
    return true;
  }
  static bool mul_small(long an, long ad, long bn, long bd, long& rn, long& rd) {
    if (an == 0 || bn == 0) {
      rn = 0;
      rd = 1;
      return true;
    }
    const long g1 = detail::gcd(an, bd), g2 = detail::gcd(bn, ad);
    return !__builtin_mul_overflow(an / g1, bn / g2, &rn) && !__builtin_mul_overflow(ad / g2, bd / g1, &rd);
  }

  void set_big(mpq_class q) {
    q.canonicalize();
    if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p() && q.get_num() != LONG_MIN) {
      num_ = q.get_num().get_si();
      den_ = q.get_den().get_si();
      big_.reset();
    } else {
      big_ = std::make_unique<mpq_class>(std::move(q));
      num_ = 0;
      den_ = 1;
    }
  }

  friend class RationalSum;

  long num_ = 0;
  long den_ = 1;
  std::unique_ptr<mpq_class> big_;
};

// Running sum of products. Small terms are kept over a common denominator
// in 128-bit integers and reduced once, at the end.
class RationalSum {
 public:
  void add_product(const Rational& a, const Rational& b) { accumulate(a, b, false); }
  void sub_product(const Rational& a, const Rational& b) { accumulate(a, b, true); }
  void add(const Rational& a) {
    if (a.big_ || !small_enough(a)) {
      slow_ += a;
      return;
    }
    add(a.num_, a.den_);
  }
  Rational value() const {
    I n = num_, d = den_;
    reduce(n, d);
    Rational r;
    if (n >= INT64_MIN && n <= INT64_MAX && d <= INT64_MAX) {
      r.num_ = static_cast<long>(n);
      r.den_ = static_cast<long>(d);
    } else {
      r.set_big(mpq_class(to_mpz(n), to_mpz(d)));
    }
    if (!slow_.is_zero()) r += slow_;
    return r;
  }

 private:
  using I = __int128;
  using U = unsigned __int128;
  static constexpr long kSmall = 1L << 31;
  static constexpr I kNumLimit = static_cast<I>(1) << 64;
  static constexpr I kDenLimit = static_cast<I>(1) << 62;

  void accumulate(const Rational& a, const Rational& b, bool negate) {
    if (a.big_ || b.big_ || !small_enough(a) || !small_enough(b)) {
      if (negate) slow_.sub_product(a, b);
      else slow_.add_product(a, b);
      return;
    }
    if (a.num_ == 0 || b.num_ == 0) return;
    const I n = static_cast<I>(a.num_) * b.num_;
    add(negate ? -n : n, static_cast<I>(a.den_) * b.den_);
  }

  static bool small_enough(const Rational& a) { return a.num_ > -kSmall && a.num_ < kSmall && a.den_ < kSmall; }
  static U uabs(I x) { return x < 0 ? static_cast<U>(0) - static_cast<U>(x) : static_cast<U>(x); }
  static void reduce(I& n, I& d) {
    if (n == 0) {
      d = 1;
      return;
    }
    const U un = uabs(n);
    const I g = (un >> 64) == 0 && (static_cast<U>(d) >> 64) == 0
                    ? static_cast<I>(detail::binary_gcd(static_cast<unsigned long>(un), static_cast<unsigned long>(d)))
                    : static_cast<I>(detail::binary_gcd(un, static_cast<U>(d)));
    n /= g;
    d /= g;
  }
  static mpz_class to_mpz(I x) {
    const U u = uabs(x);
    mpz_class hi(static_cast<unsigned long>(u >> 64)), lo(static_cast<unsigned long>(u));
    mpz_class r = (hi << 64) + lo;
    return x < 0 ? mpz_class(-r) : r;
  }

  // Invariant on entry: |num_| < 2^64, den_ < 2^62; terms below 2^62.
  void add(I n, I d) {
    const long dl = static_cast<long>(d), Dl = static_cast<long>(den_);
    if (dl == Dl) {
      num_ += n;
    } else if (Dl % dl == 0) {
      num_ += n * (Dl / dl);
    } else if (dl % Dl == 0) {
      num_ = num_ * (dl / Dl) + n;
      den_ = d;
    } else {
      num_ = num_ * d + n * den_;
      den_ *= d;
    }
    if (uabs(num_) >= static_cast<U>(kNumLimit) || den_ >= kDenLimit) {
      reduce(num_, den_);
      if (uabs(num_) >= static_cast<U>(kNumLimit) || den_ >= kDenLimit) {
        slow_ += value_small();
        num_ = 0;
        den_ = 1;
      }
    }
  }
  Rational value_small() const {
    Rational r;
    r.set_big(mpq_class(to_mpz(num_), to_mpz(den_)));
    return r;
  }

  I num_ = 0;
  I den_ = 1;
  Rational slow_;
};

}  // namespace fedosov
