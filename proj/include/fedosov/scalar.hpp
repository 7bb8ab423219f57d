#pragma once

// Scalar backends for every coefficient in the library.
//
// GaussRational is the exact backend (Q[i]).
// FloatComplex is the fast backend; it compares with a tolerance and prunes
// coefficients below kFloatPruneThreshold so that sparse containers stay
// sparse.

#include "fedosov/rational.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace fedosov {

class GaussRational {
 public:
  class Sum;

  static constexpr bool is_exact = true;
  static constexpr const char* backend_name = "exact";

  GaussRational() = default;
  GaussRational(long value) : re_(value) {}  // NOLINT(implicit)
  GaussRational(Rational re, Rational im) : re_(std::move(re)), im_(std::move(im)) {}
  explicit GaussRational(Rational re) : re_(std::move(re)) {}

  static GaussRational rational(long num, long den) {
    if (den == 0) throw std::domain_error("GaussRational: zero denominator");
    return GaussRational(Rational(num, den));
  }
  static GaussRational imag_unit() { return {Rational(0), Rational(1)}; }

  const Rational& re() const { return re_; }
  const Rational& im() const { return im_; }

  bool is_zero() const { return re_.is_zero() && im_.is_zero(); }
  bool is_real() const { return im_.is_zero(); }
  GaussRational real_part() const { return GaussRational(re_); }
  GaussRational imag_part() const { return GaussRational(im_); }
  GaussRational conj() const { return {re_, -im_}; }

  GaussRational operator-() const { return {-re_, -im_}; }
  GaussRational& operator+=(const GaussRational& o) {
    re_ += o.re_;
    if (!o.im_.is_zero()) im_ += o.im_;
    return *this;
  }
  GaussRational& operator-=(const GaussRational& o) {
    re_ -= o.re_;
    if (!o.im_.is_zero()) im_ -= o.im_;
    return *this;
  }
  GaussRational& operator*=(const GaussRational& o) {
    *this = *this * o;
    return *this;
  }
  friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
  friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
  friend GaussRational operator*(const GaussRational& a, const GaussRational& b) {
    const bool ar = a.im_.is_zero(), br = b.im_.is_zero();
    if (ar && br) return GaussRational(a.re_ * b.re_);
    if (ar) return {a.re_ * b.re_, a.re_ * b.im_};
    if (br) return {a.re_ * b.re_, a.im_ * b.re_};
    if (a.re_.is_zero() && b.re_.is_zero()) return GaussRational(-(a.im_ * b.im_));
    return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
  }
  // this += a * b without materialising the product.
  void add_product(const GaussRational& a, const GaussRational& b) {
    const bool ar = a.im_.is_zero(), br = b.im_.is_zero();
    if (ar && br) {
      re_.add_product(a.re_, b.re_);
    } else if (ar) {
      re_.add_product(a.re_, b.re_);
      im_.add_product(a.re_, b.im_);
    } else if (br) {
      re_.add_product(a.re_, b.re_);
      im_.add_product(a.im_, b.re_);
    } else {
      re_.add_product(a.re_, b.re_);
      re_.sub_product(a.im_, b.im_);
      im_.add_product(a.re_, b.im_);
      im_.add_product(a.im_, b.re_);
    }
  }
  GaussRational inverse() const {
    if (is_zero()) throw std::domain_error("GaussRational: division by zero");
    const Rational n = (re_ * re_ + im_ * im_).inverse();
    return {re_ * n, -im_ * n};
  }
  friend GaussRational operator/(const GaussRational& a, const GaussRational& b) {
    return a * b.inverse();
  }
  friend bool operator==(const GaussRational& a, const GaussRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  // Exact square root of a non-negative rational, if one exists in Q.
  std::optional<GaussRational> sqrt_exact() const {
    if (!is_real()) return std::nullopt;
    auto r = re_.sqrt_exact();
    if (!r) return std::nullopt;
    return GaussRational(std::move(*r));
  }

  double abs() const { return std::abs(to_complex()); }
  std::complex<double> to_complex() const { return {re_.to_double(), im_.to_double()}; }
  std::string re_string() const { return re_.str(); }
  std::string im_string() const { return im_.str(); }
  std::string to_string() const {
    if (is_real()) return re_.str();
    if (re_.is_zero()) return im_.str() + "i";
    return re_.str() + (im_.sign() > 0 ? "+" : "") + im_.str() + "i";
  }

 private:
  Rational re_;
  Rational im_;
};

class GaussRational::Sum {
 public:
  void add_product(const GaussRational& a, const GaussRational& b) {
    const bool ar = a.im_.is_zero(), br = b.im_.is_zero();
    re_.add_product(a.re_, b.re_);
    if (ar && br) return;
    if (ar) {
      im_.add_product(a.re_, b.im_);
    } else if (br) {
      im_.add_product(a.im_, b.re_);
    } else {
      re_.sub_product(a.im_, b.im_);
      im_.add_product(a.re_, b.im_);
      im_.add_product(a.im_, b.re_);
    }
  }
  GaussRational value() const { return {re_.value(), im_.value()}; }

 private:
  RationalSum re_, im_;
};

inline constexpr double kFloatPruneThreshold = 1e-14;

class FloatComplex {
 public:
  static constexpr bool is_exact = false;
  static constexpr const char* backend_name = "float";
  class Sum;

  FloatComplex() = default;
  FloatComplex(long value) : v_(static_cast<double>(value), 0.0) {}  // NOLINT(implicit)
  FloatComplex(double re, double im) : v_(re, im) {}
  explicit FloatComplex(std::complex<double> v) : v_(v) {}

  static FloatComplex rational(long num, long den) {
    if (den == 0) throw std::domain_error("FloatComplex: zero denominator");
    return {static_cast<double>(num) / static_cast<double>(den), 0.0};
  }
  static FloatComplex imag_unit() { return {0.0, 1.0}; }

  double re() const { return v_.real(); }
  double im() const { return v_.imag(); }

  bool is_zero() const { return std::abs(v_) <= kFloatPruneThreshold; }
  bool is_real() const { return std::abs(v_.imag()) <= kFloatPruneThreshold; }
  FloatComplex real_part() const { return {v_.real(), 0.0}; }
  FloatComplex imag_part() const { return {v_.imag(), 0.0}; }
  FloatComplex conj() const { return FloatComplex(std::conj(v_)); }

  FloatComplex operator-() const { return FloatComplex(-v_); }
  FloatComplex& operator+=(const FloatComplex& o) {
    v_ += o.v_;
    return *this;
  }
  FloatComplex& operator-=(const FloatComplex& o) {
    v_ -= o.v_;
    return *this;
  }
  FloatComplex& operator*=(const FloatComplex& o) {
    v_ *= o.v_;
    return *this;
  }
  friend FloatComplex operator+(FloatComplex a, const FloatComplex& b) { return a += b; }
  friend FloatComplex operator-(FloatComplex a, const FloatComplex& b) { return a -= b; }
  friend FloatComplex operator*(FloatComplex a, const FloatComplex& b) { return a *= b; }
  void add_product(const FloatComplex& a, const FloatComplex& b) { v_ += a.v_ * b.v_; }
  FloatComplex inverse() const {
    if (v_ == std::complex<double>{}) throw std::domain_error("FloatComplex: division by zero");
    return FloatComplex(1.0 / v_);
  }
  friend FloatComplex operator/(const FloatComplex& a, const FloatComplex& b) {
    return a * b.inverse();
  }
  // Bitwise equality; use approx_equal for tolerance comparisons.
  friend bool operator==(const FloatComplex& a, const FloatComplex& b) { return a.v_ == b.v_; }

  std::optional<FloatComplex> sqrt_exact() const {
    if (std::abs(v_.imag()) > kFloatPruneThreshold || v_.real() < 0) return std::nullopt;
    return FloatComplex(std::sqrt(v_.real()), 0.0);
  }

  double abs() const { return std::abs(v_); }
  std::complex<double> to_complex() const { return v_; }
  std::string re_string() const { return format(v_.real()); }
  std::string im_string() const { return format(v_.imag()); }
  std::string to_string() const { return format(v_.real()) + "+" + format(v_.imag()) + "i"; }

 private:
  static std::string format(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
  std::complex<double> v_{};
};

class FloatComplex::Sum {
 public:
  void add_product(const FloatComplex& a, const FloatComplex& b) { v_.add_product(a, b); }
  FloatComplex value() const { return v_; }

 private:
  FloatComplex v_;
};

template <class S>
concept Scalar = requires(const S a, const S b) {
  { a + b } -> std::convertible_to<S>;
  { a * b } -> std::convertible_to<S>;
  { a.conj() } -> std::convertible_to<S>;
  { a.is_zero() } -> std::convertible_to<bool>;
  { a.inverse() } -> std::convertible_to<S>;
  { S::rational(1L, 2L) } -> std::convertible_to<S>;
  { S::imag_unit() } -> std::convertible_to<S>;
  { S::is_exact } -> std::convertible_to<bool>;
};

template <Scalar S>
bool approx_equal(const S& a, const S& b, double tol) {
  if constexpr (S::is_exact) {
    (void)tol;
    return a == b;
  } else {
    const double scale = std::max({1.0, a.abs(), b.abs()});
    return (a - b).abs() <= tol * scale;
  }
}

}  // namespace fedosov
