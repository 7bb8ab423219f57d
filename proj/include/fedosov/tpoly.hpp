#pragma once

// Polynomials in the homotopy parameter t with coefficients in a coefficient
// ring. Used as a coefficient ring itself so that the whole Fedosov machine can
// run with t-dependent connection data.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fedosov/ring.hpp"

namespace fedosov {

template <class C>
class TPoly {
 public:
  using value_type = C;
  using scalar_type = scalar_of_t<C>;

  TPoly() = default;
  explicit TPoly(std::vector<C> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

  static TPoly constant(const C& c) { return TPoly(std::vector<C>{c}); }
  static TPoly from_scalar(const scalar_type& s) { return constant(C::from_scalar(s)); }
  // 1 - t
  static TPoly one_minus_t() {
    return TPoly(std::vector<C>{C::from_scalar(scalar_type(1)), C::from_scalar(scalar_type(-1))});
  }

  bool is_zero() const { return coeffs_.empty(); }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  C operator[](int k) const {
    if (k < 0 || k > degree()) return C{};
    return coeffs_[static_cast<std::size_t>(k)];
  }
  const std::vector<C>& coefficients() const { return coeffs_; }

  TPoly operator-() const { return map([](const C& c) { return -c; }); }
  friend TPoly operator+(const TPoly& a, const TPoly& b) { return combine(a, b, false); }
  friend TPoly operator-(const TPoly& a, const TPoly& b) { return combine(a, b, true); }
  TPoly& operator+=(const TPoly& o) { return *this = *this + o; }
  TPoly& operator-=(const TPoly& o) { return *this = *this - o; }

  friend TPoly operator*(const TPoly& a, const TPoly& b) {
    if (a.is_zero() || b.is_zero()) return TPoly();
    std::vector<C> out(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
      if (a.coeffs_[i].is_zero()) continue;
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
        if (b.coeffs_[j].is_zero()) continue;
        out[i + j] = out[i + j] + a.coeffs_[i] * b.coeffs_[j];
      }
    }
    return TPoly(std::move(out));
  }
  template <class U>
    requires(!std::is_same_v<U, TPoly>)
  friend TPoly operator*(const TPoly& a, const U& u) {
    return a.map([&u](const C& c) { return c * u; });
  }

  friend bool operator==(const TPoly& a, const TPoly& b) { return a.coeffs_ == b.coeffs_; }

  TPoly conj() const { return map([](const C& c) { return c.conj(); }); }
  TPoly derive(int i) const { return map([i](const C& c) { return c.derive(i); }); }

  // d/dt
  TPoly ddt() const {
    std::vector<C> out;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) out.push_back(coeffs_[k] * scalar_type(static_cast<long>(k)));
    return TPoly(std::move(out));
  }
  // Integral from 0 to t.
  TPoly integrate() const {
    std::vector<C> out;
    out.reserve(coeffs_.size() + 1);
    out.emplace_back();
    for (std::size_t k = 0; k < coeffs_.size(); ++k)
      out.push_back(coeffs_[k] * scalar_type::rational(1, static_cast<long>(k + 1)));
    return TPoly(std::move(out));
  }
  C eval(const scalar_type& t) const {
    C acc{};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  template <class F>
  TPoly map(F&& f) const {
    std::vector<C> out;
    out.reserve(coeffs_.size());
    for (const auto& c : coeffs_) out.push_back(f(c));
    return TPoly(std::move(out));
  }

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
  }
  static TPoly combine(const TPoly& a, const TPoly& b, bool subtract) {
    std::vector<C> out(std::max(a.coeffs_.size(), b.coeffs_.size()));
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (k < a.coeffs_.size()) out[k] = a.coeffs_[k];
      if (k < b.coeffs_.size()) out[k] = subtract ? out[k] - b.coeffs_[k] : out[k] + b.coeffs_[k];
    }
    return TPoly(std::move(out));
  }

  std::vector<C> coeffs_;
};

template <class C>
std::optional<std::string> difference_witness(const TPoly<C>& a, const TPoly<C>& b, double tol = 0.0) {
  const int n = std::max(a.degree(), b.degree());
  for (int k = 0; k <= n; ++k)
    if (auto w = difference_witness(a[k], b[k], tol)) return "t^" + std::to_string(k) + " " + *w;
  return std::nullopt;
}

template <class C>
double norm_inf(const TPoly<C>& a) {
  double m = 0;
  for (const auto& c : a.coefficients()) m = std::max(m, norm_inf(c));
  return m;
}

}  // namespace fedosov
