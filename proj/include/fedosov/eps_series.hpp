#pragma once

// Power series in the metric-perturbation parameter eps, truncated at a fixed
// order E. Every operation discards orders above E, so arithmetic is a ring
// homomorphism onto the truncated ring.

#include <algorithm>
#include <climits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedosov/matrix.hpp"
#include "fedosov/ring.hpp"

namespace fedosov {

// Order of a series that has not been tied to a truncation yet (constants).
inline constexpr int kUnboundedOrder = INT_MAX;

template <class T>
class EpsSeries {
 public:
  using value_type = T;
  using scalar_type = scalar_of_t<T>;

  EpsSeries() = default;
  explicit EpsSeries(int order) : order_(check_order(order)) {}
  EpsSeries(int order, std::vector<T> coeffs) : order_(check_order(order)), coeffs_(std::move(coeffs)) {
    if (static_cast<long>(coeffs_.size()) > static_cast<long>(order_) + 1) coeffs_.resize(static_cast<std::size_t>(order_) + 1);
    trim();
  }

  static EpsSeries constant(const T& c, int order = kUnboundedOrder) {
    EpsSeries s(order);
    s.coeffs_.push_back(c);
    s.trim();
    return s;
  }
  static EpsSeries from_scalar(const scalar_type& c)
    requires requires { T::from_scalar(c); }
  {
    return constant(T::from_scalar(c));
  }

  int order() const { return order_; }
  // Number of stored coefficients (highest nonzero power + 1).
  int length() const { return static_cast<int>(coeffs_.size()); }
  bool is_zero() const { return coeffs_.empty(); }

  T operator[](int m) const {
    if (m < 0 || m >= length()) return T{};
    return coeffs_[static_cast<std::size_t>(m)];
  }
  const std::vector<T>& coefficients() const { return coeffs_; }
  void set(int m, T value) {
    if (m < 0) throw std::out_of_range("EpsSeries::set: negative power");
    if (m > order_) return;
    if (m >= length()) coeffs_.resize(static_cast<std::size_t>(m) + 1);
    coeffs_[static_cast<std::size_t>(m)] = std::move(value);
    trim();
  }
  EpsSeries with_order(int order) const { return EpsSeries(order, coeffs_); }

  EpsSeries operator-() const {
    EpsSeries s(order_);
    for (const auto& c : coeffs_) s.coeffs_.push_back(-c);
    return s;
  }
  friend EpsSeries operator+(const EpsSeries& a, const EpsSeries& b) { return combine(a, b, false); }
  friend EpsSeries operator-(const EpsSeries& a, const EpsSeries& b) { return combine(a, b, true); }
  EpsSeries& operator+=(const EpsSeries& o) { return *this = *this + o; }
  EpsSeries& operator-=(const EpsSeries& o) { return *this = *this - o; }

  friend EpsSeries operator*(const EpsSeries& a, const EpsSeries& b) {
    const int order = std::min(a.order_, b.order_);
    EpsSeries s(order);
    if (a.is_zero() || b.is_zero()) return s;
    const long top = std::min<long>(order, static_cast<long>(a.length() + b.length() - 2));
    s.coeffs_.resize(static_cast<std::size_t>(top) + 1);
    for (int i = 0; i < a.length(); ++i) {
      if (a.coeffs_[static_cast<std::size_t>(i)].is_zero()) continue;
      for (int j = 0; j < b.length() && i + j <= top; ++j) {
        if (b.coeffs_[static_cast<std::size_t>(j)].is_zero()) continue;
        auto& slot = s.coeffs_[static_cast<std::size_t>(i + j)];
        slot = slot + a.coeffs_[static_cast<std::size_t>(i)] * b.coeffs_[static_cast<std::size_t>(j)];
      }
    }
    s.trim();
    return s;
  }
  template <class U>
    requires(!std::is_same_v<U, EpsSeries>)
  friend EpsSeries operator*(const EpsSeries& a, const U& u) {
    EpsSeries s(a.order_);
    for (const auto& c : a.coeffs_) s.coeffs_.push_back(c * u);
    s.trim();
    return s;
  }

  friend bool operator==(const EpsSeries& a, const EpsSeries& b) { return a.coeffs_ == b.coeffs_; }

  EpsSeries conj() const { return map([](const T& c) { return c.conj(); }); }
  EpsSeries derive(int i) const { return map([i](const T& c) { return c.derive(i); }); }

  template <class F>
  auto map(F&& f) const -> EpsSeries<std::decay_t<decltype(f(std::declval<const T&>()))>> {
    using R = std::decay_t<decltype(f(std::declval<const T&>()))>;
    std::vector<R> out;
    out.reserve(coeffs_.size());
    for (const auto& c : coeffs_) out.push_back(f(c));
    return EpsSeries<R>(order_, std::move(out));
  }

 private:
  template <class>
  friend class EpsSeries;

  static int check_order(int order) {
    if (order < 0) throw std::invalid_argument("EpsSeries: negative truncation order");
    return order;
  }
  void trim() {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
  }
  static EpsSeries combine(const EpsSeries& a, const EpsSeries& b, bool subtract) {
    EpsSeries s(std::min(a.order_, b.order_));
    const int n = std::min<long>(std::max(a.length(), b.length()), static_cast<long>(s.order_) + 1);
    s.coeffs_.reserve(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
      const bool in_a = m < a.length(), in_b = m < b.length();
      if (in_a && in_b)
        s.coeffs_.push_back(subtract ? a.coeffs_[static_cast<std::size_t>(m)] - b.coeffs_[static_cast<std::size_t>(m)]
                                     : a.coeffs_[static_cast<std::size_t>(m)] + b.coeffs_[static_cast<std::size_t>(m)]);
      else if (in_a)
        s.coeffs_.push_back(a.coeffs_[static_cast<std::size_t>(m)]);
      else
        s.coeffs_.push_back(subtract ? -b.coeffs_[static_cast<std::size_t>(m)] : b.coeffs_[static_cast<std::size_t>(m)]);
    }
    s.trim();
    return s;
  }

  int order_ = kUnboundedOrder;
  std::vector<T> coeffs_;
};

template <class T>
std::optional<std::string> difference_witness(const EpsSeries<T>& a, const EpsSeries<T>& b, double tol = 0.0) {
  const int n = std::max(a.length(), b.length());
  for (int m = 0; m < n; ++m)
    if (auto w = difference_witness(a[m], b[m], tol)) return "eps^" + std::to_string(m) + " " + *w;
  return std::nullopt;
}

template <class T>
double norm_inf(const EpsSeries<T>& a) {
  double m = 0;
  for (const auto& c : a.coefficients()) m = std::max(m, norm_inf(c));
  return m;
}

// Inverse of the leading coefficient; it must be an invertible constant.
template <Scalar S>
S leading_inverse(const S& s) {
  if (s.is_zero()) throw std::domain_error("eps_invert: leading coefficient is zero");
  return s.inverse();
}

template <Scalar S>
FourierScalar<S> leading_inverse(const FourierScalar<S>& f) {
  if (f.is_zero() || !f.is_constant())
    throw std::domain_error("eps_invert: leading coefficient is not a nonzero constant");
  return FourierScalar<S>::constant(f.dim(), f.constant_term().inverse());
}

template <Scalar S>
Matrix<FourierScalar<S>> leading_inverse(const Matrix<FourierScalar<S>>& m) {
  auto c = constant_matrix(m);
  if (!c) throw std::domain_error("eps_invert: leading matrix is not constant");
  auto inv = inverse(*c);
  if (!inv) throw std::domain_error("eps_invert: leading matrix is singular");
  int dim = 0;
  for (const auto& e : m.entries()) dim = std::max(dim, e.dim());
  return inv->map([dim](const S& s) { return FourierScalar<S>::constant(dim, s); });
}

// u * eps_invert(u) = 1 through order E. Works for commutative entries and
// for matrix coefficients (the result is the two-sided inverse).
template <class T>
EpsSeries<T> eps_invert(const EpsSeries<T>& u) {
  if (u.order() == kUnboundedOrder && u.length() > 1)
    throw std::invalid_argument("eps_invert: series has no truncation order");
  const T lead_inv = leading_inverse(u[0]);
  const int order = u.order() == kUnboundedOrder ? 0 : u.order();
  std::vector<T> v;
  v.push_back(lead_inv);
  for (int m = 1; m <= order; ++m) {
    T acc{};
    for (int j = 1; j <= m; ++j)
      if (!u[j].is_zero() && !v[static_cast<std::size_t>(m - j)].is_zero())
        acc = acc + u[j] * v[static_cast<std::size_t>(m - j)];
    v.push_back(-(lead_inv * acc));
  }
  return EpsSeries<T>(u.order(), std::move(v));
}

template <Scalar S>
S leading_sqrt(const S& s) {
  auto r = s.sqrt_exact();
  if (!r || r->is_zero())
    throw std::domain_error(
        "eps_sqrt: leading coefficient " + s.to_string() +
        " has no square root in the scalar field (normalise |det| of the background to 1 or use the float backend)");
  return *r;
}

template <Scalar S>
FourierScalar<S> leading_sqrt(const FourierScalar<S>& f) {
  if (!f.is_constant()) throw std::domain_error("eps_sqrt: leading coefficient is not constant");
  return FourierScalar<S>::constant(f.dim(), leading_sqrt(f.constant_term()));
}

// Square root with positive leading constant; result^2 = u through order E.
template <class T>
EpsSeries<T> eps_sqrt(const EpsSeries<T>& u) {
  const T y0 = leading_sqrt(u[0]);
  const T inv_two_y0 = leading_inverse(y0 + y0);
  const int order = u.order() == kUnboundedOrder ? 0 : u.order();
  std::vector<T> y;
  y.push_back(y0);
  for (int m = 1; m <= order; ++m) {
    T acc = u[m];
    for (int j = 1; j < m; ++j) acc = acc - y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(m - j)];
    y.push_back(acc * inv_two_y0);
  }
  return EpsSeries<T>(u.order(), std::move(y));
}

// Reshaping between a matrix of series and a series of matrices.
template <class T>
EpsSeries<Matrix<T>> to_series_of_matrices(const Matrix<EpsSeries<T>>& m) {
  int order = kUnboundedOrder, len = 0;
  for (const auto& e : m.entries()) {
    if (!e.is_zero()) order = std::min(order, e.order());
    len = std::max(len, e.length());
  }
  std::vector<Matrix<T>> coeffs;
  for (int k = 0; k < len; ++k) coeffs.push_back(m.map([k](const EpsSeries<T>& e) { return e[k]; }));
  return EpsSeries<Matrix<T>>(order, std::move(coeffs));
}

template <class T>
Matrix<EpsSeries<T>> to_matrix_of_series(const EpsSeries<Matrix<T>>& s, int n) {
  Matrix<EpsSeries<T>> m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<T> c;
      for (int k = 0; k < s.length(); ++k) c.push_back(s[k].size() ? s[k](i, j) : T{});
      m(i, j) = EpsSeries<T>(s.order(), std::move(c));
    }
  return m;
}

// Inverse of a matrix whose entries are eps-series with constant leading part.
template <class T>
Matrix<EpsSeries<T>> eps_invert(const Matrix<EpsSeries<T>>& m) {
  return to_matrix_of_series(eps_invert(to_series_of_matrices(m)), m.size());
}

}  // namespace fedosov
