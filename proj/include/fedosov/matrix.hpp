#pragma once

// Dense square matrices over an arbitrary coefficient type. EndoSection is the
// matrix of FourierScalar entries representing a section of End(E).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedosov/fourier.hpp"
#include "fedosov/ring.hpp"

namespace fedosov {

template <class T>
class Matrix {
 public:
  using value_type = T;
  using scalar_type = scalar_of_t<T>;

  Matrix() = default;
  explicit Matrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    if (n < 0) throw std::invalid_argument("Matrix: negative size");
  }
  Matrix(int n, std::vector<T> entries) : n_(n), data_(std::move(entries)) {
    if (data_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
      throw std::invalid_argument("Matrix: entry count does not match size");
  }

  static Matrix identity(int n, const T& one) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = one;
    return m;
  }
  static Matrix identity(int n)
    requires requires { T::from_scalar(scalar_type(1)); }
  {
    return identity(n, T::from_scalar(scalar_type(1)));
  }

  int size() const { return n_; }
  T& operator()(int i, int j) { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const { return data_[index(i, j)]; }
  const std::vector<T>& entries() const { return data_; }

  bool is_zero() const {
    for (const auto& e : data_)
      if (!e.is_zero()) return false;
    return true;
  }

  Matrix operator-() const {
    Matrix m(n_);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!data_[k].is_zero()) m.data_[k] = -data_[k];
    return m;
  }
  // A 0x0 matrix acts as the zero of every size.
  Matrix& operator+=(const Matrix& o) {
    if (o.n_ == 0) return *this;
    if (n_ == 0) return *this = o;
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!o.data_[k].is_zero()) data_[k] = data_[k] + o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    if (o.n_ == 0) return *this;
    if (n_ == 0) return *this = -o;
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!o.data_[k].is_zero()) data_[k] = data_[k] - o.data_[k];
    return *this;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

  // this += m * s for a scalar-like factor s.
  template <class U>
  void add_scaled(const Matrix& m, const U& s) {
    if (m.n_ == 0) return;
    if (n_ == 0) *this = Matrix(m.n_);
    check_same(m);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!m.data_[k].is_zero()) data_[k] = data_[k] + m.data_[k] * s;
  }

  template <class U>
    requires(!std::is_same_v<U, Matrix>)
  friend Matrix operator*(const Matrix& a, const U& s) {
    Matrix m(a.n_);
    for (std::size_t k = 0; k < a.data_.size(); ++k)
      if (!a.data_[k].is_zero()) m.data_[k] = a.data_[k] * s;
    return m;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.n_ == 0 || b.n_ == 0) return Matrix();
    a.check_same(b);
    const int n = a.n_;
    Matrix m(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const T& aik = a(i, k);
        if (aik.is_zero()) continue;
        for (int j = 0; j < n; ++j) {
          const T& bkj = b(k, j);
          if (bkj.is_zero()) continue;
          m(i, j) = m(i, j) + aik * bkj;
        }
      }
    return m;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    if (a.n_ == 0 || b.n_ == 0) return a.is_zero() && b.is_zero();
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

  Matrix transpose() const {
    Matrix m(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }
  // Entrywise complex conjugate.
  Matrix conj() const {
    Matrix m(n_);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!data_[k].is_zero()) m.data_[k] = data_[k].conj();
    return m;
  }
  Matrix conj_transpose() const { return conj().transpose(); }

  Matrix derive(int i) const {
    Matrix m(n_);
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (!data_[k].is_zero()) m.data_[k] = data_[k].derive(i);
    return m;
  }

  T trace() const {
    T t{};
    for (int i = 0; i < n_; ++i) t = t + (*this)(i, i);
    return t;
  }

  template <class F>
  auto map(F&& f) const -> Matrix<std::decay_t<decltype(f(std::declval<const T&>()))>> {
    using R = std::decay_t<decltype(f(std::declval<const T&>()))>;
    std::vector<R> out;
    out.reserve(data_.size());
    for (const auto& e : data_) out.push_back(f(e));
    return Matrix<R>(n_, std::move(out));
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }
  void check_same(const Matrix& o) const {
    if (n_ != o.n_) throw std::invalid_argument("Matrix: size mismatch");
  }

  int n_ = 0;
  std::vector<T> data_;
};

// Kronecker product; index (i, j) of a and (k, l) of b map to
// (i * nb + k, j * nb + l).
template <class T>
Matrix<T> kron(const Matrix<T>& a, const Matrix<T>& b) {
  const int na = a.size(), nb = b.size();
  Matrix<T> m(na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j) {
      if (a(i, j).is_zero()) continue;
      for (int k = 0; k < nb; ++k)
        for (int l = 0; l < nb; ++l)
          if (!b(k, l).is_zero()) m(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
    }
  return m;
}

template <class T>
std::optional<std::string> difference_witness(const Matrix<T>& a, const Matrix<T>& b, double tol = 0.0) {
  if (a.size() != b.size()) return "matrix sizes differ";
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j)
      if (auto w = difference_witness(a(i, j), b(i, j), tol))
        return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") " + *w;
  return std::nullopt;
}

template <class T>
double norm_inf(const Matrix<T>& a) {
  double m = 0;
  for (const auto& e : a.entries()) m = std::max(m, norm_inf(e));
  return m;
}

template <Scalar S>
std::optional<std::string> difference_witness(const FourierScalar<S>& a, const FourierScalar<S>& b,
                                              double tol = 0.0) {
  return FourierScalar<S>::first_difference(a, b, tol);
}

template <Scalar S>
double norm_inf(const FourierScalar<S>& a) {
  return a.norm_inf();
}

// Exact inverse of a constant matrix by Gauss-Jordan elimination.
template <Scalar S>
std::optional<Matrix<S>> inverse(const Matrix<S>& m) {
  const int n = m.size();
  Matrix<S> a = m;
  Matrix<S> inv = Matrix<S>::identity(n, S(1));
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    double best = -1;
    for (int r = col; r < n; ++r) {
      if (a(r, col).is_zero()) continue;
      if constexpr (S::is_exact) {
        pivot = r;
        break;
      } else if (a(r, col).abs() > best) {
        best = a(r, col).abs();
        pivot = r;
      }
    }
    if (pivot < 0) return std::nullopt;
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    const S p = a(col, col).inverse();
    for (int j = 0; j < n; ++j) {
      a(col, j) = a(col, j) * p;
      inv(col, j) = inv(col, j) * p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col || a(r, col).is_zero()) continue;
      const S f = a(r, col);
      for (int j = 0; j < n; ++j) {
        a(r, j) = a(r, j) - f * a(col, j);
        inv(r, j) = inv(r, j) - f * inv(col, j);
      }
    }
  }
  return inv;
}

template <Scalar S>
using EndoSection = Matrix<FourierScalar<S>>;

// Constant part of a matrix of Fourier entries, if every entry is constant.
template <Scalar S>
std::optional<Matrix<S>> constant_matrix(const Matrix<FourierScalar<S>>& m) {
  Matrix<S> c(m.size());
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) {
      if (!m(i, j).is_constant()) return std::nullopt;
      c(i, j) = m(i, j).constant_term();
    }
  return c;
}

// Lifts a constant matrix into any coefficient ring with from_scalar.
template <class C>
Matrix<C> lift_matrix(const Matrix<scalar_of_t<C>>& m) {
  return m.map([](const scalar_of_t<C>& s) { return C::from_scalar(s); });
}

}  // namespace fedosov
