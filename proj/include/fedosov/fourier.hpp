#pragma once

// Finite Fourier series on the torus [0, 2pi)^d.
//
// A FourierScalar stores the nonzero coefficients c_k of sum_k c_k e^{i k.x}
// sorted by a packed frequency key. Products are exact convolutions, so the
// exact backend never drops frequencies.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fedosov/scalar.hpp"

namespace fedosov {

inline constexpr int kMaxDim = 6;

// Frequency vectors packed into 10-bit biased fields, coordinate 0 most
// significant, so integer order is lexicographic order and addition of keys is
// addition of frequencies.
namespace mode {

using Key = std::uint64_t;

inline constexpr int kBits = 10;
inline constexpr int kBias = 512;
inline constexpr std::uint64_t kMask = (1u << kBits) - 1;

constexpr int shift(int i) { return kBits * (kMaxDim - 1 - i); }

constexpr Key make_zero() {
  Key k = 0;
  for (int i = 0; i < kMaxDim; ++i) k |= static_cast<Key>(kBias) << shift(i);
  return k;
}

inline constexpr Key kZero = make_zero();

inline Key make(std::span<const int> k) {
  if (static_cast<int>(k.size()) > kMaxDim) throw std::invalid_argument("mode: too many coordinates");
  Key key = kZero;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] <= -kBias || k[i] >= kBias) throw std::out_of_range("mode: frequency out of range");
    key += static_cast<Key>(static_cast<std::int64_t>(k[i])) << shift(static_cast<int>(i));
  }
  return key;
}

inline int component(Key key, int i) {
  return static_cast<int>((key >> shift(i)) & kMask) - kBias;
}

inline Key add(Key a, Key b) { return a + b - kZero; }
inline Key negate(Key a) { return 2 * kZero - a; }

inline std::vector<int> unpack(Key key, int dim) {
  std::vector<int> k(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) k[static_cast<std::size_t>(i)] = component(key, i);
  return k;
}

inline std::string to_string(Key key, int dim) {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(component(key, i));
  }
  return s + ")";
}

}  // namespace mode

// Value of a torus integral: coefficient * (2 pi)^dim. The factor (2 pi)^dim
// is kept symbolic so the exact backend stays exact.
template <Scalar S>
struct TorusIntegral {
  S coefficient{};
  int dim = 0;

  TorusIntegral conj() const { return {coefficient.conj(), dim}; }
  bool is_zero() const { return coefficient.is_zero(); }
  friend TorusIntegral operator+(const TorusIntegral& a, const TorusIntegral& b) {
    return {a.coefficient + b.coefficient, std::max(a.dim, b.dim)};
  }
  friend TorusIntegral operator-(const TorusIntegral& a, const TorusIntegral& b) {
    return {a.coefficient - b.coefficient, std::max(a.dim, b.dim)};
  }
  friend TorusIntegral operator*(const TorusIntegral& a, const S& s) {
    return {a.coefficient * s, a.dim};
  }
  friend bool operator==(const TorusIntegral& a, const TorusIntegral& b) {
    return a.coefficient == b.coefficient && (a.dim == b.dim || a.is_zero());
  }
  std::complex<double> to_complex() const {
    double vol = 1.0;
    for (int i = 0; i < dim; ++i) vol *= 2.0 * 3.14159265358979323846;
    return coefficient.to_complex() * vol;
  }
  std::string to_string() const {
    return coefficient.to_string() + "*(2pi)^" + std::to_string(dim);
  }
};

template <Scalar S>
class FourierScalar {
 public:
  using scalar_type = S;
  using Term = std::pair<mode::Key, S>;

  FourierScalar() = default;
  explicit FourierScalar(int dim) : dim_(check_dim(dim)) {}

  // Dimension 0 marks a constant usable in any dimension.
  static FourierScalar from_scalar(const S& c) { return constant(0, c); }
  static FourierScalar constant(int dim, const S& c) {
    FourierScalar f(dim);
    if (!c.is_zero()) f.terms_.emplace_back(mode::kZero, c);
    return f;
  }
  static FourierScalar plane_wave(std::span<const int> k, const S& c = S(1)) {
    FourierScalar f(static_cast<int>(k.size()));
    if (!c.is_zero()) f.terms_.emplace_back(mode::make(k), c);
    return f;
  }
  static FourierScalar plane_wave(std::initializer_list<int> k, const S& c = S(1)) {
    return plane_wave(std::span<const int>(k.begin(), k.size()), c);
  }
  // cos(k.x) and sin(k.x)
  static FourierScalar cosine(std::span<const int> k) {
    std::vector<int> m(k.begin(), k.end());
    for (int& x : m) x = -x;
    return plane_wave(k, S::rational(1, 2)) + plane_wave(m, S::rational(1, 2));
  }
  static FourierScalar sine(std::span<const int> k) {
    std::vector<int> m(k.begin(), k.end());
    for (int& x : m) x = -x;
    const S half_i = S::imag_unit() * S::rational(1, 2);
    return plane_wave(k, -half_i) + plane_wave(m, half_i);
  }
  // Builds from (frequency, coefficient) pairs; repeated frequencies add up.
  static FourierScalar from_modes(int dim, const std::vector<std::pair<std::vector<int>, S>>& modes) {
    FourierScalar f(dim);
    for (const auto& [k, c] : modes) {
      if (static_cast<int>(k.size()) != dim) throw std::invalid_argument("FourierScalar: mode dimension mismatch");
      f += plane_wave(k, c);
    }
    return f;
  }

  int dim() const { return dim_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Term>& terms() const { return terms_; }

  S coefficient(std::span<const int> k) const { return coefficient(mode::make(k)); }
  S coefficient(mode::Key key) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const Term& t, mode::Key k) { return t.first < k; });
    if (it != terms_.end() && it->first == key) return it->second;
    return S{};
  }
  S constant_term() const { return coefficient(mode::kZero); }
  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_[0].first == mode::kZero);
  }
  int bandwidth() const {
    int b = 0;
    for (const auto& t : terms_)
      for (int i = 0; i < kMaxDim; ++i) b = std::max(b, std::abs(mode::component(t.first, i)));
    return b;
  }

  // Pointwise complex conjugate: c_k -> conj(c_{-k}).
  FourierScalar conj() const {
    FourierScalar f(dim_);
    f.terms_.reserve(terms_.size());
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it)
      f.terms_.emplace_back(mode::negate(it->first), it->second.conj());
    return f;
  }
  bool is_real() const {
    for (const auto& [k, c] : terms_)
      if (!(coefficient(mode::negate(k)) == c.conj())) return false;
    return true;
  }

  FourierScalar derive(int i) const {
    if (i < 0 || (dim_ > 0 && i >= dim_) || i >= kMaxDim)
      throw std::out_of_range("FourierScalar::derive: coordinate index out of range");
    FourierScalar f(dim_);
    f.terms_.reserve(terms_.size());
    const S iu = S::imag_unit();
    for (const auto& [k, c] : terms_) {
      const int ki = mode::component(k, i);
      if (ki != 0) f.terms_.emplace_back(k, c * (iu * S(ki)));
    }
    return f;
  }

  FourierScalar operator-() const {
    FourierScalar f = *this;
    for (auto& t : f.terms_) t.second = -t.second;
    return f;
  }
  FourierScalar& operator+=(const FourierScalar& o) { return *this = combine(*this, o, false); }
  FourierScalar& operator-=(const FourierScalar& o) { return *this = combine(*this, o, true); }
  friend FourierScalar operator+(const FourierScalar& a, const FourierScalar& b) {
    return combine(a, b, false);
  }
  friend FourierScalar operator-(const FourierScalar& a, const FourierScalar& b) {
    return combine(a, b, true);
  }
  friend FourierScalar operator*(const FourierScalar& a, const S& s) {
    FourierScalar f(a.dim_);
    if (s.is_zero()) return f;
    f.terms_.reserve(a.terms_.size());
    for (const auto& [k, c] : a.terms_) {
      S v = c * s;
      if (!v.is_zero()) f.terms_.emplace_back(k, std::move(v));
    }
    return f;
  }
  friend FourierScalar operator*(const S& s, const FourierScalar& a) { return a * s; }
  FourierScalar& operator*=(const FourierScalar& o) { return *this = *this * o; }

  friend FourierScalar operator*(const FourierScalar& a, const FourierScalar& b) {
    const int dim = merged_dim(a.dim_, b.dim_);
    if (a.is_zero() || b.is_zero()) return FourierScalar(dim);
    if (b.is_constant()) {
      FourierScalar f = a * b.terms_[0].second;
      f.dim_ = dim;
      return f;
    }
    if (a.is_constant()) {
      FourierScalar f = b * a.terms_[0].second;
      f.dim_ = dim;
      return f;
    }
    // Shifting a sorted mode list by a fixed frequency keeps it sorted, so the
    // pair keys form one sorted run per term of the shorter factor; merge them.
    const auto& run = a.terms_.size() <= b.terms_.size() ? a.terms_ : b.terms_;
    const auto& along = a.terms_.size() <= b.terms_.size() ? b.terms_ : a.terms_;
    struct Cursor {
      mode::Key key;
      std::uint32_t run, pos;
    };
    auto later = [](const Cursor& x, const Cursor& y) { return x.key > y.key; };
    // Restore the heap after the top cursor advanced.
    auto sift_down = [&later](std::vector<Cursor>& h) {
      const std::size_t n = h.size();
      std::size_t i = 0;
      const Cursor moved = h[0];
      for (;;) {
        std::size_t c = 2 * i + 1;
        if (c >= n) break;
        if (c + 1 < n && later(h[c], h[c + 1])) ++c;
        if (!later(moved, h[c])) break;
        h[i] = h[c];
        i = c;
      }
      h[i] = moved;
    };
    std::vector<Cursor> heap;
    heap.reserve(run.size());
    for (std::uint32_t r = 0; r < run.size(); ++r) heap.push_back({mode::add(run[r].first, along[0].first), r, 0});
    std::make_heap(heap.begin(), heap.end(), later);
    FourierScalar f(dim);
    while (!heap.empty()) {
      const mode::Key key = heap.front().key;
      typename S::Sum sum;
      while (!heap.empty() && heap.front().key == key) {
        Cursor& c = heap.front();
        sum.add_product(run[c.run].second, along[c.pos].second);
        if (++c.pos < along.size()) {
          c.key = mode::add(run[c.run].first, along[c.pos].first);
        } else {
          heap.front() = heap.back();
          heap.pop_back();
          if (heap.empty()) break;
        }
        sift_down(heap);
      }
      S acc = sum.value();
      if (!acc.is_zero()) f.terms_.emplace_back(key, std::move(acc));
    }
    return f;
  }

  friend bool operator==(const FourierScalar& a, const FourierScalar& b) {
    return a.terms_ == b.terms_;
  }

  double norm_inf() const {
    double m = 0;
    for (const auto& t : terms_) m = std::max(m, t.second.abs());
    return m;
  }

  // Location of the first coefficient where a and b differ, if any.
  static std::optional<std::string> first_difference(const FourierScalar& a, const FourierScalar& b,
                                                     double tol = 0.0) {
    const int dim = std::max({a.dim_, b.dim_, 1});
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      mode::Key key;
      S va, vb;
      if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].first < b.terms_[j].first)) {
        key = a.terms_[i].first;
        va = a.terms_[i++].second;
      } else if (i == a.terms_.size() || b.terms_[j].first < a.terms_[i].first) {
        key = b.terms_[j].first;
        vb = b.terms_[j++].second;
      } else {
        key = a.terms_[i].first;
        va = a.terms_[i++].second;
        vb = b.terms_[j++].second;
      }
      if (!approx_equal(va, vb, tol))
        return "mode " + mode::to_string(key, dim) + ": " + va.to_string() + " vs " + vb.to_string();
    }
    return std::nullopt;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << "(" << c.to_string() << ")e" << mode::to_string(k, std::max(dim_, 1));
    }
    return os.str();
  }

 private:
  static int check_dim(int dim) {
    if (dim < 0 || dim > kMaxDim) throw std::invalid_argument("FourierScalar: unsupported dimension");
    return dim;
  }
  static int merged_dim(int a, int b) {
    if (a != 0 && b != 0 && a != b) throw std::invalid_argument("FourierScalar: dimension mismatch");
    return a != 0 ? a : b;
  }
  static FourierScalar combine(const FourierScalar& a, const FourierScalar& b, bool subtract) {
    FourierScalar f(merged_dim(a.dim_, b.dim_));
    f.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].first < b.terms_[j].first)) {
        f.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || b.terms_[j].first < a.terms_[i].first) {
        f.terms_.emplace_back(b.terms_[j].first, subtract ? -b.terms_[j].second : b.terms_[j].second);
        ++j;
      } else {
        S v = subtract ? a.terms_[i].second - b.terms_[j].second : a.terms_[i].second + b.terms_[j].second;
        if (!v.is_zero()) f.terms_.emplace_back(a.terms_[i].first, std::move(v));
        ++i;
        ++j;
      }
    }
    return f;
  }

  int dim_ = 0;
  std::vector<Term> terms_;
};

template <Scalar S>
FourierScalar<S> four_mul(const FourierScalar<S>& a, const FourierScalar<S>& b) {
  return a * b;
}

template <Scalar S>
FourierScalar<S> four_derive(const FourierScalar<S>& a, int i) {
  return a.derive(i);
}

// Integral over the torus: only the constant mode survives.
template <Scalar S>
TorusIntegral<S> four_integrate(const FourierScalar<S>& a, int dim) {
  if (a.dim() != 0 && a.dim() != dim) throw std::invalid_argument("four_integrate: dimension mismatch");
  return {a.constant_term(), dim};
}

template <Scalar S>
TorusIntegral<S> four_integrate(const FourierScalar<S>& a) {
  return four_integrate(a, a.dim());
}

}  // namespace fedosov
