#pragma once

// The graded algebra W (x) Lambda: truncated series
//   sum h^p a_{alpha,S}(x) y^alpha dx^S
// with End(E)-valued coefficients, the fiberwise Moyal product, the Koszul
// operators delta and delta^{-1}, exterior and covariant derivatives, and the
// involution induced by a Gram form.
//
// Total degree is 2p + |alpha|; every operation drops terms above the
// truncation order.

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedosov/geometry.hpp"
#include "fedosov/matrix.hpp"
#include "fedosov/ring.hpp"

namespace fedosov {

// Monomial h^p y^alpha dx^S packed into 48 bits: S in bits 0..5, alpha_i in a
// 6-bit field per coordinate (coordinate 0 most significant), p on top.
namespace weyl_key {

using Key = std::uint64_t;

inline constexpr int kFieldBits = 6;
inline constexpr Key kFieldMask = (Key{1} << kFieldBits) - 1;
inline constexpr int kPShift = kFieldBits * (kMaxDim + 1);

constexpr int alpha_shift(int i) { return kFieldBits * (kMaxDim - i); }

inline int h_power(Key k) { return static_cast<int>(k >> kPShift); }
inline int alpha(Key k, int i) { return static_cast<int>((k >> alpha_shift(i)) & kFieldMask); }
inline unsigned forms(Key k) { return static_cast<unsigned>(k & kFieldMask); }
inline int form_degree(Key k) { return std::popcount(forms(k)); }
inline int y_degree(Key k) {
  int d = 0;
  for (int i = 0; i < kMaxDim; ++i) d += alpha(k, i);
  return d;
}
inline int degree(Key k) { return 2 * h_power(k) + y_degree(k); }

inline Key make(int p, std::span<const int> a, unsigned mask) {
  if (p < 0 || p > static_cast<int>(kFieldMask)) throw std::out_of_range("weyl_key: h power out of range");
  if (static_cast<int>(a.size()) > kMaxDim) throw std::out_of_range("weyl_key: too many fiber variables");
  if (mask > kFieldMask) throw std::out_of_range("weyl_key: form index out of range");
  Key k = static_cast<Key>(p) << kPShift | mask;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] > static_cast<int>(kFieldMask)) throw std::out_of_range("weyl_key: exponent out of range");
    k |= static_cast<Key>(a[i]) << alpha_shift(static_cast<int>(i));
  }
  return k;
}
inline Key make(int p, std::initializer_list<int> a, unsigned mask = 0) {
  return make(p, std::span<const int>(a.begin(), a.size()), mask);
}

inline Key with_h_power(Key k, int p) {
  return (k & ((Key{1} << kPShift) - 1)) | static_cast<Key>(p) << kPShift;
}
inline Key with_forms(Key k, unsigned mask) { return (k & ~kFieldMask) | mask; }
inline Key add_alpha(Key k, int i, int delta) {
  const int v = alpha(k, i) + delta;
  if (v < 0 || v > static_cast<int>(kFieldMask)) throw std::out_of_range("weyl_key: exponent out of range");
  return (k & ~(kFieldMask << alpha_shift(i))) | static_cast<Key>(v) << alpha_shift(i);
}
inline Key alpha_part(Key k) { return k & (((Key{1} << kPShift) - 1) & ~kFieldMask); }

inline std::string to_string(Key k, int dim) {
  std::ostringstream os;
  bool any = false;
  if (h_power(k)) {
    os << "h^" << h_power(k);
    any = true;
  }
  for (int i = 0; i < dim; ++i)
    if (alpha(k, i)) {
      os << (any ? " " : "") << "y" << i + 1 << "^" << alpha(k, i);
      any = true;
    }
  const unsigned s = forms(k);
  if (s) {
    os << (any ? " " : "") << "dx";
    for (int i = 0; i < dim; ++i)
      if (s >> i & 1u) os << i + 1;
    any = true;
  }
  if (!any) os << "1";
  return os.str();
}

}  // namespace weyl_key

// Sign of dx^S ^ dx^T relative to the sorted union, 0 if they overlap.
inline int wedge_sign(unsigned s, unsigned t) {
  if (s & t) return 0;
  int swaps = 0;
  for (unsigned rest = t; rest; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    swaps += std::popcount(s >> (j + 1));
  }
  return swaps % 2 ? -1 : 1;
}
// Sign of dx^k ^ dx^S, 0 if k is in S.
inline int left_wedge_sign(int k, unsigned s) {
  if (s >> k & 1u) return 0;
  return std::popcount(s & ((1u << k) - 1u)) % 2 ? -1 : 1;
}

template <CoefficientRing C>
class WeylElement {
 public:
  using Key = weyl_key::Key;
  using coefficient_type = Matrix<C>;
  using scalar_type = scalar_of_t<C>;
  using Terms = std::map<Key, Matrix<C>>;

  WeylElement() = default;
  WeylElement(int dim, int rank, int order) : dim_(dim), rank_(rank), order_(order) {
    if (dim < 1 || dim > kMaxDim || dim % 2) throw std::invalid_argument("WeylElement: unsupported dimension");
    if (rank < 1) throw std::invalid_argument("WeylElement: rank must be positive");
    if (order < 0) throw std::invalid_argument("WeylElement: negative truncation order");
  }

  static WeylElement section(int dim, int order, const Matrix<C>& a, Key key = weyl_key::make(0, {})) {
    WeylElement w(dim, a.size(), order);
    w.add(key, a);
    return w;
  }
  static WeylElement scalar(int dim, int rank, int order, const C& c, Key key = weyl_key::make(0, {})) {
    return section(dim, order, Matrix<C>::identity(rank, c), key);
  }
  static WeylElement one(int dim, int rank, int order) {
    return scalar(dim, rank, order, C::from_scalar(scalar_type(1)));
  }
  // The fiber generator y^i (0-based).
  static WeylElement y(int dim, int rank, int order, int i) {
    std::vector<int> a(static_cast<std::size_t>(dim));
    a[static_cast<std::size_t>(i)] = 1;
    return scalar(dim, rank, order, C::from_scalar(scalar_type(1)), weyl_key::make(0, a, 0));
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int order() const { return order_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const Terms& terms() const { return terms_; }

  Matrix<C> coefficient(Key k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? Matrix<C>(rank_) : it->second;
  }

  // Accumulates m at monomial k; terms above the truncation order are dropped.
  void add(Key k, const Matrix<C>& m) {
    if (weyl_key::degree(k) > order_ || m.is_zero()) return;
    check_rank(m);
    auto [it, inserted] = terms_.try_emplace(k, m);
    if (!inserted) {
      it->second += m;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void add_scaled(Key k, const Matrix<C>& m, const scalar_type& s) {
    if (weyl_key::degree(k) > order_ || m.is_zero() || s.is_zero()) return;
    check_rank(m);
    auto& slot = terms_[k];
    slot.add_scaled(m, s);
    if (slot.is_zero()) terms_.erase(k);
  }

  // Pure form degree; nullopt when several degrees are present. Zero counts as pure of every degree.
  std::optional<int> form_degree() const {
    std::optional<int> r;
    for (const auto& [k, m] : terms_) {
      const int f = weyl_key::form_degree(k);
      if (r && *r != f) return std::nullopt;
      r = f;
    }
    return r ? r : std::optional<int>(0);
  }
  bool has_pure_form_degree() const { return form_degree().has_value(); }

  int min_degree() const {
    int m = INT32_MAX;
    for (const auto& [k, c] : terms_) m = std::min(m, weyl_key::degree(k));
    return m;
  }
  int max_degree() const {
    int m = -1;
    for (const auto& [k, c] : terms_) m = std::max(m, weyl_key::degree(k));
    return m;
  }

  template <class Pred>
  WeylElement filter(Pred&& keep) const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_)
      if (keep(k)) w.terms_.emplace(k, m);
    return w;
  }
  WeylElement degree_part(int d) const {
    return filter([d](Key k) { return weyl_key::degree(k) == d; });
  }
  WeylElement degree_range(int lo, int hi) const {
    return filter([lo, hi](Key k) {
      const int d = weyl_key::degree(k);
      return d >= lo && d <= hi;
    });
  }
  WeylElement form_part(int m) const {
    return filter([m](Key k) { return weyl_key::form_degree(k) == m; });
  }
  WeylElement h_part(int p) const {
    return filter([p](Key k) { return weyl_key::h_power(k) == p; });
  }
  // Terms free of y and dx: the symbol of a flat section.
  WeylElement y_free_part() const {
    return filter([](Key k) { return weyl_key::alpha_part(k) == 0 && weyl_key::forms(k) == 0; });
  }
  WeylElement with_order(int order) const {
    WeylElement w(dim_, rank_, order);
    for (const auto& [k, m] : terms_)
      if (weyl_key::degree(k) <= order) w.terms_.emplace(k, m);
    return w;
  }

  WeylElement operator-() const {
    WeylElement w = *this;
    for (auto& [k, m] : w.terms_) m = -m;
    return w;
  }
  WeylElement& operator+=(const WeylElement& o) {
    check_compatible(o);
    order_ = std::min(order_, o.order_);
    prune_order();
    for (const auto& [k, m] : o.terms_) add(k, m);
    return *this;
  }
  WeylElement& operator-=(const WeylElement& o) {
    check_compatible(o);
    order_ = std::min(order_, o.order_);
    prune_order();
    for (const auto& [k, m] : o.terms_) add(k, -m);
    return *this;
  }
  friend WeylElement operator+(WeylElement a, const WeylElement& b) { return a += b; }
  friend WeylElement operator-(WeylElement a, const WeylElement& b) { return a -= b; }

  friend WeylElement operator*(const WeylElement& a, const scalar_type& s) {
    WeylElement w(a.dim_, a.rank_, a.order_);
    if (s.is_zero()) return w;
    for (const auto& [k, m] : a.terms_) w.add(k, m * s);
    return w;
  }
  friend WeylElement operator*(const scalar_type& s, const WeylElement& a) { return a * s; }
  // Pointwise multiplication of every coefficient by a function of x.
  WeylElement times_function(const C& f) const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) w.add(k, m * f);
    return w;
  }
  // Left / right multiplication of every coefficient by a section of End(E).
  WeylElement left_multiply(const Matrix<C>& a) const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) w.add(k, a * m);
    return w;
  }
  WeylElement right_multiply(const Matrix<C>& a) const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) w.add(k, m * a);
    return w;
  }

  WeylElement mul_h(int power = 1) const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) w.add(weyl_key::with_h_power(k, weyl_key::h_power(k) + power), m);
    return w;
  }
  // Division by h; the h^0 part must vanish.
  WeylElement div_h() const {
    WeylElement w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) {
      const int p = weyl_key::h_power(k);
      if (p == 0) throw std::domain_error("WeylElement::div_h: element has a nonzero h^0 part " + weyl_key::to_string(k, dim_));
      w.terms_.emplace(weyl_key::with_h_power(k, p - 1), m);
    }
    return w;
  }

  template <class F>
  auto map(F&& f) const {
    using R = std::decay_t<decltype(f(std::declval<const C&>()))>;
    WeylElement<R> w(dim_, rank_, order_);
    for (const auto& [k, m] : terms_) w.add(k, m.map(f));
    return w;
  }

  friend bool operator==(const WeylElement& a, const WeylElement& b) {
    return a.dim_ == b.dim_ && a.rank_ == b.rank_ && a.terms_ == b.terms_;
  }

  // First monomial where a and b differ, with the offending coefficient.
  static std::optional<std::string> first_difference(const WeylElement& a, const WeylElement& b, double tol = 0.0) {
    if (a.dim_ != b.dim_ || a.rank_ != b.rank_) return "geometry mismatch";
    auto report = [&](Key k, const std::string& w) { return weyl_key::to_string(k, a.dim_) + ": " + w; };
    const Matrix<C> zero(a.rank_);
    for (const auto& [k, m] : a.terms_) {
      auto it = b.terms_.find(k);
      if (auto w = difference_witness(m, it == b.terms_.end() ? zero : it->second, tol)) return report(k, *w);
    }
    for (const auto& [k, m] : b.terms_)
      if (!a.terms_.count(k))
        if (auto w = difference_witness(zero, m, tol)) return report(k, *w);
    return std::nullopt;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, m] : terms_) {
      if (!first) os << "\n";
      first = false;
      os << weyl_key::to_string(k, dim_) << " :";
      for (int i = 0; i < rank_; ++i)
        for (int j = 0; j < rank_; ++j)
          if (!m(i, j).is_zero()) os << " [" << i << "," << j << "] " << m(i, j).to_string();
    }
    return os.str();
  }

  void check_compatible(const WeylElement& o) const {
    if (dim_ != o.dim_ || rank_ != o.rank_) throw std::invalid_argument("WeylElement: geometry mismatch");
  }

 private:
  template <CoefficientRing>
  friend class WeylElement;

  void check_rank(const Matrix<C>& m) const {
    if (m.size() != rank_) throw std::invalid_argument("WeylElement: coefficient rank mismatch");
  }
  void prune_order() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = weyl_key::degree(it->first) > order_ ? terms_.erase(it) : std::next(it);
  }

  int dim_ = 2;
  int rank_ = 1;
  int order_ = 0;
  Terms terms_;
};

template <CoefficientRing C>
std::optional<std::string> difference_witness(const WeylElement<C>& a, const WeylElement<C>& b, double tol = 0.0) {
  return WeylElement<C>::first_difference(a, b, tol);
}

namespace detail {

inline long falling(long n, long k) {
  long r = 1;
  for (long i = 0; i < k; ++i) r *= n - i;
  return r;
}
inline long binom(long n, long k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct Contraction {
  long coefficient;  // integer part, to be multiplied by (-i/2)^k
  int k;             // number of omega contractions = added h power
  std::int64_t alpha_delta[kMaxDim];
};

// All contraction patterns between y^alpha (left) and y^beta (right). Per
// canonical pair (x, p) = (y^{2m}, y^{2m+1}) the Moyal exponential factorises as
// exp(c(-dx_a dp_b + dp_a dx_b)), c = -i h / 2.
inline void enumerate_contractions(std::uint64_t ka, std::uint64_t kb, int half_dim, std::vector<Contraction>& out) {
  out.clear();
  Contraction base{1, 0, {}};
  for (int i = 0; i < 2 * half_dim; ++i) base.alpha_delta[i] = weyl_key::alpha(ka, i) + weyl_key::alpha(kb, i);
  out.push_back(base);
  for (int m = 0; m < half_dim; ++m) {
    const int x = 2 * m, p = 2 * m + 1;
    const long ax = weyl_key::alpha(ka, x), ap = weyl_key::alpha(ka, p);
    const long bx = weyl_key::alpha(kb, x), bp = weyl_key::alpha(kb, p);
    const long jmax = std::min(ax, bp), lmax = std::min(ap, bx);
    if (jmax == 0 && lmax == 0) continue;
    const std::size_t n = out.size();
    for (std::size_t t = 0; t < n; ++t) {
      const Contraction c = out[t];
      bool first = true;
      for (long j = 0; j <= jmax; ++j)
        for (long l = 0; l <= lmax; ++l) {
          const long f = (j % 2 ? -1 : 1) * binom(ax, j) * falling(bp, j) * binom(ap, l) * falling(bx, l);
          Contraction d = c;
          d.coefficient *= f;
          d.k += static_cast<int>(j + l);
          d.alpha_delta[x] -= j + l;
          d.alpha_delta[p] -= j + l;
          if (first) {
            out[t] = d;
            first = false;
          } else {
            out.push_back(d);
          }
        }
    }
  }
}

}  // namespace detail

namespace detail {

template <class C>
bool is_scalar_identity(const Matrix<C>& m) {
  const int n = m.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        if (i > 0 && !(m(i, i) == m(0, 0))) return false;
      } else if (!m(i, j).is_zero()) {
        return false;
      }
    }
  return true;
}

enum class Bracket { product, commutator };

// out += scale * (a o b) or scale * [a, b], with every output h power lowered
// by h_shift and only output degrees in [lo, hi] (after the shift) kept.
//
// b o a has the same contraction pattern as a o b up to (-1)^k and the form
// sign (-1)^{rs}, so a term pair contributes (AB - (-1)^k BA) to the graded
// commutator at contraction order k.
template <CoefficientRing C>
void bilinear_accumulate(WeylElement<C>& out, const WeylElement<C>& a, const WeylElement<C>& b, int lo, int hi,
                         const scalar_of_t<C>& scale, Bracket kind, int h_shift) {
  using S = scalar_of_t<C>;
  a.check_compatible(b);
  out.check_compatible(a);
  hi = std::min(hi, out.order());
  if (lo > hi) return;
  const int n = a.dim() / 2;
  const int dim = a.dim();
  std::vector<S> cpow{S(1)};
  const S c = S::imag_unit() * S::rational(-1, 2);
  for (int k = 1; k <= hi + 2 * h_shift + 1; ++k) cpow.push_back(cpow.back() * c);

  std::vector<char> a_scalar, b_scalar;
  for (const auto& t : a.terms()) a_scalar.push_back(is_scalar_identity(t.second));
  for (const auto& t : b.terms()) b_scalar.push_back(is_scalar_identity(t.second));

  // Contributions that would land at a negative h power must cancel.
  WeylElement<C> negative(a.dim(), a.rank(), INT32_MAX / 4);
  std::vector<Contraction> contractions;
  std::size_t ia = 0;
  for (auto ta = a.terms().begin(); ta != a.terms().end(); ++ta, ++ia) {
    const auto& [ka, ma] = *ta;
    const int da = weyl_key::degree(ka);
    if (da - 2 * h_shift > hi) continue;
    std::size_t ib = 0;
    for (auto tb = b.terms().begin(); tb != b.terms().end(); ++tb, ++ib) {
      const auto& [kb, mb] = *tb;
      const int d = da + weyl_key::degree(kb) - 2 * h_shift;
      if (d < lo || d > hi) continue;
      const unsigned sa = weyl_key::forms(ka), sb = weyl_key::forms(kb);
      const int sign = wedge_sign(sa, sb);
      if (sign == 0) continue;

      // even[k % 2] is the matrix multiplying contractions of parity k % 2.
      Matrix<C> parity[2];
      const bool sa_id = a_scalar[ia], sb_id = b_scalar[ib];
      if (kind == Bracket::product) {
        parity[0] = sa_id ? mb * ma(0, 0) : sb_id ? ma * mb(0, 0) : ma * mb;
        parity[1] = parity[0];
      } else if (sa_id || sb_id) {
        parity[1] = (sa_id ? mb * ma(0, 0) : ma * mb(0, 0)) * S(2);
      } else {
        const Matrix<C> ab = ma * mb, ba = mb * ma;
        parity[0] = ab - ba;
        parity[1] = ab + ba;
      }
      if (parity[0].is_zero() && parity[1].is_zero()) continue;

      enumerate_contractions(ka, kb, n, contractions);
      const int p0 = weyl_key::h_power(ka) + weyl_key::h_power(kb);
      for (const auto& ct : contractions) {
        const Matrix<C>& m = parity[ct.k % 2];
        if (ct.coefficient == 0 || m.is_zero()) continue;
        int alpha[kMaxDim] = {};
        for (int i = 0; i < dim; ++i) alpha[i] = static_cast<int>(ct.alpha_delta[i]);
        const int p = p0 + ct.k - h_shift;
        const S coef = scale * S(sign * ct.coefficient) * cpow[static_cast<std::size_t>(ct.k)];
        const std::span<const int> al(alpha, static_cast<std::size_t>(dim));
        if (p < 0)
          negative.add_scaled(weyl_key::make(p + h_shift, al, sa | sb), m, coef);
        else
          out.add_scaled(weyl_key::make(p, al, sa | sb), m, coef);
      }
    }
  }
  if (!negative.is_zero())
    throw std::domain_error("ad_over_h: commutator has a nonzero h^0 part at " +
                            weyl_key::to_string(negative.terms().begin()->first, a.dim()));
}

}  // namespace detail

// out += scale * (a o b) restricted to output total degree in [lo, hi].
template <CoefficientRing C>
void moyal_accumulate(WeylElement<C>& out, const WeylElement<C>& a, const WeylElement<C>& b, int lo, int hi,
                      const scalar_of_t<C>& scale) {
  detail::bilinear_accumulate(out, a, b, lo, hi, scale, detail::Bracket::product, 0);
}

// Fiberwise Moyal product a o b.
template <CoefficientRing C>
WeylElement<C> moyal(const WeylElement<C>& a, const WeylElement<C>& b) {
  a.check_compatible(b);
  if (a.order() != b.order()) throw std::invalid_argument("moyal: truncation order mismatch");
  WeylElement<C> out(a.dim(), a.rank(), a.order());
  moyal_accumulate(out, a, b, 0, a.order(), scalar_of_t<C>(1));
  return out;
}

// Graded commutator a o b - (-1)^{rs} b o a, extended bilinearly over the
// form degrees of individual terms; degree window on the output.
template <CoefficientRing C>
WeylElement<C> commutator_window(const WeylElement<C>& a, const WeylElement<C>& b, int lo, int hi, int order) {
  using S = scalar_of_t<C>;
  WeylElement<C> out(a.dim(), a.rank(), order);
  detail::bilinear_accumulate(out, a, b, lo, hi, S(1), detail::Bracket::commutator, 0);
  return out;
}

template <CoefficientRing C>
WeylElement<C> graded_commutator(const WeylElement<C>& a, const WeylElement<C>& b) {
  a.check_compatible(b);
  if (a.order() != b.order()) throw std::invalid_argument("graded_commutator: truncation order mismatch");
  if (!a.has_pure_form_degree() || !b.has_pure_form_degree())
    throw std::invalid_argument("graded_commutator: inputs must have pure form degree");
  return commutator_window(a, b, 0, a.order(), a.order());
}

// out += scale * (i/h)[a, b] restricted to output degrees [lo, hi]. The h^0
// part of the commutator must vanish (true whenever the h^0 part of one factor
// is scalar-valued).
template <CoefficientRing C>
void ad_over_h_accumulate(WeylElement<C>& out, const WeylElement<C>& a, const WeylElement<C>& b, int lo, int hi,
                          const scalar_of_t<C>& scale) {
  using S = scalar_of_t<C>;
  detail::bilinear_accumulate(out, a, b, lo, hi, scale * S::imag_unit(), detail::Bracket::commutator, 1);
}

// (i/h)[a, b] restricted to output degrees [lo, hi], truncated at `order`.
template <CoefficientRing C>
WeylElement<C> ad_over_h(const WeylElement<C>& a, const WeylElement<C>& b, int lo, int hi, int order) {
  using S = scalar_of_t<C>;
  WeylElement<C> out(a.dim(), a.rank(), order);
  ad_over_h_accumulate(out, a, b, lo, hi, S(1));
  return out;
}

template <CoefficientRing C>
WeylElement<C> ad_over_h(const WeylElement<C>& a, const WeylElement<C>& b) {
  const int order = std::min(a.order(), b.order());
  return ad_over_h(a, b, 0, order, order);
}

// delta a = dx^k ^ d a / d y^k
template <CoefficientRing C>
WeylElement<C> delta(const WeylElement<C>& a) {
  using S = scalar_of_t<C>;
  WeylElement<C> out(a.dim(), a.rank(), a.order());
  for (const auto& [k, m] : a.terms()) {
    const unsigned s = weyl_key::forms(k);
    for (int i = 0; i < a.dim(); ++i) {
      const int e = weyl_key::alpha(k, i);
      const int sign = left_wedge_sign(i, s);
      if (e == 0 || sign == 0) continue;
      const auto key = weyl_key::with_forms(weyl_key::add_alpha(k, i, -1), s | 1u << i);
      out.add_scaled(key, m, S(sign * e));
    }
  }
  return out;
}

// delta^{-1} a_{km} = (1/(k+m)) y^s iota(d/dx^s) a_{km}; zero on the (0,0) part.
template <CoefficientRing C>
WeylElement<C> delta_inv(const WeylElement<C>& a) {
  using S = scalar_of_t<C>;
  WeylElement<C> out(a.dim(), a.rank(), a.order());
  for (const auto& [k, m] : a.terms()) {
    const unsigned s = weyl_key::forms(k);
    const int total = weyl_key::y_degree(k) + std::popcount(s);
    if (total == 0) continue;
    for (unsigned rest = s; rest; rest &= rest - 1) {
      const int i = std::countr_zero(rest);
      const int sign = std::popcount(s & ((1u << i) - 1u)) % 2 ? -1 : 1;
      const auto key = weyl_key::add_alpha(weyl_key::with_forms(k, s & ~(1u << i)), i, 1);
      out.add_scaled(key, m, S::rational(sign, total));
    }
  }
  return out;
}

// Exterior derivative in x: d a = dx^i ^ d a / d x^i.
template <CoefficientRing C>
WeylElement<C> exterior_d(const WeylElement<C>& a) {
  WeylElement<C> out(a.dim(), a.rank(), a.order());
  for (const auto& [k, m] : a.terms()) {
    const unsigned s = weyl_key::forms(k);
    for (int i = 0; i < a.dim(); ++i) {
      const int sign = left_wedge_sign(i, s);
      if (sign == 0) continue;
      const Matrix<C> dm = m.derive(i);
      if (dm.is_zero()) continue;
      out.add(weyl_key::with_forms(k, s | 1u << i), sign > 0 ? dm : -dm);
    }
  }
  return out;
}

// Connection data acting on W (x) Lambda: the symplectic connection on the
// fiber variables and the bundle connection on coefficients.
template <CoefficientRing C>
struct ConnectionData {
  ChartGeometry geometry;
  SymplecticConnection<C> gamma;
  std::vector<Matrix<C>> gamma_e;  // one matrix per coordinate

  // Raised Gamma^j_{kb} cached as raised[(j * d + k) * d + b].
  std::vector<C> raised_cache() const {
    const int d = geometry.dim();
    std::vector<C> r(static_cast<std::size_t>(d * d * d));
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int b = 0; b < d; ++b) r[tensor_index(d, {j, k, b})] = gamma.raised(geometry, j, k, b);
    return r;
  }
};

// The connection form  Gamma~ = 1/2 Gamma_{ijk} y^i y^j dx^k - i h Gamma^E_k dx^k  as a Weyl element.
template <CoefficientRing C>
WeylElement<C> connection_form(const ConnectionData<C>& conn, int rank, int order) {
  using S = scalar_of_t<C>;
  const int d = conn.geometry.dim();
  WeylElement<C> g(d, rank, order);
  const Matrix<C> id = Matrix<C>::identity(rank);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const C& v = conn.gamma(i, j, k);
        if (v.is_zero()) continue;
        std::vector<int> alpha(static_cast<std::size_t>(d));
        ++alpha[static_cast<std::size_t>(i)];
        ++alpha[static_cast<std::size_t>(j)];
        g.add(weyl_key::make(0, alpha, 1u << k), id * (v * S::rational(1, 2)));
      }
  const S minus_i = -S::imag_unit();
  for (int k = 0; k < d; ++k) {
    if (conn.gamma_e[static_cast<std::size_t>(k)].is_zero()) continue;
    g.add(weyl_key::make(1, std::vector<int>(static_cast<std::size_t>(d)), 1u << k),
          conn.gamma_e[static_cast<std::size_t>(k)] * minus_i);
  }
  return g;
}

// da + (i/h)[Gamma~, a], evaluated in closed form:
//   dx^k ^ ( d_k a - Gamma^j_{kb} y^b d a / d y^j + [Gamma^E_k, a] ).
template <CoefficientRing C>
WeylElement<C> covariant_deriv(const WeylElement<C>& a, const ConnectionData<C>& conn) {
  using S = scalar_of_t<C>;
  const int d = a.dim();
  if (conn.geometry.dim() != d) throw std::invalid_argument("covariant_deriv: dimension mismatch");
  WeylElement<C> out = exterior_d(a);
  const bool sympl = !conn.gamma.is_flat();
  const auto raised = sympl ? conn.raised_cache() : std::vector<C>{};
  for (const auto& [key, m] : a.terms()) {
    const unsigned s = weyl_key::forms(key);
    for (int k = 0; k < d; ++k) {
      const int sign = left_wedge_sign(k, s);
      if (sign == 0) continue;
      const unsigned mask = s | 1u << k;
      const Matrix<C>& ge = conn.gamma_e[static_cast<std::size_t>(k)];
      if (!ge.is_zero()) {
        const Matrix<C> comm = ge * m - m * ge;
        if (!comm.is_zero()) out.add_scaled(weyl_key::with_forms(key, mask), comm, S(sign));
      }
      if (!sympl) continue;
      for (int j = 0; j < d; ++j) {
        const int e = weyl_key::alpha(key, j);
        if (e == 0) continue;
        const auto lowered = weyl_key::add_alpha(key, j, -1);
        for (int b = 0; b < d; ++b) {
          const C& g = raised[tensor_index(d, {j, k, b})];
          if (g.is_zero()) continue;
          out.add_scaled(weyl_key::with_forms(weyl_key::add_alpha(lowered, b, 1), mask), m * g, S(-sign * e));
        }
      }
    }
  }
  return out;
}

// Sign convention for the involution on forms. `standard` keeps coordinate
// forms real and unreordered; `reversed` also reverses wedge products, which
// multiplies an m-form by (-1)^{m(m-1)/2}.
enum class FormInvolution { standard, reversed };

template <CoefficientRing C>
WeylElement<C> weyl_adjoint(const WeylElement<C>& a, const GramForm<C>& gram,
                            FormInvolution variant = FormInvolution::standard) {
  WeylElement<C> out(a.dim(), a.rank(), a.order());
  for (const auto& [k, m] : a.terms()) {
    Matrix<C> adj = adjoint(m, gram);
    const int f = weyl_key::form_degree(k);
    if (variant == FormInvolution::reversed && (f * (f - 1) / 2) % 2) adj = -adj;
    out.add(k, adj);
  }
  return out;
}

}  // namespace fedosov
