#pragma once

// The Fedosov machine on a Darboux chart: curvature element R, the Abelian
// connection form r, D = -delta + d^conn + (i/h)[r, .], the quantization lift Q,
// its inverse, and the star product of End(E)-valued h-series.
//
// Degree bookkeeping for truncation order N: r is kept through degree N + 1 so
// that Q and Q^{-1} are exact through N and D(a) is exact through
// a.order() - 1 (delta lowers the degree by one).

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedosov/geometry.hpp"
#include "fedosov/weyl.hpp"

namespace fedosov {

// Formal series sum_{p <= max_power} h^p A_p of sections of End(E).
template <CoefficientRing C>
class EndoSeries {
 public:
  using scalar_type = scalar_of_t<C>;

  EndoSeries() = default;
  EndoSeries(int rank, int max_power) : rank_(rank), coeffs_(static_cast<std::size_t>(max_power) + 1, Matrix<C>(rank)) {
    if (rank < 1 || max_power < 0) throw std::invalid_argument("EndoSeries: bad shape");
  }
  static EndoSeries section(const Matrix<C>& a, int max_power) {
    EndoSeries s(a.size(), max_power);
    s[0] = a;
    return s;
  }
  // The h-free, y-free, form-free coefficients of a Weyl element.
  static EndoSeries from_weyl(const WeylElement<C>& w) {
    EndoSeries s(w.rank(), w.order() / 2);
    for (const auto& [k, m] : w.terms()) {
      if (weyl_key::alpha_part(k) != 0 || weyl_key::forms(k) != 0)
        throw std::domain_error("EndoSeries::from_weyl: element depends on y or dx at " + weyl_key::to_string(k, w.dim()));
      s[weyl_key::h_power(k)] = m;
    }
    return s;
  }
  WeylElement<C> to_weyl(int dim, int order) const {
    WeylElement<C> w(dim, rank_, order);
    for (int p = 0; p <= max_power(); ++p)
      w.add(weyl_key::make(p, std::vector<int>(static_cast<std::size_t>(dim)), 0), coeffs_[static_cast<std::size_t>(p)]);
    return w;
  }

  int rank() const { return rank_; }
  int max_power() const { return static_cast<int>(coeffs_.size()) - 1; }
  Matrix<C>& operator[](int p) { return coeffs_.at(static_cast<std::size_t>(p)); }
  const Matrix<C>& operator[](int p) const { return coeffs_.at(static_cast<std::size_t>(p)); }
  bool is_zero() const {
    for (const auto& m : coeffs_)
      if (!m.is_zero()) return false;
    return true;
  }

  EndoSeries operator-() const { return map_matrices([](const Matrix<C>& m) { return -m; }); }
  friend EndoSeries operator+(const EndoSeries& a, const EndoSeries& b) { return combine(a, b, false); }
  friend EndoSeries operator-(const EndoSeries& a, const EndoSeries& b) { return combine(a, b, true); }
  friend EndoSeries operator*(const EndoSeries& a, const scalar_type& s) {
    return a.map_matrices([&s](const Matrix<C>& m) { return m * s; });
  }
  friend bool operator==(const EndoSeries& a, const EndoSeries& b) {
    if (a.rank_ != b.rank_) return false;
    const int n = std::max(a.max_power(), b.max_power());
    for (int p = 0; p <= n; ++p)
      if (!(a.at(p) == b.at(p))) return false;
    return true;
  }
  // Truncates or zero-pads to h^max_power.
  EndoSeries with_max_power(int max_power) const {
    EndoSeries s(rank_, max_power);
    for (int p = 0; p <= std::min(max_power, this->max_power()); ++p) s[p] = coeffs_[static_cast<std::size_t>(p)];
    return s;
  }

  // h is real, so the involution acts coefficientwise.
  EndoSeries adjoint(const GramForm<C>& gram) const {
    return map_matrices([&gram](const Matrix<C>& m) { return fedosov::adjoint(m, gram); });
  }

  template <class F>
  EndoSeries map_matrices(F&& f) const {
    EndoSeries s = *this;
    for (auto& m : s.coeffs_) m = f(m);
    return s;
  }

  static std::optional<std::string> first_difference(const EndoSeries& a, const EndoSeries& b, double tol = 0.0) {
    if (a.rank_ != b.rank_) return "rank mismatch";
    const int n = std::max(a.max_power(), b.max_power());
    for (int p = 0; p <= n; ++p)
      if (auto w = difference_witness(a.at(p), b.at(p), tol)) return "h^" + std::to_string(p) + " " + *w;
    return std::nullopt;
  }

 private:
  Matrix<C> at(int p) const { return p <= max_power() ? coeffs_[static_cast<std::size_t>(p)] : Matrix<C>(rank_); }
  static EndoSeries combine(const EndoSeries& a, const EndoSeries& b, bool subtract) {
    if (a.rank_ != b.rank_) throw std::invalid_argument("EndoSeries: rank mismatch");
    EndoSeries s(a.rank_, std::min(a.max_power(), b.max_power()));
    for (int p = 0; p <= s.max_power(); ++p) s[p] = subtract ? a.at(p) - b.at(p) : a.at(p) + b.at(p);
    return s;
  }

  int rank_ = 1;
  std::vector<Matrix<C>> coeffs_;
};

template <CoefficientRing C>
std::optional<std::string> difference_witness(const EndoSeries<C>& a, const EndoSeries<C>& b, double tol = 0.0) {
  return EndoSeries<C>::first_difference(a, b, tol);
}

struct FedosovOptions {
  // Negative control: use +(ih/2) R^E instead of -(ih/2) R^E in R.
  bool flip_bundle_curvature = false;
};

// R = 1/4 R_{ijkl} y^i y^j dx^k ^ dx^l - (ih/2) R^E_{kl} dx^k ^ dx^l
template <CoefficientRing C>
WeylElement<C> curvature_element(const ConnectionData<C>& conn, int rank, int order, bool flip_bundle = false) {
  using S = scalar_of_t<C>;
  const int d = conn.geometry.dim();
  WeylElement<C> r(d, rank, order);
  if (!conn.gamma.is_flat()) {
    const auto rs = sympl_curvature(conn.gamma, conn.geometry);
    const Matrix<C> id = Matrix<C>::identity(rank);
    for (int k = 0; k < d; ++k)
      for (int l = k + 1; l < d; ++l)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            const C& v = rs[tensor_index(d, {i, j, k, l})];
            if (v.is_zero()) continue;
            std::vector<int> alpha(static_cast<std::size_t>(d));
            ++alpha[static_cast<std::size_t>(i)];
            ++alpha[static_cast<std::size_t>(j)];
            // the (k,l) and (l,k) orderings together give 1/2 R_{ijkl}
            r.add(weyl_key::make(0, alpha, 1u << k | 1u << l), id * (v * S::rational(1, 2)));
          }
  }
  const auto re = bundle_curvature(conn.gamma_e);
  const S factor = S::imag_unit() * S(flip_bundle ? 1 : -1);
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      const auto& m = re[static_cast<std::size_t>(k * d + l)];
      if (m.is_zero()) continue;
      r.add(weyl_key::make(1, std::vector<int>(static_cast<std::size_t>(d)), 1u << k | 1u << l), m * factor);
    }
  return r;
}

template <CoefficientRing C>
class FedosovContext {
 public:
  using coefficient_type = C;
  using scalar_type = scalar_of_t<C>;

  FedosovContext(ChartGeometry geometry, SymplecticConnection<C> gamma, BundleStructure<C> bundle, int order,
                 FedosovOptions options = {})
      : conn_{geometry, std::move(gamma), bundle.connections()}, bundle_(std::move(bundle)), order_(order), options_(options) {
    if (order < 0) throw std::invalid_argument("FedosovContext: negative truncation order");
    if (conn_.gamma.dim() != geometry.dim() || bundle_.dim() != geometry.dim())
      throw std::invalid_argument("FedosovContext: dimension mismatch between chart and connection data");
    if (!conn_.gamma.is_totally_symmetric())
      throw std::invalid_argument("FedosovContext: symplectic connection coefficients must be totally symmetric");
    curvature_ = curvature_element(conn_, rank(), order_ + 2, options_.flip_bundle_curvature);
    compute_r();
  }

  const ChartGeometry& geometry() const { return conn_.geometry; }
  const ConnectionData<C>& connection() const { return conn_; }
  const BundleStructure<C>& bundle() const { return bundle_; }
  const GramForm<C>& gram() const { return bundle_.gram(); }
  int dim() const { return conn_.geometry.dim(); }
  int rank() const { return bundle_.rank(); }
  int order() const { return order_; }
  int max_h_power() const { return order_ / 2; }
  const FedosovOptions& options() const { return options_; }

  // R, kept through degree N + 2.
  const WeylElement<C>& curvature() const { return curvature_; }
  // r, kept through degree N + 1.
  const WeylElement<C>& r() const { return r_; }

  WeylElement<C> zero() const { return WeylElement<C>(dim(), rank(), order_); }
  WeylElement<C> adjoint(const WeylElement<C>& a, FormInvolution v = FormInvolution::standard) const {
    return weyl_adjoint(a, gram(), v);
  }

 private:
  // Degree by degree: r_m = (delta^{-1} R)_m + delta^{-1}( d^conn r_{m-1} + (i/h)(r o r)_{m-1} ),
  // where (i/h) r o r = (1/2)(i/h)[r, r] for the 1-form r.
  void compute_r() {
    const int top = order_ + 1;
    const WeylElement<C> r0 = delta_inv(curvature_).with_order(top);
    r_ = WeylElement<C>(dim(), rank(), top);
    for (int m = 3; m <= top; ++m) {
      WeylElement<C> x = covariant_deriv(r_.degree_part(m - 1), conn_);
      if (m >= 5) ad_over_h_accumulate(x, r_, r_, m - 1, m - 1, scalar_type::rational(1, 2));
      r_ += r0.degree_part(m) + delta_inv(x).degree_part(m);
    }
  }

  ConnectionData<C> conn_;
  BundleStructure<C> bundle_;
  int order_;
  FedosovOptions options_;
  WeylElement<C> curvature_;
  WeylElement<C> r_;
};

template <CoefficientRing C>
const WeylElement<C>& compute_r(const FedosovContext<C>& ctx) {
  return ctx.r();
}

// D a = -delta a + d^conn a + (i/h)[r, a]; exact through degree a.order() - 1,
// which is the order of the result.
template <CoefficientRing C>
WeylElement<C> abelian_D(const FedosovContext<C>& ctx, const WeylElement<C>& a) {
  if (a.order() > ctx.order()) throw std::invalid_argument("abelian_D: input truncated above the context order");
  const int out = a.order() - 1;
  if (out < 0) return WeylElement<C>(a.dim(), a.rank(), 0);
  WeylElement<C> d = (covariant_deriv(a, ctx.connection()) - delta(a)).with_order(out);
  ad_over_h_accumulate(d, ctx.r(), a, 0, out, scalar_of_t<C>(1));
  return d;
}

// Fixed point of b = a + delta^{-1}(d^conn b + (i/h)[r, b]), solved degree by
// degree. Accepts any form-degree-0 Weyl element, not only y-free sections.
template <CoefficientRing C>
WeylElement<C> quantize(const FedosovContext<C>& ctx, const WeylElement<C>& a) {
  if (a.form_degree() != 0) throw std::invalid_argument("quantize: input must have form degree 0");
  const int n = std::min(a.order(), ctx.order());
  WeylElement<C> b(ctx.dim(), ctx.rank(), n);
  for (int m = 0; m <= n; ++m) {
    WeylElement<C> step = a.degree_part(m).with_order(n);
    if (m >= 1) {
      WeylElement<C> x = covariant_deriv(b.degree_part(m - 1), ctx.connection());
      ad_over_h_accumulate(x, ctx.r(), b, m - 1, m - 1, scalar_of_t<C>(1));
      step += delta_inv(x).degree_part(m);
    }
    b += step;
  }
  return b;
}

template <CoefficientRing C>
WeylElement<C> quantize(const FedosovContext<C>& ctx, const EndoSeries<C>& a) {
  return quantize(ctx, a.to_weyl(ctx.dim(), ctx.order()));
}

template <CoefficientRing C>
WeylElement<C> quantize(const FedosovContext<C>& ctx, const Matrix<C>& a) {
  return quantize(ctx, EndoSeries<C>::section(a, ctx.max_h_power()));
}

// Q^{-1} b = b - delta^{-1}(d^conn b + (i/h)[r, b]), exact through the order of b.
template <CoefficientRing C>
WeylElement<C> dequantize_weyl(const FedosovContext<C>& ctx, const WeylElement<C>& b) {
  const int n = b.order();
  WeylElement<C> x = covariant_deriv(b, ctx.connection()).with_order(n);
  ad_over_h_accumulate(x, ctx.r(), b, 0, n, scalar_of_t<C>(1));
  return b - delta_inv(x);
}

// The symbol of b. delta^{-1} only produces terms carrying a y, so the y-free,
// form-free part of Q^{-1} b is the y-free, form-free part of b; for a flat
// section that is all of Q^{-1} b.
template <CoefficientRing C>
EndoSeries<C> dequantize(const FedosovContext<C>&, const WeylElement<C>& b) {
  return EndoSeries<C>::from_weyl(b.y_free_part());
}

// y-free, form-free part of a o b. A term pair contributes only when every y is
// contracted, which forces alpha_x = beta_p and alpha_p = beta_x in each
// canonical pair; then the coefficient is prod_m (-1)^{alpha_x} alpha_x! alpha_p! (-i/2)^{...}.
template <CoefficientRing C>
EndoSeries<C> moyal_symbol(const WeylElement<C>& a, const WeylElement<C>& b) {
  using S = scalar_of_t<C>;
  a.check_compatible(b);
  const int order = std::min(a.order(), b.order());
  const int n = a.dim() / 2;
  EndoSeries<C> out(a.rank(), order / 2);
  const S c = S::imag_unit() * S::rational(-1, 2);

  // Index b's form-free terms by the partner-swapped exponent vector.
  std::unordered_map<weyl_key::Key, std::vector<const std::pair<const weyl_key::Key, Matrix<C>>*>> by_alpha;
  for (const auto& term : b.terms()) {
    if (weyl_key::forms(term.first)) continue;
    by_alpha[weyl_key::alpha_part(term.first)].push_back(&term);
  }
  for (const auto& [ka, ma] : a.terms()) {
    if (weyl_key::forms(ka)) continue;
    weyl_key::Key want = 0;
    long coef = 1;
    int k = 0;
    for (int m = 0; m < n; ++m) {
      const int ax = weyl_key::alpha(ka, 2 * m), ap = weyl_key::alpha(ka, 2 * m + 1);
      want = weyl_key::add_alpha(weyl_key::add_alpha(want, 2 * m, ap), 2 * m + 1, ax);
      coef *= (ax % 2 ? -1 : 1) * detail::falling(ax, ax) * detail::falling(ap, ap);
      k += ax + ap;
    }
    auto it = by_alpha.find(want);
    if (it == by_alpha.end()) continue;
    S factor = S(coef);
    for (int t = 0; t < k; ++t) factor = factor * c;
    for (const auto* tb : it->second) {
      const int p = weyl_key::h_power(ka) + weyl_key::h_power(tb->first) + k;
      if (2 * p > order) continue;
      const Matrix<C> prod = ma * tb->second;
      if (!prod.is_zero()) out[p].add_scaled(prod, factor);
    }
  }
  return out;
}

// A * B = Q^{-1}(Q(A) o Q(B)).
template <CoefficientRing C>
EndoSeries<C> star(const FedosovContext<C>& ctx, const EndoSeries<C>& a, const EndoSeries<C>& b) {
  return moyal_symbol(quantize(ctx, a), quantize(ctx, b));
}

template <CoefficientRing C>
EndoSeries<C> star(const FedosovContext<C>& ctx, const Matrix<C>& a, const Matrix<C>& b) {
  return star(ctx, EndoSeries<C>::section(a, ctx.max_h_power()), EndoSeries<C>::section(b, ctx.max_h_power()));
}

// Star product of already quantized flat sections.
template <CoefficientRing C>
EndoSeries<C> star_lifted(const WeylElement<C>& qa, const WeylElement<C>& qb) {
  return moyal_symbol(qa, qb);
}

// delta r - R - d^conn r - (i/h) r o r through degree N; zero for a correct r.
template <CoefficientRing C>
WeylElement<C> r_equation_defect(const FedosovContext<C>& ctx) {
  using S = scalar_of_t<C>;
  const int n = ctx.order();
  const WeylElement<C>& r = ctx.r();
  WeylElement<C> lhs = delta(r).with_order(n);
  WeylElement<C> rhs = ctx.curvature().with_order(n) + covariant_deriv(r, ctx.connection()).with_order(n);
  ad_over_h_accumulate(rhs, r, r, 0, n, S::rational(1, 2));
  return lhs - rhs;
}

}  // namespace fedosov
