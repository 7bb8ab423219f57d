#pragma once

// Noncommutative gravity actions from perturbative metric and tetrad data.
//
// Fields are eps-series of trigonometric polynomials on the torus chart. Each
// action is the Fedosov trace of an endomorphism of TM, TM (x) TM or L (x) TM,
// evaluated through the flattening isomorphism.
//
// Conventions (matching geometry.hpp):
//   (Gamma_i)^a_b = Gamma^a_{ib},
//   R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{cs} Gamma^s_{db} - Gamma^a_{ds} Gamma^s_{cb},
//   R_{bd} = R^a_{bad}, R = g^{bd} R_{bd}.
// Tensor-product bundles are indexed first factor major: (A, a) -> A * n + a.

#include <cmath>
#include <initializer_list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fedosov/eps_series.hpp"
#include "fedosov/fedosov.hpp"
#include "fedosov/flatten.hpp"
#include "fedosov/geometry.hpp"
#include "fedosov/matrix.hpp"

namespace fedosov {

template <Scalar S>
using Field = EpsSeries<FourierScalar<S>>;
template <Scalar S>
using FieldMatrix = Matrix<Field<S>>;

// c0 + eps c1
template <Scalar S>
Field<S> eps_field(const FourierScalar<S>& c0, const FourierScalar<S>& c1, int order) {
  return Field<S>(order, {c0, c1});
}

// Small tensors with flat storage (see tensor_index).
template <class C>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, int rank) : dim_(dim), rank_(rank) {
    std::size_t n = 1;
    for (int k = 0; k < rank; ++k) n *= static_cast<std::size_t>(dim);
    data_.resize(n);
  }
  int dim() const { return dim_; }
  int rank() const { return rank_; }
  C& operator()(std::initializer_list<int> idx) { return data_[tensor_index(dim_, idx)]; }
  const C& operator()(std::initializer_list<int> idx) const { return data_[tensor_index(dim_, idx)]; }
  const std::vector<C>& data() const { return data_; }
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  int dim_ = 0;
  int rank_ = 0;
  std::vector<C> data_;
};

// Laplace expansion along the first row; meant for the small ranks used here.
template <class T>
T determinant(const Matrix<T>& m) {
  const int n = m.size();
  if (n == 0) throw std::invalid_argument("determinant: empty matrix");
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  T det{};
  for (int j = 0; j < n; ++j) {
    if (m(0, j).is_zero()) continue;
    Matrix<T> minor(n - 1);
    for (int r = 1; r < n; ++r)
      for (int c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    const T term = m(0, j) * determinant(minor);
    det = j % 2 == 0 ? det + term : det - term;
  }
  return det;
}

namespace detail {

template <Scalar S>
void check_background(const Matrix<S>& eta, const char* who) {
  const int n = eta.size();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (!(eta(a, b) == eta(b, a)) || !eta(a, b).is_real())
        throw std::invalid_argument(std::string(who) + ": background metric must be real symmetric");
  const S det = determinant(eta);
  if (!approx_equal(det * det, S(1), 1e-12))
    throw std::invalid_argument(std::string(who) + ": background metric must have |det| = 1");
}

template <class T>
int series_order(const Matrix<EpsSeries<T>>& m) {
  int order = kUnboundedOrder;
  for (const auto& e : m.entries()) order = std::min(order, e.order());
  return order;
}

}  // namespace detail

// g_{ab}: real symmetric eps-series whose eps^0 part is the constant background.
template <Scalar S>
class MetricField {
 public:
  MetricField(Matrix<S> eta, FieldMatrix<S> g, int order) : eta_(std::move(eta)), order_(order) {
    detail::check_background(eta_, "MetricField");
    if (g.size() != eta_.size()) throw std::invalid_argument("MetricField: size mismatch");
    g_ = g.map([order](const Field<S>& e) { return e.with_order(order); });
    const int n = dim();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const Field<S>& e = g_(a, b);
        if (!(e == g_(b, a))) throw std::invalid_argument("MetricField: g is not symmetric");
        if (!(e.conj() == e)) throw std::invalid_argument("MetricField: g is not real");
        if (!(e[0] - FourierScalar<S>::constant(e[0].dim(), eta_(a, b))).is_zero())
          throw std::invalid_argument("MetricField: eps^0 part of g differs from the background");
      }
  }
  // g = eta + eps p
  static MetricField perturbed(const Matrix<S>& eta, const EndoSection<S>& p, int order) {
    const int n = eta.size();
    const int d = fourier_dim(p);
    FieldMatrix<S> g(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) g(a, b) = eps_field(FourierScalar<S>::constant(d, eta(a, b)), p(a, b), order);
    return MetricField(eta, std::move(g), order);
  }

  int dim() const { return eta_.size(); }
  int order() const { return order_; }
  const Matrix<S>& background() const { return eta_; }
  const FieldMatrix<S>& g() const { return g_; }

  static int fourier_dim(const EndoSection<S>& p) {
    int d = 0;
    for (const auto& e : p.entries()) d = std::max(d, e.dim());
    return d;
  }

 private:
  Matrix<S> eta_;
  int order_;
  FieldMatrix<S> g_;
};

// Gamma^a_{bc} = 1/2 g^{as} (d_b g_{sc} + d_c g_{sb} - d_s g_{bc})
template <Scalar S>
Tensor<Field<S>> levi_civita(const FieldMatrix<S>& g, const FieldMatrix<S>& g_inv) {
  const int n = g.size();
  Tensor<Field<S>> dg(n, 3);  // d_c g_{ab} at (c, a, b)
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dg({c, a, b}) = g(a, b).derive(c);
  Tensor<Field<S>> gamma(n, 3);
  const S half = S::rational(1, 2);
  for (int b = 0; b < n; ++b)
    for (int c = b; c < n; ++c) {
      std::vector<Field<S>> lowered(static_cast<std::size_t>(n));
      for (int s = 0; s < n; ++s) lowered[static_cast<std::size_t>(s)] = dg({b, s, c}) + dg({c, s, b}) - dg({s, b, c});
      for (int a = 0; a < n; ++a) {
        Field<S> v;
        for (int s = 0; s < n; ++s)
          if (!g_inv(a, s).is_zero() && !lowered[static_cast<std::size_t>(s)].is_zero())
            v += g_inv(a, s) * lowered[static_cast<std::size_t>(s)];
        v = v * half;
        gamma({a, b, c}) = v;
        gamma({a, c, b}) = v;
      }
    }
  return gamma;
}

template <Scalar S>
Tensor<Field<S>> levi_civita(const MetricField<S>& metric) {
  return levi_civita(metric.g(), eps_invert(metric.g()));
}

// (Gamma_i)^a_b = Gamma^a_{ib}
template <Scalar S>
std::vector<FieldMatrix<S>> connection_matrices(const Tensor<Field<S>>& gamma) {
  const int n = gamma.dim();
  std::vector<FieldMatrix<S>> out;
  for (int i = 0; i < n; ++i) {
    FieldMatrix<S> m(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) m(a, b) = gamma({a, i, b});
    out.push_back(std::move(m));
  }
  return out;
}

template <Scalar S>
struct Curvature {
  Tensor<Field<S>> riemann;  // R^a_{bcd}
  Tensor<Field<S>> ricci;    // R_{bd}
  Field<S> scalar;
};

template <Scalar S>
Curvature<S> riemann_ricci(const Tensor<Field<S>>& gamma, const FieldMatrix<S>& g_inv) {
  const int n = gamma.dim();
  Curvature<S> out{Tensor<Field<S>>(n, 4), Tensor<Field<S>>(n, 2), Field<S>()};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          Field<S> r = gamma({a, d, b}).derive(c) - gamma({a, c, b}).derive(d);
          for (int s = 0; s < n; ++s) r += gamma({a, c, s}) * gamma({s, d, b}) - gamma({a, d, s}) * gamma({s, c, b});
          out.riemann({a, b, d, c}) = -r;
          out.riemann({a, b, c, d}) = std::move(r);
        }
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      Field<S> r;
      for (int a = 0; a < n; ++a) r += out.riemann({a, b, a, d});
      out.ricci({b, d}) = std::move(r);
    }
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d)
      if (!g_inv(b, d).is_zero()) out.scalar += g_inv(b, d) * out.ricci({b, d});
  return out;
}

// R_{abcd} = g_{ae} R^e_{bcd}
template <Scalar S>
Tensor<Field<S>> lower_first(const Tensor<Field<S>>& riemann, const FieldMatrix<S>& g) {
  const int n = riemann.dim();
  Tensor<Field<S>> out(n, 4);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Field<S> v;
          for (int e = 0; e < n; ++e)
            if (!g(a, e).is_zero()) v += g(a, e) * riemann({e, b, c, d});
          out({a, b, c, d}) = std::move(v);
        }
  return out;
}

// v with sqrt|det g| dx^1 ^ ... ^ dx^2n = v omega^n / n!; the Darboux ordering
// makes omega^n / n! the coordinate volume form.
template <Scalar S>
Field<S> volume_factor(const MetricField<S>& metric) {
  const S sign = determinant(metric.background());  // +-1
  return eps_sqrt(determinant(metric.g()) * sign);
}

// Everything the Einstein-Hilbert actions need from a metric.
template <Scalar S>
struct MetricGeometry {
  MetricField<S> metric;
  FieldMatrix<S> g_inv;
  Tensor<Field<S>> christoffel;
  Curvature<S> curvature;
  Field<S> volume;

  explicit MetricGeometry(MetricField<S> m)
      : metric(std::move(m)),
        g_inv(eps_invert(metric.g())),
        christoffel(levi_civita(metric.g(), g_inv)),
        curvature(riemann_ricci(christoffel, g_inv)),
        volume(volume_factor(metric)) {}

  int dim() const { return metric.dim(); }
  std::vector<FieldMatrix<S>> connection() const { return connection_matrices(christoffel); }
};

template <Scalar S>
FieldMatrix<S> scalar_endo(const Field<S>& f, int rank) {
  FieldMatrix<S> m(rank);
  for (int i = 0; i < rank; ++i) m(i, i) = f;
  return m;
}

template <Scalar S>
FieldMatrix<S> identity_field_matrix(int rank, int order) {
  return scalar_endo(Field<S>::from_scalar(S(1)).with_order(order), rank);
}

// Gamma (x) 1 + 1 (x) Gamma' for each coordinate.
template <Scalar S>
std::vector<FieldMatrix<S>> tensor_connection(const std::vector<FieldMatrix<S>>& a, const std::vector<FieldMatrix<S>>& b,
                                              int order) {
  if (a.size() != b.size()) throw std::invalid_argument("tensor_connection: dimension mismatch");
  const int na = a.front().size(), nb = b.front().size();
  const auto ia = identity_field_matrix<S>(na, order), ib = identity_field_matrix<S>(nb, order);
  std::vector<FieldMatrix<S>> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(kron(a[i], ib) + kron(ia, b[i]));
  return out;
}

template <Scalar S>
struct EinsteinHilbertEndos {
  FieldMatrix<S> ricci;      // R^a_b = g^{ac} R_{cb}, on TM
  FieldMatrix<S> ricci_v;    // v R^a_b
  FieldMatrix<S> volume;     // v 1 on TM
  FieldMatrix<S> riemann;    // R^{ab}_{cd} = g^{bs} R^a_{scd}, on TM (x) TM
  FieldMatrix<S> riemann_v;  // v R^{ab}_{cd}
  FieldMatrix<S> volume2;    // v 1 on TM (x) TM
};

template <Scalar S>
EinsteinHilbertEndos<S> build_eh_endos(const MetricGeometry<S>& geo) {
  const int n = geo.dim();
  const auto& R = geo.curvature;
  FieldMatrix<S> ric(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Field<S> v;
      for (int c = 0; c < n; ++c)
        if (!geo.g_inv(a, c).is_zero()) v += geo.g_inv(a, c) * R.ricci({c, b});
      ric(a, b) = std::move(v);
    }
  FieldMatrix<S> riem(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Field<S> v;
          for (int s = 0; s < n; ++s)
            if (!geo.g_inv(b, s).is_zero()) v += geo.g_inv(b, s) * R.riemann({a, s, c, d});
          riem(a * n + b, c * n + d) = std::move(v);
        }
  const Field<S>& vol = geo.volume;
  return {ric, ric * vol, scalar_endo(vol, n), riem, riem * vol, scalar_endo(vol, n * n)};
}

// theta^A_a with fiber metric eta_{AB}; induces g = theta^T eta theta.
template <Scalar S>
class TetradField {
 public:
  TetradField(Matrix<S> eta, FieldMatrix<S> theta, int order) : eta_(std::move(eta)), order_(order) {
    detail::check_background(eta_, "TetradField");
    if (theta.size() != eta_.size()) throw std::invalid_argument("TetradField: size mismatch");
    theta_ = theta.map([order](const Field<S>& e) { return e.with_order(order); });
    for (const auto& e : theta_.entries())
      if (!(e.conj() == e)) throw std::invalid_argument("TetradField: theta is not real");
    theta_inv_ = eps_invert(theta_);
  }
  // theta = 1 + eps q
  static TetradField perturbed(const Matrix<S>& eta, const EndoSection<S>& q, int order) {
    const int n = eta.size();
    const int d = MetricField<S>::fourier_dim(q);
    FieldMatrix<S> theta(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        theta(a, b) = eps_field(FourierScalar<S>::constant(d, S(a == b ? 1 : 0)), q(a, b), order);
    return TetradField(eta, std::move(theta), order);
  }

  int dim() const { return eta_.size(); }
  int order() const { return order_; }
  const Matrix<S>& fiber_metric() const { return eta_; }
  const FieldMatrix<S>& theta() const { return theta_; }
  const FieldMatrix<S>& theta_inv() const { return theta_inv_; }
  FieldMatrix<S> eta_field() const { return lift_matrix<Field<S>>(eta_); }

  MetricField<S> metric() const { return MetricField<S>(eta_, theta_.transpose() * eta_field() * theta_, order_); }

 private:
  Matrix<S> eta_;
  int order_;
  FieldMatrix<S> theta_;
  FieldMatrix<S> theta_inv_;
};

// Connection on L compatible with eta: eta Gamma_i + Gamma_i^T eta = 0.
template <Scalar S>
class LorentzConnection {
 public:
  LorentzConnection(Matrix<S> eta, std::vector<FieldMatrix<S>> gamma) : eta_(std::move(eta)), gamma_(std::move(gamma)) {
    const auto e = lift_matrix<Field<S>>(eta_);
    for (const auto& g : gamma_) {
      if (g.size() != eta_.size()) throw std::invalid_argument("LorentzConnection: rank mismatch");
      if (!(e * g + g.transpose() * e).is_zero())
        throw std::invalid_argument("LorentzConnection: connection is not compatible with the fiber metric");
      for (const auto& x : g.entries())
        if (!(x.conj() == x)) throw std::invalid_argument("LorentzConnection: connection is not real");
    }
  }
  // Gamma_i = eps eta^{-1} a_i with a_i antisymmetric.
  static LorentzConnection perturbative(const Matrix<S>& eta, const std::vector<EndoSection<S>>& lowered, int order) {
    const auto eta_inv = inverse(eta);
    if (!eta_inv) throw std::invalid_argument("LorentzConnection: singular fiber metric");
    const auto raise = lift_matrix<FourierScalar<S>>(*eta_inv);
    std::vector<FieldMatrix<S>> gamma;
    for (const auto& a : lowered) {
      if (!(a + a.transpose()).is_zero()) throw std::invalid_argument("LorentzConnection: generator is not antisymmetric");
      gamma.push_back((raise * a).map([order](const FourierScalar<S>& f) { return eps_field(FourierScalar<S>(), f, order); }));
    }
    return LorentzConnection(eta, std::move(gamma));
  }

  const Matrix<S>& fiber_metric() const { return eta_; }
  const std::vector<FieldMatrix<S>>& components() const { return gamma_; }
  // R^A_{Bij} stored at i * dim + j
  std::vector<FieldMatrix<S>> curvature() const { return bundle_curvature(gamma_); }

 private:
  Matrix<S> eta_;
  std::vector<FieldMatrix<S>> gamma_;
};

// nabla_i X^a = theta_A^a d^L_i(theta^A_b X^b): Gamma_i = theta^{-1}(d_i theta + Gamma^L_i theta).
template <Scalar S>
std::vector<FieldMatrix<S>> induced_tangent_connection(const TetradField<S>& tetrad, const LorentzConnection<S>& lorentz) {
  std::vector<FieldMatrix<S>> out;
  const auto& th = tetrad.theta();
  for (int i = 0; i < static_cast<int>(lorentz.components().size()); ++i)
    out.push_back(tetrad.theta_inv() * (th.derive(i) + lorentz.components()[static_cast<std::size_t>(i)] * th));
  return out;
}

template <Scalar S>
struct PalatiniEndos {
  FieldMatrix<S> curvature;    // R^A_B^a_b = g^{ai} R^A_{Bib}
  FieldMatrix<S> curvature_v;  // v R^A_B^a_b
  FieldMatrix<S> tetrad;       // T^A_B^a_b = theta^{Aa} theta_{Bb}
};

template <Scalar S>
PalatiniEndos<S> build_palatini_endos(const TetradField<S>& tetrad, const LorentzConnection<S>& lorentz) {
  const int n = tetrad.dim();
  if (static_cast<int>(lorentz.components().size()) != n || !(lorentz.fiber_metric() == tetrad.fiber_metric()))
    throw std::invalid_argument("build_palatini_endos: tetrad and Lorentz connection do not match");
  const MetricField<S> metric = tetrad.metric();
  const FieldMatrix<S> g_inv = eps_invert(metric.g());
  const Field<S> v = volume_factor(metric);
  const auto F = lorentz.curvature();
  FieldMatrix<S> rl(n * n);
  for (int A = 0; A < n; ++A)
    for (int B = 0; B < n; ++B)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Field<S> x;
          for (int i = 0; i < n; ++i)
            if (!g_inv(a, i).is_zero()) x += g_inv(a, i) * F[static_cast<std::size_t>(i * n + b)](A, B);
          rl(A * n + a, B * n + b) = std::move(x);
        }
  const FieldMatrix<S> up = tetrad.theta() * g_inv;                 // theta^{Aa}
  const FieldMatrix<S> down = tetrad.eta_field() * tetrad.theta();  // theta_{Bb}
  FieldMatrix<S> t(n * n);
  for (int A = 0; A < n; ++A)
    for (int a = 0; a < n; ++a)
      for (int B = 0; B < n; ++B)
        for (int b = 0; b < n; ++b) t(A * n + a, B * n + b) = up(A, a) * down(B, b);
  return {rl, rl * v, t};
}

// Hermitian forms h(X, Y) = Y^dagger G X on the complexified bundles.
template <Scalar S>
FieldMatrix<S> eh1_form(const MetricField<S>& m) {
  return m.g();
}
template <Scalar S>
FieldMatrix<S> eh2_form(const MetricField<S>& m) {
  return kron(m.g(), m.g());
}
template <Scalar S>
FieldMatrix<S> palatini_form(const TetradField<S>& t) {
  return kron(t.eta_field(), t.metric().g());
}

// Frame e with e^dagger G e = G_0, the constant eps^0 part of G. With
// X = G_0^{-1} G = 1 + Z, e = X^{-1/2} as a binomial series in Z.
template <Scalar S>
class NormalizedFrame {
 public:
  explicit NormalizedFrame(const FieldMatrix<S>& form) {
    const int n = form.size();
    const int order = detail::series_order(form);
    if (order == kUnboundedOrder) throw std::invalid_argument("NormalizedFrame: form has no eps truncation order");
    EndoSection<S> lead(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) lead(a, b) = form(a, b)[0];
    const auto g0 = constant_matrix(lead);
    if (!g0)
      throw std::domain_error("NormalizedFrame: the eps^0 part of the Hermitian form is not constant, so no frame makes it constant");
    const auto g0_inv = inverse(*g0);
    if (!g0_inv) throw std::domain_error("NormalizedFrame: the eps^0 part of the Hermitian form is singular");
    gram0_ = *g0;
    const FieldMatrix<S> one = identity_field_matrix<S>(n, order);
    const FieldMatrix<S> z = lift_matrix<Field<S>>(*g0_inv) * form - one;
    e_ = one;
    e_inv_ = one;
    FieldMatrix<S> power = one;
    S down(1), up(1);  // binom(-1/2, k), binom(1/2, k)
    for (int k = 1; k <= order; ++k) {
      power = power * z;
      down = down * S::rational(-1 - 2 * (k - 1), 2 * k);
      up = up * S::rational(1 - 2 * (k - 1), 2 * k);
      e_ += power * down;
      e_inv_ += power * up;
    }
    if (!(e_.conj_transpose() * form * e_ == lift_matrix<Field<S>>(gram0_)))
      throw std::domain_error("NormalizedFrame: the Hermitian form cannot be brought to its constant eps^0 part");
  }

  const Matrix<S>& gram0() const { return gram0_; }
  const FieldMatrix<S>& e() const { return e_; }
  const FieldMatrix<S>& e_inv() const { return e_inv_; }

  FieldMatrix<S> to_frame(const FieldMatrix<S>& a) const { return e_inv_ * a * e_; }
  std::vector<FieldMatrix<S>> to_frame(const std::vector<FieldMatrix<S>>& gamma) const {
    std::vector<FieldMatrix<S>> out;
    for (std::size_t i = 0; i < gamma.size(); ++i)
      out.push_back(e_inv_ * (gamma[i] * e_ + e_.derive(static_cast<int>(i))));
    return out;
  }

 private:
  Matrix<S> gram0_;
  FieldMatrix<S> e_;
  FieldMatrix<S> e_inv_;
};

// Fedosov algebra of End(E) for one action, in the normalised frame.
template <Scalar S>
class GravityAlgebra {
 public:
  using C = Field<S>;

  GravityAlgebra(const FieldMatrix<S>& form, const std::vector<FieldMatrix<S>>& connection,
                 const SymplecticConnection<C>& background, int order, FedosovOptions options = {})
      : frame_(form), flattening_(make_context(frame_, connection, background, order, options)) {}

  const NormalizedFrame<S>& frame() const { return frame_; }
  const FedosovContext<C>& context() const { return flattening_.start(); }
  const Flattening<C>& flattening() const { return flattening_; }
  int max_h_power() const { return context().max_h_power(); }

  EndoSeries<C> section(const FieldMatrix<S>& a) const {
    return EndoSeries<C>::section(frame_.to_frame(a), max_h_power());
  }
  EndoSeries<C> star(const EndoSeries<C>& a, const EndoSeries<C>& b) const { return fedosov::star(context(), a, b); }
  TraceSeries<EpsSeries<S>> trace(const EndoSeries<C>& a) const { return flattening_.trace_star(a); }

 private:
  static FedosovContext<C> make_context(const NormalizedFrame<S>& frame, const std::vector<FieldMatrix<S>>& connection,
                                        const SymplecticConnection<C>& background, int order, FedosovOptions options) {
    const int d = static_cast<int>(connection.size());
    if (d % 2 != 0 || background.dim() != d) throw std::invalid_argument("GravityAlgebra: dimension mismatch");
    BundleStructure<C> bundle(d, GramForm<C>::from_constant(frame.gram0()), frame.to_frame(connection));
    for (int i = 0; i < d; ++i)
      if (!bundle.compatibility_defect(i).is_zero())
        throw std::invalid_argument("GravityAlgebra: connection is not compatible with the Hermitian form");
    return FedosovContext<C>(ChartGeometry(d / 2), background, std::move(bundle), order, options);
  }

  NormalizedFrame<S> frame_;
  Flattening<C> flattening_;
};

enum class ActionKind { EH1A, EH1B, EH2A, EH2B, P };

inline constexpr ActionKind kAllActions[] = {ActionKind::EH1A, ActionKind::EH1B, ActionKind::EH2A, ActionKind::EH2B,
                                             ActionKind::P};

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::EH1A: return "EH1A";
    case ActionKind::EH1B: return "EH1B";
    case ActionKind::EH2A: return "EH2A";
    case ActionKind::EH2B: return "EH2B";
    case ActionKind::P: return "P";
  }
  return "?";
}

inline std::optional<ActionKind> parse_action_kind(std::string_view s) {
  for (ActionKind k : kAllActions)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline bool is_palatini(ActionKind k) { return k == ActionKind::P; }

template <Scalar S>
struct GravityInputs {
  std::optional<MetricField<S>> metric;          // Einstein-Hilbert kinds
  std::optional<TetradField<S>> tetrad;          // Palatini
  std::optional<LorentzConnection<S>> lorentz;   // Palatini
  std::optional<SymplecticConnection<FourierScalar<S>>> background;  // flat when empty
  int order = 4;                                 // Weyl truncation N
  FedosovOptions options{};
};

// (h, eps) coefficients of an action; each value multiplies (2 pi)^dim.
template <Scalar S>
struct ActionSeries {
  ActionKind kind = ActionKind::EH1A;
  int dim = 0;
  int order_eps = 0;
  std::vector<std::vector<S>> coefficients;  // [h power][eps power]

  int max_h_power() const { return static_cast<int>(coefficients.size()) - 1; }
  S at(int p, int m) const {
    if (p < 0 || p > max_h_power() || m < 0 || m >= static_cast<int>(coefficients[static_cast<std::size_t>(p)].size()))
      return S(0);
    return coefficients[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)];
  }
  S real(int p, int m) const { return at(p, m).real_part(); }
  S imag(int p, int m) const { return at(p, m).imag_part(); }
  EpsSeries<S> h_row(int p) const {
    std::vector<S> c;
    for (int m = 0; m <= order_eps; ++m) c.push_back(at(p, m));
    return EpsSeries<S>(order_eps, std::move(c));
  }

  static ActionSeries from_trace(ActionKind kind, const TraceSeries<EpsSeries<S>>& t, int order_eps) {
    ActionSeries s{kind, t.dim, order_eps, {}};
    for (const auto& row : t.values) {
      std::vector<S> r;
      for (int m = 0; m <= order_eps; ++m) r.push_back(row[m]);
      s.coefficients.push_back(std::move(r));
    }
    return s;
  }
};

namespace detail {

template <Scalar S>
SymplecticConnection<Field<S>> lift_background(const GravityInputs<S>& in, int dim, int order) {
  if (!in.background) return SymplecticConnection<Field<S>>::flat(dim);
  if (in.background->dim() != dim) throw std::invalid_argument("action: background dimension mismatch");
  return in.background->map([order](const FourierScalar<S>& f) { return Field<S>(order, {f}); });
}

template <Scalar S>
void require_palatini_inputs(const GravityInputs<S>& in) {
  if (!in.tetrad || !in.lorentz) throw std::invalid_argument("action: Palatini needs a tetrad and a Lorentz connection");
}

}  // namespace detail

// Builds the star-product algebra used by an action kind.
template <Scalar S>
GravityAlgebra<S> action_algebra(ActionKind kind, const GravityInputs<S>& in) {
  if (is_palatini(kind)) {
    detail::require_palatini_inputs(in);
    const auto& th = *in.tetrad;
    const auto conn = tensor_connection(in.lorentz->components(), induced_tangent_connection(th, *in.lorentz), th.order());
    return GravityAlgebra<S>(palatini_form(th), conn, detail::lift_background(in, th.dim(), th.order()), in.order,
                             in.options);
  }
  if (!in.metric) throw std::invalid_argument("action: Einstein-Hilbert kinds need a metric");
  const MetricGeometry<S> geo(*in.metric);
  const auto bg = detail::lift_background(in, geo.dim(), in.metric->order());
  if (kind == ActionKind::EH1A || kind == ActionKind::EH1B)
    return GravityAlgebra<S>(eh1_form(*in.metric), geo.connection(), bg, in.order, in.options);
  return GravityAlgebra<S>(eh2_form(*in.metric), tensor_connection(geo.connection(), geo.connection(), in.metric->order()),
                           bg, in.order, in.options);
}

// S_EH1A = tr(v Ric), S_EH1B = tr(Ric * V), S_EH2A = tr(v Riem), S_EH2B = tr(Riem * V),
// S_P = tr(v R_L * T).
template <Scalar S>
ActionSeries<S> action(ActionKind kind, const GravityInputs<S>& in, const GravityAlgebra<S>& alg) {
  TraceSeries<EpsSeries<S>> t;
  int order_eps = 0;
  if (is_palatini(kind)) {
    detail::require_palatini_inputs(in);
    const auto endos = build_palatini_endos(*in.tetrad, *in.lorentz);
    t = alg.trace(alg.star(alg.section(endos.curvature_v), alg.section(endos.tetrad)));
    order_eps = in.tetrad->order();
  } else {
    if (!in.metric) throw std::invalid_argument("action: Einstein-Hilbert kinds need a metric");
    const auto endos = build_eh_endos(MetricGeometry<S>(*in.metric));
    order_eps = in.metric->order();
    switch (kind) {
      case ActionKind::EH1A: t = alg.trace(alg.section(endos.ricci_v)); break;
      case ActionKind::EH1B: t = alg.trace(alg.star(alg.section(endos.ricci), alg.section(endos.volume))); break;
      case ActionKind::EH2A: t = alg.trace(alg.section(endos.riemann_v)); break;
      case ActionKind::EH2B: t = alg.trace(alg.star(alg.section(endos.riemann), alg.section(endos.volume2))); break;
      case ActionKind::P: break;
    }
  }
  return ActionSeries<S>::from_trace(kind, t, order_eps);
}

template <Scalar S>
ActionSeries<S> action(ActionKind kind, const GravityInputs<S>& in) {
  return action(kind, in, action_algebra(kind, in));
}

// h^0 row from the classical fields alone: int v R for the Einstein-Hilbert
// kinds, int v R_{ABij} theta^{Ai} theta^{Bj} for Palatini. Values multiply (2 pi)^dim.
template <Scalar S>
EpsSeries<S> classical_action(ActionKind kind, const GravityInputs<S>& in) {
  if (!is_palatini(kind)) {
    if (!in.metric) throw std::invalid_argument("classical_action: Einstein-Hilbert kinds need a metric");
    const MetricGeometry<S> geo(*in.metric);
    return constant_mode(geo.volume * geo.curvature.scalar);
  }
  detail::require_palatini_inputs(in);
  const auto& th = *in.tetrad;
  const int n = th.dim();
  const MetricField<S> metric = th.metric();
  const FieldMatrix<S> up = th.theta() * eps_invert(metric.g());  // theta^{Ai}
  const auto F = in.lorentz->curvature();
  const FieldMatrix<S> eta = th.eta_field();
  Field<S> lagrangian;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const FieldMatrix<S> low = eta * F[static_cast<std::size_t>(i * n + j)];  // R_{ABij}
      for (int A = 0; A < n; ++A)
        for (int B = 0; B < n; ++B)
          if (!low(A, B).is_zero()) lagrangian += low(A, B) * up(A, i) * up(B, j);
    }
  return constant_mode(volume_factor(metric) * lagrangian);
}

template <Scalar S>
struct RealityReport {
  struct Row {
    int h_power = 0;
    int eps_power = 0;
    S re;
    S im;
  };
  std::vector<Row> rows;
  bool real = true;
  bool classical_checked = false;
  bool classical_match = true;
  std::optional<std::string> witness;

  bool pass() const { return real && classical_match; }
};

// Imaginary parts must vanish (exactly, or |Im| <= tol |Re| on the float
// backend); the h^0 row is compared with `classical` when given.
template <Scalar S>
RealityReport<S> reality_report(const ActionSeries<S>& s,
                                const std::optional<EpsSeries<std::type_identity_t<S>>>& classical = std::nullopt,
                                double tol = 0.0) {
  RealityReport<S> rep;
  double scale = 0;
  for (const auto& row : s.coefficients)
    for (const auto& c : row) scale = std::max(scale, c.abs());
  for (int p = 0; p <= s.max_h_power(); ++p)
    for (int m = 0; m <= s.order_eps; ++m) {
      const S c = s.at(p, m);
      rep.rows.push_back({p, m, s.real(p, m), s.imag(p, m)});
      bool ok;
      if constexpr (S::is_exact) {
        ok = c.is_real();
      } else {
        const double im = std::abs(c.im()), re = std::abs(c.re());
        ok = c.abs() <= 1e-12 * std::max(scale, 1.0) || im <= tol * re;
      }
      if (!ok && rep.real) {
        rep.real = false;
        rep.witness = std::string(to_string(s.kind)) + " h^" + std::to_string(p) + " eps^" + std::to_string(m) +
                      ": Im = " + c.im_string();
      }
    }
  if (classical) {
    rep.classical_checked = true;
    for (int m = 0; m <= s.order_eps; ++m)
      if (!approx_equal(s.at(0, m), (*classical)[m], tol)) {
        rep.classical_match = false;
        if (!rep.witness)
          rep.witness = std::string(to_string(s.kind)) + " h^0 eps^" + std::to_string(m) + ": " + s.at(0, m).to_string() +
                        " vs classical " + (*classical)[m].to_string();
        break;
      }
  }
  return rep;
}

}  // namespace fedosov
