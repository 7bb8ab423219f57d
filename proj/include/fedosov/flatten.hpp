#pragma once

// Flattening of a Fedosov algebra on the torus chart.
//
// The data (Gamma, Gamma^E) is scaled to zero along Gamma(t) = (1 - t) Gamma,
// Gamma^E(t) = (1 - t) Gamma^E. Running the Fedosov machine with coefficients
// in TPoly gives r(t), gamma(t) and the Hamiltonian
//   H(t) = Q_t( i h Gamma'^E_j y^j - 1/6 Gamma'_{ijk} y^i y^j y^k ),
// whose Heisenberg flow da/dt + (i/h)[H, a] = 0 carries D_0-flat sections to
// D_1-flat ones. M = Q_1^{-1} T Q_0 is then a *-isomorphism onto the flat
// algebra, where the trace is the integral of the matrix trace.

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedosov/eps_series.hpp"
#include "fedosov/fedosov.hpp"
#include "fedosov/fourier.hpp"
#include "fedosov/tpoly.hpp"

namespace fedosov {

template <CoefficientRing C>
TPoly<C> lift_t(const C& c) {
  return TPoly<C>::constant(c);
}

template <CoefficientRing C>
WeylElement<TPoly<C>> lift_t(const WeylElement<C>& a) {
  return a.map([](const C& c) { return lift_t(c); });
}

template <CoefficientRing C>
WeylElement<C> eval_t(const WeylElement<TPoly<C>>& a, const scalar_of_t<C>& t) {
  return a.map([&t](const TPoly<C>& p) { return p.eval(t); });
}

template <CoefficientRing C>
class HomotopyPath {
 public:
  using T = TPoly<C>;
  using S = scalar_of_t<C>;

  HomotopyPath(ChartGeometry geometry, SymplecticConnection<C> gamma, BundleStructure<C> bundle)
      : geometry_(std::move(geometry)), gamma_(std::move(gamma)), bundle_(std::move(bundle)) {
    if (!bundle_.gram().is_constant)
      throw std::invalid_argument("HomotopyPath: the linear homotopy needs a constant Gram form");
  }
  static HomotopyPath from_context(const FedosovContext<C>& ctx) {
    return HomotopyPath(ctx.geometry(), ctx.connection().gamma, ctx.bundle());
  }

  const ChartGeometry& geometry() const { return geometry_; }
  const SymplecticConnection<C>& gamma() const { return gamma_; }
  const BundleStructure<C>& bundle() const { return bundle_; }
  int dim() const { return geometry_.dim(); }

  SymplecticConnection<T> gamma_t() const {
    const T s = T::one_minus_t();
    return gamma_.map([&s](const C& c) { return lift_t(c) * s; });
  }
  BundleStructure<T> bundle_t() const {
    const T s = T::one_minus_t();
    std::vector<Matrix<T>> g;
    for (const auto& m : bundle_.connections()) g.push_back(m.map([&s](const C& c) { return lift_t(c) * s; }));
    return BundleStructure<T>(dim(), bundle_.gram().map([](const C& c) { return lift_t(c); }), std::move(g));
  }

  SymplecticConnection<C> gamma_at(const S& t) const {
    const S s = S(1) - t;
    return gamma_.map([&s](const C& c) { return c * s; });
  }
  BundleStructure<C> bundle_at(const S& t) const {
    const S s = S(1) - t;
    std::vector<Matrix<C>> g;
    for (const auto& m : bundle_.connections()) g.push_back(m * s);
    return BundleStructure<C>(dim(), bundle_.gram(), std::move(g));
  }

 private:
  ChartGeometry geometry_;
  SymplecticConnection<C> gamma_;
  BundleStructure<C> bundle_;
};

// The constant Fourier mode of a coefficient, kept per epsilon power for series.
template <Scalar S>
S constant_mode(const FourierScalar<S>& f) {
  return f.constant_term();
}

template <class T>
auto constant_mode(const EpsSeries<T>& f) {
  return f.map([](const T& c) { return constant_mode(c); });
}

template <CoefficientRing C>
using constant_mode_t = std::decay_t<decltype(constant_mode(std::declval<const C&>()))>;

// sum_p h^p value[p] (2 pi)^dim
template <class V>
struct TraceSeries {
  int dim = 0;
  std::vector<V> values;

  int max_power() const { return static_cast<int>(values.size()) - 1; }
  TraceSeries conj() const {
    TraceSeries out{dim, {}};
    for (const auto& v : values) out.values.push_back(v.conj());
    return out;
  }
  friend bool operator==(const TraceSeries& a, const TraceSeries& b) {
    return a.dim == b.dim && a.values == b.values;
  }
  static std::optional<std::string> first_difference(const TraceSeries& a, const TraceSeries& b, double tol = 0.0) {
    if (a.dim != b.dim || a.values.size() != b.values.size()) return "shape mismatch";
    for (std::size_t p = 0; p < a.values.size(); ++p)
      if (auto w = difference_witness(a.values[p], b.values[p], tol)) return "h^" + std::to_string(p) + " " + *w;
    return std::nullopt;
  }
};

// tr A = int Tr A omega^n/n!, normalised to 1 on the flat algebra.
template <CoefficientRing C>
TraceSeries<constant_mode_t<C>> trace_flat(const EndoSeries<C>& a, int dim) {
  TraceSeries<constant_mode_t<C>> out{dim, {}};
  for (int p = 0; p <= a.max_power(); ++p) out.values.push_back(constant_mode(a[p].trace()));
  return out;
}

template <CoefficientRing C>
class Flattening {
 public:
  using T = TPoly<C>;
  using S = scalar_of_t<C>;

  // The path context runs one degree above `order`. (i/h)[H_k, a_j] has degree
  // k + j - 2 and H has no y-free terms, so H through order + 1 determines the
  // symbol of the transported section through `order`.
  explicit Flattening(const FedosovContext<C>& start)
      : path_(HomotopyPath<C>::from_context(start)),
        start_(start),
        path_ctx_(path_.geometry(), path_.gamma_t(), path_.bundle_t(), start.order() + 1, start.options()),
        end_(path_.geometry(), SymplecticConnection<C>::flat(path_.dim()),
             BundleStructure<C>::flat(path_.dim(), path_.bundle().gram()), start.order()) {
    hamiltonian_ = quantize(path_ctx_, hamiltonian_seed());
    build_symbol_table();
  }

  const HomotopyPath<C>& path() const { return path_; }
  const FedosovContext<C>& start() const { return start_; }
  const FedosovContext<T>& path_context() const { return path_ctx_; }
  const FedosovContext<C>& end() const { return end_; }
  int order() const { return start_.order(); }

  const WeylElement<T>& r_of_t() const { return path_ctx_.r(); }
  // d/dt of gamma(t) = Gamma~(t) + r(t).
  WeylElement<T> gamma_dot() const {
    const WeylElement<T> g = connection_form(path_ctx_.connection(), path_ctx_.rank(), path_ctx_.order() + 1) + r_of_t();
    return g.map([](const T& p) { return p.ddt(); });
  }
  const WeylElement<T>& hamiltonian() const { return hamiltonian_; }

  // Highest degree to which transport(a0) is exact: H is known through
  // order + 1, so a non-central degree-0 part costs one degree.
  int transport_order(const WeylElement<C>& a0) const {
    const int top = std::min(a0.order(), order());
    bool central = true;
    const WeylElement<C> low = a0.degree_part(0);
    for (const auto& [k, m] : low.terms()) central = central && detail::is_scalar_identity(m);
    return central ? top : std::min(top, order() - 1);
  }

  // Solution at t = 1 of da/dt + (i/h)[H(t), a] = 0 with a(0) = a0, through
  // transport_order(a0).
  WeylElement<C> transport(const WeylElement<C>& a0) const {
    return transport_raw(a0).with_order(transport_order(a0));
  }
  WeylElement<T> transport_t(const WeylElement<C>& a0) const {
    return flow(a0).with_order(transport_order(a0));
  }

  // M(A) = Q_1^{-1} T Q_0 (A), with T applied through the fiberwise symbol
  // table. Q_1^{-1} of a D_1-flat section is its y-free part.
  EndoSeries<C> flatten_iso(const EndoSeries<C>& a) const { return symbol_of_transport(quantize(start_, a)); }
  // M from an already quantized section qa = Q_0(A).
  EndoSeries<C> flatten_iso_lifted(const WeylElement<C>& qa) const { return symbol_of_transport(qa); }
  // Same map with the Heisenberg flow integrated directly on Q_0(A).
  EndoSeries<C> flatten_iso_direct(const EndoSeries<C>& a) const {
    return dequantize(end_, transport_raw(quantize(start_, a)));
  }
  EndoSeries<C> star_flat(const EndoSeries<C>& a, const EndoSeries<C>& b) const { return star(end_, a, b); }

  TraceSeries<constant_mode_t<C>> trace_star(const EndoSeries<C>& a) const {
    return trace_flat(flatten_iso(a), path_.dim());
  }

 private:
  // The bracket raises the degree by at least one, so a_m(t) only needs lower
  // degrees and one Picard pass per degree is exact.
  WeylElement<T> flow(const WeylElement<C>& a0) const {
    if (a0.order() > order()) throw std::invalid_argument("transport: input truncated above the flattening order");
    const WeylElement<T> seed = lift_t(a0);
    WeylElement<T> a(a0.dim(), a0.rank(), a0.order());
    for (int m = 0; m <= a0.order(); ++m) {
      WeylElement<T> x(a0.dim(), a0.rank(), a0.order());
      ad_over_h_accumulate(x, hamiltonian_, a, m, m, S(1));
      a += seed.degree_part(m) - x.map([](const T& p) { return p.integrate(); });
    }
    return a;
  }
  WeylElement<C> transport_raw(const WeylElement<C>& a0) const { return eval_t(flow(a0), S(1)); }

  // T acts fiberwise and multiplicatively, so the symbol of T(a) is
  // sum c(x) h^p sigma(T(y^alpha) o T(E_ab)) over the terms c h^p y^alpha E_ab of a.
  EndoSeries<C> symbol_of_transport(const WeylElement<C>& a) const {
    const int rank = a.rank();
    const int top = order() / 2;
    EndoSeries<C> out(rank, top);
    for (const auto& [key, m] : a.terms()) {
      if (weyl_key::forms(key) != 0) throw std::invalid_argument("flatten_iso: expected a section of form degree 0");
      const int p = weyl_key::h_power(key);
      const auto it = symbols_.find(weyl_key::alpha_part(key));
      if (it == symbols_.end()) throw std::logic_error("flatten_iso: monomial outside the symbol table");
      for (int i = 0; i < rank; ++i)
        for (int j = 0; j < rank; ++j) {
          const C& f = m(i, j);
          if (f.is_zero()) continue;
          const EndoSeries<C>& sigma = it->second[static_cast<std::size_t>(i * rank + j)];
          for (int q = 0; q + p <= top; ++q) out[q + p] = out[q + p] + sigma[q] * f;
        }
    }
    return out;
  }

  void build_symbol_table() {
    const int d = path_.dim();
    const int rank = path_.bundle().rank();
    const int n = order();
    std::vector<WeylElement<C>> units;
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < rank; ++j) {
        Matrix<C> e(rank);
        e(i, j) = C::from_scalar(S(1));
        units.push_back(transport_raw(WeylElement<C>::section(d, n, e)));
      }
    std::vector<WeylElement<C>> gens;
    for (int i = 0; i < d; ++i) gens.push_back(transport_raw(WeylElement<C>::y(d, rank, n, i)));

    // T(y^alpha) by increasing degree: y^i y^beta = y^i o y^beta - kappa with
    // kappa = y^i o y^beta - y^i y^beta of lower degree.
    std::unordered_map<weyl_key::Key, WeylElement<C>> images;
    const weyl_key::Key unit = weyl_key::make(0, std::vector<int>(static_cast<std::size_t>(d)), 0);
    images.emplace(unit, transport_raw(WeylElement<C>::one(d, rank, n)));
    std::vector<weyl_key::Key> previous{unit};
    for (int deg = 1; deg <= n; ++deg) {
      std::vector<weyl_key::Key> current;
      for (const weyl_key::Key beta : previous)
        for (int i = 0; i < d; ++i) {
          const weyl_key::Key alpha = weyl_key::add_alpha(beta, i, 1);
          if (images.count(alpha)) continue;
          const WeylElement<C> yb = WeylElement<C>::scalar(d, rank, n, C::from_scalar(S(1)), beta);
          const WeylElement<C> yi = WeylElement<C>::y(d, rank, n, i);
          const WeylElement<C> kappa = moyal(yi, yb) - WeylElement<C>::scalar(d, rank, n, C::from_scalar(S(1)), alpha);
          WeylElement<C> img = moyal(gens[static_cast<std::size_t>(i)], images.at(beta));
          for (const auto& [k, m] : kappa.terms()) {
            if (!detail::is_scalar_identity(m)) throw std::logic_error("flatten: unexpected matrix-valued Moyal correction");
            img = img - images.at(weyl_key::alpha_part(k)).mul_h(weyl_key::h_power(k)).times_function(m(0, 0));
          }
          images.emplace(alpha, std::move(img));
          current.push_back(alpha);
        }
      previous = std::move(current);
    }
    for (const auto& [alpha, img] : images) {
      std::vector<EndoSeries<C>> row;
      for (const auto& u : units) row.push_back(moyal_symbol(img, u));
      symbols_.emplace(alpha, std::move(row));
    }
  }

  // i h Gamma'^E_j y^j - 1/6 Gamma'_{ijk} y^i y^j y^k with Gamma' = -Gamma, Gamma'^E = -Gamma^E.
  WeylElement<T> hamiltonian_seed() const {
    const int d = path_.dim();
    const int rank = path_.bundle().rank();
    WeylElement<T> seed(d, rank, path_ctx_.order());
    const Matrix<T> id = Matrix<T>::identity(rank);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          const C& v = path_.gamma()(i, j, k);
          if (v.is_zero()) continue;
          std::vector<int> alpha(static_cast<std::size_t>(d));
          ++alpha[static_cast<std::size_t>(i)];
          ++alpha[static_cast<std::size_t>(j)];
          ++alpha[static_cast<std::size_t>(k)];
          seed.add(weyl_key::make(0, alpha, 0), id * lift_t(v * S::rational(1, 6)));
        }
    const S minus_i = -S::imag_unit();
    for (int j = 0; j < d; ++j) {
      const Matrix<C>& g = path_.bundle().connection(j);
      if (g.is_zero()) continue;
      std::vector<int> alpha(static_cast<std::size_t>(d));
      ++alpha[static_cast<std::size_t>(j)];
      seed.add(weyl_key::make(1, alpha, 0), (g * minus_i).map([](const C& c) { return lift_t(c); }));
    }
    return seed;
  }

  HomotopyPath<C> path_;
  FedosovContext<C> start_;
  FedosovContext<T> path_ctx_;
  FedosovContext<C> end_;
  WeylElement<T> hamiltonian_;
  std::unordered_map<weyl_key::Key, std::vector<EndoSeries<C>>> symbols_;
};

}  // namespace fedosov
