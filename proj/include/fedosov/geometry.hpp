#pragma once

// Darboux chart data, symplectic and bundle connections, their curvatures, and
// the pointwise adjoint induced by a (pseudo-)Hermitian Gram form.
//
// Conventions:
//   omega = sum_m dx^{2m} ^ dx^{2m+1} (0-based), so omega_{01} = 1, omega^{01} = -1.
//   Gamma^i_{jk} = omega^{is} Gamma_{sjk}.
//   R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{ks} Gamma^s_{lj} - Gamma^i_{ls} Gamma^s_{kj},
//   R_{ijkl} = omega_{is} R^s_{jkl}.
//   R^E_{ij} = d_i Gamma^E_j - d_j Gamma^E_i + [Gamma^E_i, Gamma^E_j].
//   h(v, w) = w^dagger H v, hence A^+ = H^{-1} A^dagger H and compatibility
//   d_i H = H Gamma^E_i + (Gamma^E_i)^dagger H.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedosov/matrix.hpp"
#include "fedosov/ring.hpp"

namespace fedosov {

class ChartGeometry {
 public:
  explicit ChartGeometry(int half_dim) : n_(half_dim) {
    if (half_dim < 1 || 2 * half_dim > kMaxDim) throw std::invalid_argument("ChartGeometry: unsupported dimension");
  }

  int half_dim() const { return n_; }
  int dim() const { return 2 * n_; }

  // omega_{ij}
  int omega(int i, int j) const {
    if (i / 2 != j / 2 || i == j) return 0;
    return i % 2 == 0 ? 1 : -1;
  }
  // omega^{ij}, the inverse: omega^{is} omega_{sj} = delta^i_j.
  int omega_inv(int i, int j) const { return -omega(i, j); }
  // The unique s with omega_{is} != 0.
  static int partner(int i) { return i ^ 1; }

  friend bool operator==(const ChartGeometry&, const ChartGeometry&) = default;

 private:
  int n_;
};

// Index helpers for flat storage of small tensors.
inline std::size_t tensor_index(int dim, std::initializer_list<int> idx) {
  std::size_t k = 0;
  for (int i : idx) k = k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i);
  return k;
}

// Lowered coefficients Gamma_{ijk} of a torsion-free symplectic connection in a
// Darboux chart: exactly the totally symmetric real 3-tensors.
template <CoefficientRing C>
class SymplecticConnection {
 public:
  SymplecticConnection() = default;
  explicit SymplecticConnection(int dim)
      : dim_(dim), gamma_(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim)) {}

  static SymplecticConnection flat(int dim) { return SymplecticConnection(dim); }

  // Sets Gamma_{ijk} and all its permutations.
  void set_symmetric(int i, int j, int k, const C& value) {
    const int p[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
    for (const auto& q : p) gamma_[tensor_index(dim_, {q[0], q[1], q[2]})] = value;
  }

  int dim() const { return dim_; }
  const C& operator()(int i, int j, int k) const { return gamma_[tensor_index(dim_, {i, j, k})]; }
  bool is_flat() const {
    for (const auto& g : gamma_)
      if (!g.is_zero()) return false;
    return true;
  }

  bool is_totally_symmetric() const {
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) {
          const C& g = (*this)(i, j, k);
          if (!(g == (*this)(j, i, k)) || !(g == (*this)(i, k, j))) return false;
        }
    return true;
  }
  bool is_real() const {
    for (const auto& g : gamma_)
      if (!(g.conj() == g)) return false;
    return true;
  }

  // Gamma^i_{jk} = omega^{is} Gamma_{sjk}
  C raised(const ChartGeometry& geo, int i, int j, int k) const {
    const int s = ChartGeometry::partner(i);
    return (*this)(s, j, k) * scalar_of_t<C>(geo.omega_inv(i, s));
  }

  template <class F>
  auto map(F&& f) const {
    using R = std::decay_t<decltype(f(std::declval<const C&>()))>;
    SymplecticConnection<R> out(dim_);
    for (std::size_t n = 0; n < gamma_.size(); ++n) out.raw()[n] = f(gamma_[n]);
    return out;
  }
  std::vector<C>& raw() { return gamma_; }
  const std::vector<C>& raw() const { return gamma_; }

 private:
  int dim_ = 0;
  std::vector<C> gamma_;
};

// Lowered symplectic curvature R_{ijkl}, stored flat with tensor_index.
template <CoefficientRing C>
std::vector<C> sympl_curvature(const SymplecticConnection<C>& gamma, const ChartGeometry& geo) {
  const int d = geo.dim();
  std::vector<C> up(static_cast<std::size_t>(d * d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) up[tensor_index(d, {i, j, k})] = gamma.raised(geo, i, j, k);
  auto G = [&](int i, int j, int k) -> const C& { return up[tensor_index(d, {i, j, k})]; };

  std::vector<C> lowered(static_cast<std::size_t>(d * d * d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          if (k == l) continue;
          // R^i_{jkl}
          C r = G(i, l, j).derive(k) - G(i, k, j).derive(l);
          for (int s = 0; s < d; ++s) r = r + G(i, k, s) * G(s, l, j) - G(i, l, s) * G(s, k, j);
          const int low = ChartGeometry::partner(i);
          // R_{low j k l} = omega_{low i} R^i_{jkl}
          lowered[tensor_index(d, {low, j, k, l})] = r * scalar_of_t<C>(geo.omega(low, i));
        }
  return lowered;
}

// Gram form together with its inverse; the inverse is supplied or computed
// from a constant matrix.
template <CoefficientRing C>
struct GramForm {
  Matrix<C> H;
  Matrix<C> H_inv;
  bool is_identity = false;
  bool is_constant = false;

  static GramForm identity(int rank) {
    return {Matrix<C>::identity(rank), Matrix<C>::identity(rank), true, true};
  }
  static GramForm from_constant(const Matrix<scalar_of_t<C>>& h) {
    auto inv = inverse(h);
    if (!inv) throw std::domain_error("GramForm: Gram matrix is not invertible");
    for (int i = 0; i < h.size(); ++i)
      for (int j = 0; j < h.size(); ++j)
        if (!(h(i, j).conj() == h(j, i))) throw std::invalid_argument("GramForm: matrix is not Hermitian");
    return {lift_matrix<C>(h), lift_matrix<C>(*inv), false, true};
  }
  // Non-constant form; the caller provides an exact inverse.
  static GramForm from_pair(Matrix<C> h, Matrix<C> h_inv) {
    if (!(h * h_inv == Matrix<C>::identity(h.size())))
      throw std::domain_error("GramForm: supplied inverse does not invert the Gram matrix");
    return {std::move(h), std::move(h_inv), false, false};
  }
  int rank() const { return H.size(); }

  template <class F>
  auto map(F&& f) const {
    using R = std::decay_t<decltype(f(std::declval<const C&>()))>;
    return GramForm<R>{H.map(f), H_inv.map(f), is_identity, is_constant};
  }
};

// A^+ = H^{-1} A^dagger H
template <CoefficientRing C>
Matrix<C> adjoint(const Matrix<C>& a, const GramForm<C>& gram) {
  if (gram.is_identity) return a.conj_transpose();
  return gram.H_inv * a.conj_transpose() * gram.H;
}

template <CoefficientRing C>
class BundleStructure {
 public:
  BundleStructure() = default;
  BundleStructure(int dim, GramForm<C> gram, std::vector<Matrix<C>> connection)
      : dim_(dim), gram_(std::move(gram)), gamma_(std::move(connection)) {
    if (static_cast<int>(gamma_.size()) != dim_) throw std::invalid_argument("BundleStructure: need one connection matrix per coordinate");
    for (const auto& g : gamma_)
      if (g.size() != gram_.rank()) throw std::invalid_argument("BundleStructure: connection rank mismatch");
  }
  static BundleStructure flat(int dim, GramForm<C> gram) {
    const int r = gram.rank();
    return BundleStructure(dim, std::move(gram), std::vector<Matrix<C>>(static_cast<std::size_t>(dim), Matrix<C>(r)));
  }

  int dim() const { return dim_; }
  int rank() const { return gram_.rank(); }
  const GramForm<C>& gram() const { return gram_; }
  const Matrix<C>& connection(int i) const { return gamma_[static_cast<std::size_t>(i)]; }
  const std::vector<Matrix<C>>& connections() const { return gamma_; }
  bool is_flat_connection() const {
    for (const auto& g : gamma_)
      if (!g.is_zero()) return false;
    return true;
  }

  // d_i H - H Gamma_i - Gamma_i^dagger H; zero for a compatible connection.
  Matrix<C> compatibility_defect(int i) const {
    const Matrix<C>& g = gamma_[static_cast<std::size_t>(i)];
    return gram_.H.derive(i) - gram_.H * g - g.conj_transpose() * gram_.H;
  }
  bool is_compatible() const {
    for (int i = 0; i < dim_; ++i)
      if (!compatibility_defect(i).is_zero()) return false;
    return true;
  }

  template <class F>
  auto map(F&& f) const {
    using R = std::decay_t<decltype(f(std::declval<const C&>()))>;
    std::vector<Matrix<R>> g;
    for (const auto& m : gamma_) g.push_back(m.map(f));
    return BundleStructure<R>(dim_, gram_.map(f), std::move(g));
  }

 private:
  int dim_ = 0;
  GramForm<C> gram_;
  std::vector<Matrix<C>> gamma_;
};

// R^E_{ij} stored flat at i * dim + j.
template <CoefficientRing C>
std::vector<Matrix<C>> bundle_curvature(const std::vector<Matrix<C>>& gamma) {
  const int d = static_cast<int>(gamma.size());
  std::vector<Matrix<C>> r(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const auto& gi = gamma[static_cast<std::size_t>(i)];
      const auto& gj = gamma[static_cast<std::size_t>(j)];
      Matrix<C> m(gi.size());
      if (i != j) m = gj.derive(i) - gi.derive(j) + gi * gj - gj * gi;
      r[static_cast<std::size_t>(i * d + j)] = std::move(m);
    }
  return r;
}

template <CoefficientRing C>
std::vector<Matrix<C>> bundle_curvature(const BundleStructure<C>& bundle) {
  return bundle_curvature(bundle.connections());
}

}  // namespace fedosov
