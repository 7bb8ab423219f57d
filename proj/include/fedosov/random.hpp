#pragma once

// Seeded generators for test data. The raw mt19937_64 stream is mapped to
// integers by hand so that the same seed gives the same data on every
// standard library.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <random>
#include <vector>

#include "fedosov/geometry.hpp"
#include "fedosov/matrix.hpp"
#include "fedosov/weyl.hpp"

namespace fedosov {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [lo, hi].
  long uniform(long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do v = next();
    while (v >= limit);
    return lo + static_cast<long>(v % span);
  }
  bool coin() { return (next() >> 63) != 0; }

  // Small rational p/q with |p| <= max_num, 1 <= q <= max_den.
  template <Scalar S>
  S rational(long max_num = 3, long max_den = 3) {
    return S::rational(uniform(-max_num, max_num), uniform(1, max_den));
  }
  template <Scalar S>
  S complex(long max_num = 3, long max_den = 3) {
    return rational<S>(max_num, max_den) + S::imag_unit() * rational<S>(max_num, max_den);
  }

 private:
  std::mt19937_64 engine_;
};

// Random frequency vector with entries in [-bandwidth, bandwidth].
inline std::vector<int> random_mode(Rng& rng, int dim, int bandwidth) {
  std::vector<int> k(static_cast<std::size_t>(dim));
  for (int& x : k) x = static_cast<int>(rng.uniform(-bandwidth, bandwidth));
  return k;
}

// Random trigonometric polynomial with `modes` plane waves; real-valued if asked.
template <Scalar S>
FourierScalar<S> random_fourier(Rng& rng, int dim, int bandwidth, int modes, bool real) {
  FourierScalar<S> f = FourierScalar<S>::constant(dim, S(0));
  for (int m = 0; m < modes; ++m) {
    const auto k = random_mode(rng, dim, bandwidth);
    f += FourierScalar<S>::plane_wave(k, rng.complex<S>());
  }
  if (real) f = (f + f.conj()) * S::rational(1, 2);
  return f;
}

template <Scalar S>
Matrix<FourierScalar<S>> random_endo(Rng& rng, int dim, int rank, int bandwidth, int modes) {
  Matrix<FourierScalar<S>> m(rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = random_fourier<S>(rng, dim, bandwidth, modes, false);
  return m;
}

// Random torsion-free symplectic connection: totally symmetric real Gamma_{ijk}.
// `density` in [0, 1] is the chance that a given symmetric slot is nonzero.
template <Scalar S>
SymplecticConnection<FourierScalar<S>> random_symplectic_connection(Rng& rng, int dim, int bandwidth, int modes,
                                                                    double density = 1.0) {
  SymplecticConnection<FourierScalar<S>> g(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      for (int k = j; k < dim; ++k) {
        if (static_cast<double>(rng.uniform(0, 999)) >= density * 1000.0) continue;
        g.set_symmetric(i, j, k, random_fourier<S>(rng, dim, bandwidth, modes, true));
      }
  return g;
}

// Random connection compatible with a constant Gram form H:
// Gamma = H^{-1} X with X anti-Hermitian.
template <Scalar S>
std::vector<Matrix<FourierScalar<S>>> random_compatible_connection(Rng& rng, int dim, const Matrix<S>& gram,
                                                                   int bandwidth, int modes) {
  using F = FourierScalar<S>;
  const auto h_inv = lift_matrix<F>(*inverse(gram));
  std::vector<Matrix<F>> out;
  for (int i = 0; i < dim; ++i) {
    Matrix<F> x = random_endo<S>(rng, dim, gram.size(), bandwidth, modes);
    x = (x - x.conj_transpose()) * S::rational(1, 2);
    out.push_back(h_inv * x);
  }
  return out;
}

// A shared set of frequencies, so that products of independently drawn
// entries keep a nonzero constant mode.
inline std::vector<std::vector<int>> random_mode_pool(Rng& rng, int dim, int bandwidth, int size) {
  std::vector<std::vector<int>> pool;
  for (int m = 0; m < size; ++m) pool.push_back(random_mode(rng, dim, bandwidth));
  return pool;
}

// Real trig polynomial sum_k (c_k e^{ikx} + conj) over the pool; coefficients
// have small integer numerators.
template <Scalar S>
FourierScalar<S> random_real_fourier(Rng& rng, int dim, const std::vector<std::vector<int>>& pool) {
  FourierScalar<S> f = FourierScalar<S>::constant(dim, S(0));
  for (const auto& k : pool) f += FourierScalar<S>::plane_wave(k, rng.complex<S>(2, 2));
  return (f + f.conj()) * S::rational(1, 2);
}

template <Scalar S>
Matrix<FourierScalar<S>> random_symmetric_field(Rng& rng, int dim, int rank, const std::vector<std::vector<int>>& pool) {
  Matrix<FourierScalar<S>> m(rank);
  for (int i = 0; i < rank; ++i)
    for (int j = i; j < rank; ++j) {
      m(i, j) = random_real_fourier<S>(rng, dim, pool);
      m(j, i) = m(i, j);
    }
  return m;
}

template <Scalar S>
Matrix<FourierScalar<S>> random_real_field(Rng& rng, int dim, int rank, const std::vector<std::vector<int>>& pool) {
  Matrix<FourierScalar<S>> m(rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = random_real_fourier<S>(rng, dim, pool);
  return m;
}

// One real antisymmetric matrix per coordinate (lowered Lorentz connection).
template <Scalar S>
std::vector<Matrix<FourierScalar<S>>> random_antisymmetric_fields(Rng& rng, int dim, int rank,
                                                                  const std::vector<std::vector<int>>& pool) {
  std::vector<Matrix<FourierScalar<S>>> out;
  for (int k = 0; k < dim; ++k) {
    Matrix<FourierScalar<S>> m(rank);
    for (int i = 0; i < rank; ++i)
      for (int j = i + 1; j < rank; ++j) {
        m(i, j) = random_real_fourier<S>(rng, dim, pool);
        m(j, i) = -m(i, j);
      }
    out.push_back(std::move(m));
  }
  return out;
}

// Nonzero frequencies, pairwise non-parallel, so that brackets between pool
// modes do not vanish identically. Falls back to whatever the box allows.
inline std::vector<std::vector<int>> random_independent_pool(Rng& rng, int dim, int bandwidth, int size) {
  auto parallel = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j)
        if (a[i] * b[j] != a[j] * b[i]) return false;
    return true;
  };
  std::vector<std::vector<int>> pool;
  for (int attempt = 0; static_cast<int>(pool.size()) < size; ++attempt) {
    auto k = random_mode(rng, dim, bandwidth);
    bool ok = attempt >= 1000 || std::any_of(k.begin(), k.end(), [](int x) { return x != 0; });
    for (const auto& p : pool) ok = ok && (attempt >= 1000 || !parallel(p, k));
    if (ok) pool.push_back(std::move(k));
  }
  return pool;
}

// c_0 + sum_k (c_k e^{ikx} + c'_k e^{-ikx}) over the pool, complex coefficients.
template <Scalar S>
FourierScalar<S> random_pool_fourier(Rng& rng, int dim, const std::vector<std::vector<int>>& pool) {
  FourierScalar<S> f = FourierScalar<S>::constant(dim, rng.complex<S>(2, 2));
  for (const auto& k : pool) {
    std::vector<int> minus(k);
    for (int& x : minus) x = -x;
    f += FourierScalar<S>::plane_wave(k, rng.complex<S>(2, 2));
    f += FourierScalar<S>::plane_wave(minus, rng.complex<S>(2, 2));
  }
  return f;
}

template <Scalar S>
Matrix<FourierScalar<S>> random_pool_endo(Rng& rng, int dim, int rank, const std::vector<std::vector<int>>& pool) {
  Matrix<FourierScalar<S>> m(rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = random_pool_fourier<S>(rng, dim, pool);
  return m;
}

// Symmetric real Gamma_{ijk} over the pool; `density` as for random_symplectic_connection.
template <Scalar S>
SymplecticConnection<FourierScalar<S>> random_pool_symplectic_connection(Rng& rng, int dim,
                                                                         const std::vector<std::vector<int>>& pool,
                                                                         double density = 1.0) {
  SymplecticConnection<FourierScalar<S>> g(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      for (int k = j; k < dim; ++k) {
        if (static_cast<double>(rng.uniform(0, 999)) >= density * 1000.0) continue;
        g.set_symmetric(i, j, k, random_real_fourier<S>(rng, dim, pool));
      }
  return g;
}

// H^{-1} X with X anti-Hermitian, entries over the pool.
template <Scalar S>
std::vector<Matrix<FourierScalar<S>>> random_pool_compatible_connection(Rng& rng, int dim, const Matrix<S>& gram,
                                                                        const std::vector<std::vector<int>>& pool) {
  using F = FourierScalar<S>;
  const auto h_inv = lift_matrix<F>(*inverse(gram));
  std::vector<Matrix<F>> out;
  for (int i = 0; i < dim; ++i) {
    Matrix<F> x = random_pool_endo<S>(rng, dim, gram.size(), pool);
    x = (x - x.conj_transpose()) * S::rational(1, 2);
    out.push_back(h_inv * x);
  }
  return out;
}

struct WeylShape {
  int dim = 2;
  int rank = 1;
  int order = 4;
  int form_degree = 0;
  int terms = 4;
  int min_degree = 0;
  int bandwidth = 1;
  int modes = 2;
  // Keep the h^0 part proportional to the identity, as needed for (i/h)[a, .].
  bool scalar_h0 = false;
};

template <Scalar S>
WeylElement<FourierScalar<S>> random_weyl(Rng& rng, const WeylShape& shape) {
  using F = FourierScalar<S>;
  WeylElement<F> w(shape.dim, shape.rank, shape.order);
  for (int t = 0; t < shape.terms; ++t) {
    const int deg = static_cast<int>(rng.uniform(shape.min_degree, shape.order));
    const int p = static_cast<int>(rng.uniform(0, deg / 2));
    std::vector<int> alpha(static_cast<std::size_t>(shape.dim));
    for (int k = 0; k < deg - 2 * p; ++k) ++alpha[static_cast<std::size_t>(rng.uniform(0, shape.dim - 1))];
    unsigned mask = 0;
    while (std::popcount(mask) < shape.form_degree) mask |= 1u << rng.uniform(0, shape.dim - 1);
    Matrix<F> m = (shape.scalar_h0 && p == 0)
                      ? Matrix<F>::identity(shape.rank, random_fourier<S>(rng, shape.dim, shape.bandwidth, shape.modes, false))
                      : random_endo<S>(rng, shape.dim, shape.rank, shape.bandwidth, shape.modes);
    w.add(weyl_key::make(p, alpha, mask), m);
  }
  return w;
}

}  // namespace fedosov
