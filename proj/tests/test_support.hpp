#pragma once

#include <gtest/gtest.h>

#include "fedosov/fedosov.hpp"
#include "fedosov/random.hpp"

namespace fedosov::testing {

using Q = GaussRational;
using F = FourierScalar<Q>;
using W = WeylElement<F>;
using ES = EndoSeries<F>;
using Ctx = FedosovContext<F>;

inline Q q(long n, long d = 1) { return Q::rational(n, d); }
inline const Q I = Q::imag_unit();

template <class T>
void expect_same(const T& a, const T& b) {
  auto w = T::first_difference(a, b);
  EXPECT_FALSE(w.has_value()) << *w;
}

inline Ctx flat_context(int dim, int rank, int order) {
  return Ctx(ChartGeometry(dim / 2), SymplecticConnection<F>::flat(dim),
             BundleStructure<F>::flat(dim, GramForm<F>::identity(rank)), order);
}

// Indefinite Gram form diag(1, -1), random symmetric Gamma and compatible Gamma^E.
inline Ctx curved_context(Rng& rng, int dim, int order, FedosovOptions opts = {}) {
  const Matrix<Q> h(2, {q(1), q(0), q(0), q(-1)});
  auto gamma = random_symplectic_connection<Q>(rng, dim, 1, 1, dim == 2 ? 1.0 : 0.3);
  BundleStructure<F> bundle(dim, GramForm<F>::from_constant(h), random_compatible_connection<Q>(rng, dim, h, 1, 1));
  return Ctx(ChartGeometry(dim / 2), gamma, bundle, order, opts);
}

inline ES random_series(Rng& rng, int dim, int rank, int max_power) {
  ES s(rank, max_power);
  s[0] = random_endo<Q>(rng, dim, rank, 1, 2);
  if (max_power >= 1 && rng.coin()) s[1] = random_endo<Q>(rng, dim, rank, 1, 1);
  return s;
}

}  // namespace fedosov::testing
