// Star product of two plane waves on the flat 2-torus, then the trace of a
// commutator on a curved background.

#include <iostream>

#include "fedosov/fedosov.hpp"
#include "fedosov/flatten.hpp"
#include "fedosov/random.hpp"

using namespace fedosov;

using Q = GaussRational;
using F = FourierScalar<Q>;

namespace {

std::string show(const Q& v) {
  if (v.im_string() == "0") return v.re_string();
  return v.re_string() + " + (" + v.im_string() + ")i";
}

}  // namespace

int main() {
  const int dim = 2, rank = 2, order = 4;
  Matrix<Q> gram(rank);
  gram(0, 0) = Q::rational(1, 1);
  gram(1, 1) = Q::rational(-1, 1);

  FedosovContext<F> flat(ChartGeometry(1), SymplecticConnection<F>::flat(dim),
                         BundleStructure<F>::flat(dim, GramForm<F>::from_constant(gram)), order);
  const F e1 = F::plane_wave({1, 0}), e2 = F::plane_wave({0, 1});
  const auto p = star(flat, Matrix<F>::identity(rank, e1), Matrix<F>::identity(rank, e2));
  std::cout << "e^{ix} * e^{iy} on flat T^2, coefficient of e^{i(x+y)}:\n";
  for (int k = 0; k <= p.max_power(); ++k)
    std::cout << "  h^" << k << ": " << show(p[k](0, 0).coefficient(std::vector<int>{1, 1})) << "\n";

  Rng rng(2024);
  FedosovContext<F> curved(ChartGeometry(1), random_symplectic_connection<Q>(rng, dim, 1, 1),
                           BundleStructure<F>::flat(dim, GramForm<F>::from_constant(gram)), order);
  const Flattening<F> fl(curved);
  Matrix<F> a(rank), b(rank);
  a(0, 0) = F::cosine(std::vector<int>{1, 0});
  a(0, 1) = F::cosine(std::vector<int>{0, 1});
  b(1, 0) = F::cosine(std::vector<int>{0, 1});
  b(1, 1) = e1;
  const auto ab = fl.trace_star(star(curved, a, b)), ba = fl.trace_star(star(curved, b, a));
  std::cout << "tr(a*b) and tr(b*a) on a curved T^2, units of (2pi)^2:\n";
  for (int k = 0; k <= ab.max_power(); ++k)
    std::cout << "  h^" << k << ": " << show(ab.values[static_cast<std::size_t>(k)]) << "  |  "
              << show(ba.values[static_cast<std::size_t>(k)]) << "\n";
  return ab == ba ? 0 : 1;
}
