#include <gtest/gtest.h>

#include "fedosov/random.hpp"
#include "fedosov/weyl.hpp"

using namespace fedosov;
using Q = GaussRational;
using F = FourierScalar<Q>;
using W = WeylElement<F>;
namespace wk = weyl_key;

namespace {

Q q(long n, long d = 1) { return Q::rational(n, d); }
const Q I = Q::imag_unit();

Matrix<F> scalar_matrix(int rank, const Q& c) { return Matrix<F>::identity(rank, F::from_scalar(c)); }

// Literal evaluation of sum_k (1/k!) (-ih/2)^k omega^{i1 j1}...omega^{ik jk}
// (d^k a)_{i1..ik} (d^k b)_{j1..jk}, built from a pointwise product and
// single-variable y-derivatives written independently of the library kernel.
W dy(const W& a, int i) {
  W out(a.dim(), a.rank(), a.order());
  for (const auto& [k, m] : a.terms()) {
    const int e = wk::alpha(k, i);
    if (e) out.add(wk::add_alpha(k, i, -1), m * Q(e));
  }
  return out;
}

W pointwise(const W& a, const W& b, int order) {
  W out(a.dim(), a.rank(), order);
  for (const auto& [ka, ma] : a.terms())
    for (const auto& [kb, mb] : b.terms()) {
      const unsigned s = wk::forms(ka), t = wk::forms(kb);
      if (s & t) continue;
      // sign of dx^S ^ dx^T by bubble counting
      int inversions = 0;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          if ((s >> i & 1u) && (t >> j & 1u) && i > j) ++inversions;
      std::vector<int> alpha(static_cast<std::size_t>(a.dim()));
      for (int i = 0; i < a.dim(); ++i) alpha[static_cast<std::size_t>(i)] = wk::alpha(ka, i) + wk::alpha(kb, i);
      const auto key = wk::make(wk::h_power(ka) + wk::h_power(kb), alpha, s | t);
      out.add(key, (ma * mb) * Q(inversions % 2 ? -1 : 1));
    }
  return out;
}

W moyal_oracle(const W& a, const W& b) {
  const int d = a.dim();
  const ChartGeometry geo(d / 2);
  W total(d, a.rank(), a.order());
  // Enumerate multi-index pairs recursively; each level applies one omega^{ij} d_i (x) d_j.
  struct Frame {
    W left, right;
    Q coef;
  };
  std::vector<Frame> level{{a, b, q(1)}};
  Q factorial = q(1);
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) factorial = factorial * Q(k);
    Q pref = factorial.inverse();
    for (int t = 0; t < k; ++t) pref = pref * (I * q(-1, 2));
    for (const auto& fr : level) {
      W term = pointwise(fr.left, fr.right, a.order() + 2 * k).mul_h(k).with_order(a.order());
      total += term * (fr.coef * pref);
    }
    std::vector<Frame> next;
    for (const auto& fr : level)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const int w = geo.omega_inv(i, j);
          if (w == 0) continue;
          W l = dy(fr.left, i), r = dy(fr.right, j);
          if (l.is_zero() || r.is_zero()) continue;
          next.push_back({std::move(l), std::move(r), fr.coef * Q(w)});
        }
    level = std::move(next);
    if (level.empty()) break;
  }
  return total;
}

void expect_equal(const W& a, const W& b) {
  auto w = W::first_difference(a, b);
  EXPECT_FALSE(w.has_value()) << *w;
}

}  // namespace

TEST(Moyal, UnitAndBasicProducts) {
  const int N = 4;
  const W one = W::one(2, 2, N);
  Rng rng(1);
  const W a = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = N, .form_degree = 1});
  expect_equal(moyal(one, a), a);
  expect_equal(moyal(a, one), a);

  const W y1 = W::y(2, 1, N, 0), y2 = W::y(2, 1, N, 1);
  W expected(2, 1, N);
  expected.add(wk::make(0, {1, 1}), scalar_matrix(1, q(1)));
  expected.add(wk::make(1, {0, 0}), scalar_matrix(1, I * q(1, 2)));
  expect_equal(moyal(y1, y2), expected);

  Matrix<F> A(2), B(2);
  A(0, 1) = F::from_scalar(q(1));
  B(1, 0) = F::from_scalar(q(3));
  const W ay = W::section(2, N, A, wk::make(0, {1, 0}));
  const W by = W::section(2, N, B, wk::make(0, {1, 0}));
  expect_equal(moyal(ay, by), W::section(2, N, A * B, wk::make(0, {2, 0})));
}

TEST(Moyal, CommutatorOfGenerators) {
  const W y1 = W::y(2, 1, 4, 0), y2 = W::y(2, 1, 4, 1);
  expect_equal(graded_commutator(y1, y2), W::scalar(2, 1, 4, F::from_scalar(I), wk::make(1, {0, 0})));
  expect_equal(graded_commutator(W::one(2, 1, 4), y2), W(2, 1, 4));
  Rng rng(2);
  const W a = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = 4, .form_degree = 2});
  EXPECT_TRUE(graded_commutator(a, a).is_zero());
}

TEST(Moyal, MixedFormDegreeCommutatorRejected) {
  Rng rng(3);
  const W a = random_weyl<Q>(rng, {.dim = 2, .rank = 1, .order = 3, .form_degree = 0});
  const W b = random_weyl<Q>(rng, {.dim = 2, .rank = 1, .order = 3, .form_degree = 1});
  EXPECT_THROW(graded_commutator(a + b, a), std::invalid_argument);
  EXPECT_THROW(moyal(a, W(2, 1, 5)), std::invalid_argument);
  EXPECT_THROW(moyal(a, W(2, 2, 3)), std::invalid_argument);
}

TEST(Moyal, MatchesLiteralOmegaSum) {
  Rng rng(4);
  for (int draw = 0; draw < 30; ++draw) {
    const int dim = draw % 3 == 0 ? 4 : 2;
    const WeylShape shape{.dim = dim, .rank = 2, .order = dim == 4 ? 4 : 6, .form_degree = static_cast<int>(draw % 2), .terms = 3};
    WeylShape other = shape;
    other.form_degree = static_cast<int>(rng.uniform(0, 2));
    const W a = random_weyl<Q>(rng, shape), b = random_weyl<Q>(rng, other);
    auto w = W::first_difference(moyal(a, b), moyal_oracle(a, b));
    ASSERT_FALSE(w.has_value()) << "draw " << draw << ": " << *w;
  }
}

TEST(Moyal, Associativity) {
  Rng rng(5);
  for (int draw = 0; draw < 25; ++draw) {
    const int dim = draw % 5 == 0 ? 4 : 2;
    const int order = dim == 4 ? 4 : 6;
    auto gen = [&] {
      return random_weyl<Q>(rng, {.dim = dim, .rank = 2, .order = order, .form_degree = static_cast<int>(rng.uniform(0, 1)), .terms = 3});
    };
    const W a = gen(), b = gen(), c = gen();
    auto w = W::first_difference(moyal(moyal(a, b), c), moyal(a, moyal(b, c)));
    ASSERT_FALSE(w.has_value()) << "draw " << draw << ": " << *w;
  }
}

TEST(Moyal, FiltrationAndAdOverH) {
  Rng rng(6);
  for (int draw = 0; draw < 20; ++draw) {
    const W a = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = 6, .terms = 3, .scalar_h0 = true});
    const W b = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = 6, .terms = 3});
    for (const auto& [ka, ma] : a.terms())
      for (const auto& [kb, mb] : b.terms()) {
        const W ta = W::section(2, 6, ma, ka), tb = W::section(2, 6, mb, kb);
        const int d = wk::degree(ka) + wk::degree(kb);
        const W prod = moyal(ta, tb);
        if (!prod.is_zero()) ASSERT_LE(prod.max_degree(), d);
        const W ad = ad_over_h(ta, tb, 0, 20, 20);
        if (!ad.is_zero()) {
          ASSERT_EQ(ad.min_degree(), d - 2);
          ASSERT_EQ(ad.max_degree(), d - 2);
        }
      }
    // (i/h)[a, b] times h / i is the commutator
    const W c = graded_commutator(a.with_order(8), b.with_order(8));
    expect_equal(ad_over_h(a, b).mul_h() * (-I), c.with_order(6));
  }
}

TEST(Koszul, DeltaExamplesAndNilpotency) {
  const int N = 5;
  W y1y2(2, 1, N);
  y1y2.add(wk::make(0, {1, 1}), scalar_matrix(1, q(1)));
  W expected(2, 1, N);
  expected.add(wk::make(0, {0, 1}, 0b01), scalar_matrix(1, q(1)));
  expected.add(wk::make(0, {1, 0}, 0b10), scalar_matrix(1, q(1)));
  expect_equal(delta(y1y2), expected);
  EXPECT_TRUE(delta(W::one(2, 1, N)).is_zero());

  W y1dx1(2, 1, N);
  y1dx1.add(wk::make(0, {1, 0}, 0b01), scalar_matrix(1, q(1)));
  expect_equal(delta_inv(y1dx1), W::scalar(2, 1, N, F::from_scalar(q(1, 2)), wk::make(0, {2, 0})));
  EXPECT_TRUE(delta_inv(W::one(2, 1, N)).is_zero());

  Rng rng(7);
  for (int draw = 0; draw < 40; ++draw) {
    const int dim = draw % 4 == 0 ? 4 : 2;
    W a(dim, 2, N);
    for (int f = 0; f <= dim; ++f)
      a += random_weyl<Q>(rng, {.dim = dim, .rank = 2, .order = N, .form_degree = f, .terms = 2});
    ASSERT_TRUE(delta(delta(a)).is_zero());
    ASSERT_TRUE(delta_inv(delta_inv(a)).is_zero());
    // Hodge decomposition a = a_00 + delta delta^{-1} a + delta^{-1} delta a; delta^{-1}
    // raises the degree, so evaluate with one degree of headroom.
    const W a00 = a.filter([](wk::Key k) { return wk::alpha_part(k) == 0 && wk::forms(k) == 0; });
    const W wide = a.with_order(N + 1);
    auto w = W::first_difference(a, (a00 + delta(delta_inv(wide)) + delta_inv(delta(wide))).with_order(N));
    ASSERT_FALSE(w.has_value()) << *w;
  }
}

TEST(Koszul, DeltaInverseOfBundleCurvatureTerm) {
  // delta^{-1}(-(ih/2) R_{kl} dx^k ^ dx^l) = -(ih/2) R_{sl} y^s dx^l
  Matrix<F> r(2);
  r(0, 1) = F::cosine(std::vector<int>{1, 0});
  r(1, 0) = F::from_scalar(q(2));
  const Q c = I * q(-1, 2);
  W in(2, 2, 4);
  // R_{12} dx^1dx^2 + R_{21} dx^2dx^1 = 2 R_{12} dx^1 ^ dx^2 with R_{21} = -R_{12}
  in.add(wk::make(1, {0, 0}, 0b11), r * (c * q(2)));
  W expected(2, 2, 4);
  expected.add(wk::make(1, {1, 0}, 0b10), r * c);
  expected.add(wk::make(1, {0, 1}, 0b01), -r * c);
  expect_equal(delta_inv(in), expected);
}

TEST(Involution, ProductRuleAndNegativeControl) {
  Rng rng(8);
  const auto gram = GramForm<F>::from_constant(Matrix<Q>(2, {q(-1), q(0), q(0), q(1)}));
  int reversed_failures = 0;
  for (int draw = 0; draw < 30; ++draw) {
    const int r = static_cast<int>(rng.uniform(0, 2)), s = static_cast<int>(rng.uniform(0, 2));
    const W a = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = 5, .form_degree = r, .terms = 3});
    const W b = random_weyl<Q>(rng, {.dim = 2, .rank = 2, .order = 5, .form_degree = s, .terms = 3});
    const W lhs = weyl_adjoint(moyal(a, b), gram);
    const W rhs = moyal(weyl_adjoint(b, gram), weyl_adjoint(a, gram)) * Q((r * s) % 2 ? -1 : 1);
    expect_equal(lhs, rhs);
    expect_equal(weyl_adjoint(weyl_adjoint(a, gram), gram), a);
    const W ca = graded_commutator(a, b);
    expect_equal(weyl_adjoint(ca, gram), -graded_commutator(weyl_adjoint(a, gram), weyl_adjoint(b, gram)));
    expect_equal(weyl_adjoint(delta(a), gram), delta(weyl_adjoint(a, gram)));
    expect_equal(weyl_adjoint(delta_inv(a), gram), delta_inv(weyl_adjoint(a, gram)));

    const auto rev = FormInvolution::reversed;
    const W lhs_rev = weyl_adjoint(moyal(a, b), gram, rev);
    const W rhs_rev = moyal(weyl_adjoint(b, gram, rev), weyl_adjoint(a, gram, rev)) * Q((r * s) % 2 ? -1 : 1);
    if (!(lhs_rev == rhs_rev)) ++reversed_failures;
  }
  EXPECT_GT(reversed_failures, 0);
}

TEST(Involution, Antilinearity) {
  const W iu = W::scalar(2, 1, 3, F::from_scalar(I));
  expect_equal(weyl_adjoint(iu, GramForm<F>::identity(1)), W::scalar(2, 1, 3, F::from_scalar(-I)));
  Matrix<F> A(2);
  A(0, 1) = F::plane_wave({1, 0}, q(2));
  const W a = W::section(2, 3, A, wk::make(0, {1, 0}, 0b10));
  expect_equal(weyl_adjoint(a, GramForm<F>::identity(2)), W::section(2, 3, A.conj_transpose(), wk::make(0, {1, 0}, 0b10)));
}

TEST(CovariantDerivative, FlatDataIsExteriorDerivative) {
  ConnectionData<F> flat{ChartGeometry(1), SymplecticConnection<F>::flat(2), {Matrix<F>(1), Matrix<F>(1)}};
  const W e = W::scalar(2, 1, 3, F::plane_wave({1, 0}));
  expect_equal(covariant_deriv(e, flat), W::scalar(2, 1, 3, F::plane_wave({1, 0}, I), wk::make(0, {0, 0}, 0b01)));
  EXPECT_TRUE(covariant_deriv(W::one(2, 1, 3), flat).is_zero());
}

TEST(CovariantDerivative, ClosedFormMatchesCommutatorDefinitionLeibnizAndReality) {
  Rng rng(9);
  for (int draw = 0; draw < 20; ++draw) {
    const int dim = draw % 4 == 0 ? 4 : 2;
    const int order = dim == 4 ? 4 : 5;
    const auto gram = GramForm<F>::from_constant(Matrix<Q>(2, {q(2), q(0), q(0), q(-1)}));
    ConnectionData<F> conn{ChartGeometry(dim / 2), random_symplectic_connection<Q>(rng, dim, 1, 2, 0.5),
                           random_compatible_connection<Q>(rng, dim, Matrix<Q>(2, {q(2), q(0), q(0), q(-1)}), 1, 2)};
    const W a = random_weyl<Q>(rng, {.dim = dim, .rank = 2, .order = order, .form_degree = static_cast<int>(draw % 2), .terms = 3});
    const W b = random_weyl<Q>(rng, {.dim = dim, .rank = 2, .order = order, .form_degree = 1, .terms = 3});
    const W gt = connection_form(conn, 2, order + 2);
    const W via_commutator = exterior_d(a) + ad_over_h(gt, a.with_order(order + 2), 0, order, order);
    auto w = W::first_difference(covariant_deriv(a, conn), via_commutator);
    ASSERT_FALSE(w.has_value()) << *w;

    const int r = *a.form_degree();
    const W lhs = covariant_deriv(moyal(a, b), conn);
    const W rhs = moyal(covariant_deriv(a, conn), b) + moyal(a, covariant_deriv(b, conn)) * Q(r % 2 ? -1 : 1);
    w = W::first_difference(lhs, rhs);
    ASSERT_FALSE(w.has_value()) << *w;

    w = W::first_difference(weyl_adjoint(covariant_deriv(a, conn), gram), covariant_deriv(weyl_adjoint(a, gram), conn));
    ASSERT_FALSE(w.has_value()) << *w;
  }
}
