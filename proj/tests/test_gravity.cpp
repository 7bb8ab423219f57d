#include <gtest/gtest.h>

#include "classical_oracle.hpp"
#include "fedosov/gravity.hpp"
#include "test_support.hpp"

using namespace fedosov;
using namespace fedosov::testing;

using Fl = Field<Q>;
using FM = FieldMatrix<Q>;

namespace {

constexpr int kE = 2;

Matrix<Q> diag(std::initializer_list<long> d) {
  Matrix<Q> m(static_cast<int>(d.size()));
  int i = 0;
  for (long x : d) m(i, i) = q(x), ++i;
  return m;
}
std::vector<Q> diag_entries(const Matrix<Q>& m) {
  std::vector<Q> out;
  for (int i = 0; i < m.size(); ++i) out.push_back(m(i, i));
  return out;
}

MetricField<Q> random_metric(Rng& rng, const Matrix<Q>& eta, int pool_size = 2, int order = kE) {
  const int d = eta.size();
  const auto pool = random_mode_pool(rng, d, 1, pool_size);
  return MetricField<Q>::perturbed(eta, random_symmetric_field<Q>(rng, d, d, pool), order);
}

struct PalatiniData {
  TetradField<Q> tetrad;
  LorentzConnection<Q> lorentz;
};
PalatiniData random_palatini(Rng& rng, const Matrix<Q>& eta, int order = kE) {
  const int d = eta.size();
  const auto pool = random_mode_pool(rng, d, 1, 2);
  return {TetradField<Q>::perturbed(eta, random_real_field<Q>(rng, d, d, pool), order),
          LorentzConnection<Q>::perturbative(eta, random_antisymmetric_fields<Q>(rng, d, d, pool), order)};
}

GramForm<Fl> form_of(const FM& g) { return GramForm<Fl>::from_pair(g, eps_invert(g)); }

void expect_self_adjoint(const FM& a, const FM& form) {
  const auto w = difference_witness(adjoint(a, form_of(form)), a);
  EXPECT_FALSE(w.has_value()) << *w;
}

oracle::Grid<Q> to_grid(const FM& m) {
  oracle::Grid<Q> g = oracle::grid<Q>(m.size());
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) g[i][j] = m(i, j);
  return g;
}

EpsSeries<Q> eh_oracle(const MetricField<Q>& m) {
  return oracle::integrate(oracle::scalar_density(to_grid(m.g()), diag_entries(m.background()), m.order()));
}
EpsSeries<Q> palatini_oracle(const PalatiniData& p) {
  std::vector<oracle::Grid<Q>> l;
  for (const auto& c : p.lorentz.components()) l.push_back(to_grid(c));
  return oracle::integrate(
      oracle::palatini_density(to_grid(p.tetrad.theta()), l, diag_entries(p.tetrad.fiber_metric()), p.tetrad.order()));
}

}  // namespace

TEST(MetricField, ValidatesItsInput) {
  const auto eta = diag({-1, 1});
  EXPECT_THROW(MetricField<Q>::perturbed(diag({2, 1}), Matrix<F>(2), kE), std::invalid_argument);
  Matrix<F> asym(2);
  asym(0, 1) = F::constant(2, q(1));
  EXPECT_THROW(MetricField<Q>::perturbed(eta, asym, kE), std::invalid_argument);
  Matrix<F> complex(2);
  complex(0, 0) = F::plane_wave({1, 0});
  EXPECT_THROW(MetricField<Q>::perturbed(eta, complex, kE), std::invalid_argument);
  EXPECT_NO_THROW(MetricField<Q>::perturbed(eta, Matrix<F>(2), kE));
}

TEST(LeviCivita, FlatMetricHasNoChristoffels) {
  const auto m = MetricField<Q>::perturbed(diag({-1, 1}), Matrix<F>(2), kE);
  const auto gamma = levi_civita(m);
  for (const auto& c : gamma.data()) EXPECT_TRUE(c.is_zero());
}

TEST(LeviCivita, IsSymmetricAndMetric) {
  Rng rng(401);
  for (const auto& eta : {diag({-1, 1}), diag({1, 1}), diag({-1, 1, 1, 1})}) {
    const auto m = random_metric(rng, eta);
    const auto G = levi_civita(m);
    const int n = m.dim();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          EXPECT_EQ(G({a, b, c}), G({a, c, b}));
          // d_c g_{ab} - Gamma^s_{ca} g_{sb} - Gamma^s_{cb} g_{as}
          Fl defect = m.g()(a, b).derive(c);
          for (int s = 0; s < n; ++s) defect = defect - G({s, c, a}) * m.g()(s, b) - G({s, c, b}) * m.g()(a, s);
          EXPECT_TRUE(defect.is_zero()) << "a=" << a << " b=" << b << " c=" << c;
        }
    // the metric connection in bundle form
    BundleStructure<Fl> tm(n, form_of(m.g()), connection_matrices(G));
    EXPECT_TRUE(tm.is_compatible());
  }
}

TEST(LeviCivita, DegenerateBackgroundIsRejected) {
  Matrix<Fl> g(2);
  g(0, 0) = Fl(kE, {F::constant(2, q(1)), F::plane_wave({1, 0})});
  EXPECT_THROW(levi_civita(g, eps_invert(g)), std::domain_error);
}

TEST(RiemannRicci, FlatMetricIsFlat) {
  const MetricGeometry<Q> geo(MetricField<Q>::perturbed(diag({1, 1}), Matrix<F>(2), kE));
  for (const auto& r : geo.curvature.riemann.data()) EXPECT_TRUE(r.is_zero());
  EXPECT_TRUE(geo.curvature.scalar.is_zero());
}

TEST(RiemannRicci, SymmetriesHoldAsSeriesIdentities) {
  Rng rng(402);
  for (const auto& eta : {diag({-1, 1}), diag({-1, 1, 1, 1})}) {
    const MetricGeometry<Q> geo(random_metric(rng, eta, 1));
    const int n = geo.dim();
    const auto& R = geo.curvature.riemann;
    const auto low = lower_first(R, geo.metric.g());
    bool some_nonzero = false;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        EXPECT_EQ(geo.curvature.ricci({a, b}), geo.curvature.ricci({b, a}));
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            some_nonzero = some_nonzero || !R({a, b, c, d}).is_zero();
            EXPECT_TRUE((R({a, b, c, d}) + R({a, c, d, b}) + R({a, d, b, c})).is_zero()) << "first Bianchi";
            EXPECT_EQ(low({a, b, c, d}), low({c, d, a, b}));
            EXPECT_EQ(low({a, b, c, d}), -low({b, a, c, d}));
          }
      }
    EXPECT_TRUE(some_nonzero);
  }
}

TEST(RiemannRicci, MatchesTheBundleCurvatureOfTheLeviCivitaConnection) {
  Rng rng(403);
  const MetricGeometry<Q> geo(random_metric(rng, diag({-1, 1})));
  const auto re = bundle_curvature(geo.connection());
  const int n = geo.dim();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) EXPECT_EQ(geo.curvature.riemann({a, b, c, d}), re[static_cast<std::size_t>(c * n + d)](a, b));
}

TEST(VolumeFactor, FlatAndConformalCases) {
  const auto flat = MetricField<Q>::perturbed(diag({-1, 1}), Matrix<F>(2), kE);
  EXPECT_EQ(volume_factor(flat), Fl::from_scalar(q(1)).with_order(kE));

  // g = (1 + eps u) eta in dimension 2: |det g| = (1 + eps u)^2.
  const F u = F::cosine(std::vector<int>{1, 1}) * q(2, 3);
  for (const auto& eta : {diag({-1, 1}), diag({1, 1})}) {
    Matrix<F> p(2);
    p(0, 0) = u * eta(0, 0);
    p(1, 1) = u * eta(1, 1);
    const auto v = volume_factor(MetricField<Q>::perturbed(eta, p, kE));
    EXPECT_EQ(v, Fl(kE, {F::constant(2, q(1)), u}));
  }
}

TEST(VolumeFactor, IsRealAndMatchesTheOracle) {
  Rng rng(404);
  for (const auto& eta : {diag({-1, 1}), diag({-1, 1, 1, 1})}) {
    const auto m = random_metric(rng, eta);
    const auto v = volume_factor(m);
    EXPECT_EQ(v.conj(), v);
    EXPECT_EQ(v, oracle::volume(to_grid(m.g()), diag_entries(eta), kE));
  }
}

TEST(EinsteinHilbertEndos, FlatMetricGivesZeroCurvatureAndUnitVolume) {
  const auto e = build_eh_endos(MetricGeometry<Q>(MetricField<Q>::perturbed(diag({-1, 1}), Matrix<F>(2), kE)));
  EXPECT_TRUE(e.ricci.is_zero());
  EXPECT_TRUE(e.riemann.is_zero());
  EXPECT_EQ(e.volume, FM::identity(2));
  EXPECT_EQ(e.volume2, FM::identity(4));
}

TEST(EinsteinHilbertEndos, AreSelfAdjoint) {
  Rng rng(405);
  for (const auto& eta : {diag({-1, 1}), diag({1, 1})}) {
    const auto m = random_metric(rng, eta);
    const auto e = build_eh_endos(MetricGeometry<Q>(m));
    ASSERT_FALSE(e.ricci.is_zero());
    expect_self_adjoint(e.ricci, eh1_form(m));
    expect_self_adjoint(e.ricci_v, eh1_form(m));
    expect_self_adjoint(e.volume, eh1_form(m));
    expect_self_adjoint(e.riemann, eh2_form(m));
    expect_self_adjoint(e.riemann_v, eh2_form(m));
    expect_self_adjoint(e.volume2, eh2_form(m));
  }
}

TEST(EinsteinHilbertEndos, TracesGiveTheScalarCurvature) {
  Rng rng(406);
  const MetricGeometry<Q> geo(random_metric(rng, diag({-1, 1})));
  const auto e = build_eh_endos(geo);
  EXPECT_EQ(e.ricci.trace(), geo.curvature.scalar);
  EXPECT_EQ(e.riemann.trace(), geo.curvature.scalar);
  EXPECT_EQ(e.ricci_v.trace(), geo.volume * geo.curvature.scalar);
}

TEST(EinsteinHilbertEndos, TensorConnectionCurvatureSplits) {
  Rng rng(407);
  const MetricGeometry<Q> geo(random_metric(rng, diag({-1, 1})));
  const auto gamma = geo.connection();
  const auto r = bundle_curvature(gamma);
  const auto r2 = bundle_curvature(tensor_connection(gamma, gamma, kE));
  const FM one = FM::identity(2);
  for (std::size_t k = 0; k < r.size(); ++k) EXPECT_EQ(r2[k], kron(r[k], one) + kron(one, r[k]));
}

TEST(LorentzConnection, RejectsIncompatibleGenerators) {
  const auto eta = diag({-1, 1});
  std::vector<Matrix<F>> sym(2, Matrix<F>(2));
  sym[0](0, 1) = sym[0](1, 0) = F::cosine(std::vector<int>{1, 0});
  EXPECT_THROW(LorentzConnection<Q>::perturbative(eta, sym, kE), std::invalid_argument);
  std::vector<FM> raw(2, FM(2));
  raw[1](0, 1) = raw[1](1, 0) = Fl(kE, {F(), F::constant(2, q(1))});
  EXPECT_NO_THROW(LorentzConnection<Q>(eta, raw));  // boost generator: eta-antisymmetric
  raw[1](1, 0) = -raw[1](0, 1);
  EXPECT_THROW(LorentzConnection<Q>(eta, raw), std::invalid_argument);
}

TEST(PalatiniEndos, TrivialTetradGivesKroneckerT) {
  const auto eta = diag({-1, 1});
  const auto th = TetradField<Q>::perturbed(eta, Matrix<F>(2), kE);
  const auto lz = LorentzConnection<Q>::perturbative(eta, std::vector<Matrix<F>>(2, Matrix<F>(2)), kE);
  const auto e = build_palatini_endos(th, lz);
  EXPECT_TRUE(e.curvature.is_zero());
  FM expected(4);
  for (int A = 0; A < 2; ++A)
    for (int a = 0; a < 2; ++a)
      for (int B = 0; B < 2; ++B)
        for (int b = 0; b < 2; ++b)
          if (A == a && B == b) expected(A * 2 + a, B * 2 + b) = Fl::from_scalar(eta(A, A) * eta(B, B));
  EXPECT_EQ(e.tetrad, expected);
}

TEST(PalatiniEndos, AreSelfAdjointAndTheInducedConnectionIsMetric) {
  Rng rng(408);
  for (const auto& eta : {diag({-1, 1}), diag({-1, 1, 1, 1})}) {
    const auto p = random_palatini(rng, eta);
    const auto e = build_palatini_endos(p.tetrad, p.lorentz);
    ASSERT_FALSE(e.curvature.is_zero());
    expect_self_adjoint(e.tetrad, palatini_form(p.tetrad));
    expect_self_adjoint(e.curvature, palatini_form(p.tetrad));
    expect_self_adjoint(e.curvature_v, palatini_form(p.tetrad));

    const int n = eta.size();
    const auto nabla = induced_tangent_connection(p.tetrad, p.lorentz);
    EXPECT_TRUE(BundleStructure<Fl>(n, form_of(p.tetrad.metric().g()), nabla).is_compatible());
    const auto conn = tensor_connection(p.lorentz.components(), nabla, kE);
    EXPECT_TRUE(BundleStructure<Fl>(n, form_of(palatini_form(p.tetrad)), conn).is_compatible());
    // generically torsionful: Gamma^a_{ib} != Gamma^a_{bi}
    bool torsion = false;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) torsion = torsion || !(nabla[i](a, b) == nabla[b](a, i));
    EXPECT_TRUE(torsion);
  }
}

TEST(NormalizedFrame, MakesTheFormConstant) {
  Rng rng(409);
  const auto m = random_metric(rng, diag({-1, 1}));
  for (const FM& form : {eh1_form(m), eh2_form(m)}) {
    const NormalizedFrame<Q> fr(form);
    EXPECT_EQ(fr.e().conj_transpose() * form * fr.e(), lift_matrix<Fl>(fr.gram0()));
    EXPECT_EQ(fr.e() * fr.e_inv(), FM::identity(form.size()));
  }
  const MetricGeometry<Q> geo(m);
  const NormalizedFrame<Q> fr(eh1_form(m));
  BundleStructure<Fl> b(2, GramForm<Fl>::from_constant(fr.gram0()), fr.to_frame(geo.connection()));
  EXPECT_TRUE(b.is_compatible());
}

TEST(NormalizedFrame, RejectsNonConstantLeadingForm) {
  FM g = FM::identity(2);
  g(0, 0) = Fl(kE, {F::constant(2, q(1)) + F::cosine(std::vector<int>{1, 0}) * q(1, 2)});
  EXPECT_THROW(NormalizedFrame<Q>{g}, std::domain_error);
}

TEST(Action, FlatMetricGivesZero) {
  GravityInputs<Q> in;
  in.metric = MetricField<Q>::perturbed(diag({-1, 1}), Matrix<F>(2), kE);
  Rng rng(410);
  in.background = random_symplectic_connection<Q>(rng, 2, 1, 1);
  for (ActionKind k : {ActionKind::EH1A, ActionKind::EH1B, ActionKind::EH2A, ActionKind::EH2B}) {
    const auto s = action(k, in);
    for (int p = 0; p <= s.max_h_power(); ++p)
      for (int e = 0; e <= kE; ++e) EXPECT_TRUE(s.at(p, e).is_zero()) << to_string(k);
  }
}

TEST(Action, AllKindsAreRealOnCurvedBackgrounds) {
  Rng rng(411);
  GravityInputs<Q> in;
  const auto eta = diag({-1, 1});
  in.metric = random_metric(rng, eta);
  auto p = random_palatini(rng, eta);
  in.tetrad = p.tetrad;
  in.lorentz = p.lorentz;
  in.background = random_symplectic_connection<Q>(rng, 2, 1, 1);
  in.order = 4;
  int nonzero = 0;
  for (ActionKind k : kAllActions) {
    const auto s = action(k, in);
    EXPECT_EQ(s.max_h_power(), 2);
    const auto rep = reality_report(s);
    EXPECT_TRUE(rep.pass()) << rep.witness.value_or("");
    for (const auto& r : rep.rows) nonzero += !r.re.is_zero();
  }
  EXPECT_GT(nonzero, 0);
}

TEST(Action, ClassicalLimitOnTheTwoTorusIsGaussBonnet) {
  Rng rng(412);
  GravityInputs<Q> in;
  in.metric = random_metric(rng, diag({-1, 1}));
  in.background = random_symplectic_connection<Q>(rng, 2, 1, 1);
  const auto oracle = eh_oracle(*in.metric);
  EXPECT_TRUE(oracle.is_zero());
  for (ActionKind k : {ActionKind::EH1A, ActionKind::EH1B}) {
    const auto rep = reality_report(action(k, in), oracle);
    EXPECT_TRUE(rep.classical_checked);
    EXPECT_TRUE(rep.pass()) << rep.witness.value_or("");
  }
}

TEST(Action, ClassicalLimitOnTheFourTorus) {
  Rng rng(413);
  GravityInputs<Q> in;
  const auto eta = diag({-1, 1, 1, 1});
  in.metric = random_metric(rng, eta, 1);
  in.order = 2;
  const auto oracle = eh_oracle(*in.metric);
  EXPECT_FALSE(oracle.is_zero());
  EXPECT_EQ(classical_action(ActionKind::EH1A, in), oracle);
  const auto rep = reality_report(action(ActionKind::EH1B, in), oracle);
  EXPECT_TRUE(rep.pass()) << rep.witness.value_or("");
}

TEST(Action, PalatiniClassicalLimit) {
  Rng rng(414);
  for (const auto& eta : {diag({-1, 1}), diag({-1, 1, 1, 1})}) {
    const auto p = random_palatini(rng, eta);
    GravityInputs<Q> in;
    in.tetrad = p.tetrad;
    in.lorentz = p.lorentz;
    in.order = 2;
    const auto oracle = palatini_oracle(p);
    EXPECT_EQ(classical_action(ActionKind::P, in), oracle);
    if (eta.size() == 4) {
      EXPECT_FALSE(oracle.is_zero());
      const auto rep = reality_report(action(ActionKind::P, in), oracle);
      EXPECT_TRUE(rep.pass()) << rep.witness.value_or("");
    }
  }
}

TEST(RealityReport, FlagsAnImaginaryCoefficient) {
  ActionSeries<Q> s{ActionKind::EH1B, 2, 1, {{q(1), q(0)}, {q(0), q(2, 3)}}};
  EXPECT_TRUE(reality_report(s).pass());
  s.coefficients[1][0] = q(1, 5) * I;
  const auto rep = reality_report(s);
  EXPECT_FALSE(rep.pass());
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_NE(rep.witness->find("h^1 eps^0"), std::string::npos) << *rep.witness;
  const auto wrong = reality_report(ActionSeries<Q>{ActionKind::EH1A, 2, 1, {{q(1), q(0)}}}, EpsSeries<Q>(1, {q(2)}));
  EXPECT_FALSE(wrong.classical_match);
}
