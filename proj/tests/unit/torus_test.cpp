#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "birkhoff/errors.hpp"
#include "birkhoff/torus.hpp"

using namespace birkhoff;
using namespace birkhoff::torus;

namespace {

constexpr double kPi = std::numbers::pi;

TrigPolynomial r_cat() { return trig_cos({1, 1}); }

}  // namespace

TEST(IntMatrix, DeterminantAndInverse) {
  const IntMatrix m = IntMatrix::cat_map();
  EXPECT_EQ(m.determinant(), 1);
  const IntMatrix inv = m.inverse();
  EXPECT_EQ(inv.a, (std::vector<long long>{1, -1, -1, 2}));
  const IntMatrix m3 = IntMatrix::from_rows({{2, 1, 0}, {1, 1, 1}, {0, 1, 3}});
  EXPECT_EQ(m3.determinant(), 2 * (3 - 1) - 1 * (3 - 0));
  EXPECT_THROW(IntMatrix::circle(2).inverse(), PreconditionError);
}

TEST(IntMatrix, ApplyDetectsOverflow) {
  const IntMatrix m = IntMatrix::cat_map();
  EXPECT_THROW(m.apply({1LL << 62, 1LL << 62}), NumericalError);
}

TEST(Hyperbolic, CatMapEigendata) {
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  EXPECT_NEAR(h.lambda_u, (3 + std::sqrt(5.0)) / 2, 1e-14);
  EXPECT_NEAR(h.lambda_s * h.lambda_u, 1.0, 1e-14);
  for (auto [v, l] : {std::pair{h.v_s, h.lambda_s}, std::pair{h.v_u, h.lambda_u}}) {
    EXPECT_NEAR(2 * v[0] + v[1], l * v[0], 1e-14);
    EXPECT_NEAR(v[0] + v[1], l * v[1], 1e-14);
  }
  const auto c = h.split({0.3, -0.8});
  EXPECT_NEAR(c[0] * h.v_s[0] + c[1] * h.v_u[0], 0.3, 1e-14);
  EXPECT_NEAR(c[0] * h.v_s[1] + c[1] * h.v_u[1], -0.8, 1e-14);
}

TEST(Hyperbolic, RejectsShearAndNonUnimodular) {
  EXPECT_THROW(hyperbolic_split(IntMatrix::from_rows({{1, 1}, {0, 1}})), PreconditionError);
  EXPECT_THROW(hyperbolic_split(IntMatrix::from_rows({{2, 0}, {0, 2}})), PreconditionError);
}

TEST(Annulus, CatMapCountsAtMostTwo) {
  const IntMatrix m = IntMatrix::cat_map();
  int worst = 0;
  for (const IntVec& p : {IntVec{1, 0}, IntVec{1, 1}, IntVec{2, 3}, IntVec{5, -7}})
    for (int l = 0; l <= 40; ++l) worst = std::max(worst, annulus_crossings(m, p, l, -30, 30));
  EXPECT_EQ(worst, 2);
}

TEST(Annulus, BruteForceAgreesOnSmallRange) {
  // Independent count with plain integers for |j| <= 10.
  const IntMatrix m = IntMatrix::cat_map(), inv = m.inverse();
  const IntVec p{2, 3};
  for (int l = 0; l <= 12; ++l) {
    int count = 0;
    IntVec v = p;
    for (int j = 0; j <= 10; ++j, v = m.apply(v)) {
      const long long n2 = v[0] * v[0] + v[1] * v[1];
      count += n2 >= (1LL << (2 * l)) && n2 <= (1LL << (2 * l + 2));
    }
    v = inv.apply(p);
    for (int j = -1; j >= -10; --j, v = inv.apply(v)) {
      const long long n2 = v[0] * v[0] + v[1] * v[1];
      count += n2 >= (1LL << (2 * l)) && n2 <= (1LL << (2 * l + 2));
    }
    EXPECT_EQ(annulus_crossings(m, p, l, -10, 10), count) << l;
  }
}

TEST(TrigPolynomial, EvaluateAndPair) {
  const TrigPolynomial c = trig_cos({1, 1}, 2.0), s = trig_sin({0, 1});
  EXPECT_NEAR(evaluate(c, {0.1, 0.2}).real(), 2 * std::cos(2 * kPi * 0.3), 1e-14);
  EXPECT_NEAR(evaluate(s, {0.1, 0.2}).real(), std::sin(2 * kPi * 0.2), 1e-14);
  EXPECT_NEAR(pairing(c, c).real(), 2.0, 1e-15);  // int (2 cos)^2 = 2
  EXPECT_NEAR(std::abs(pairing(c, s)), 0.0, 1e-15);
  EXPECT_NEAR(coefficient_sum(c), 2.0, 1e-15);
}

TEST(BirkhoffFourier, AlphaStreamFrequencies) {
  const SparseFourierDistribution u = birkhoff_fourier(IntMatrix::cat_map(), r_cat(), Direction::alpha, 3);
  // (M^T)^j (1,1) = (1,1), (3,2), (8,5), (21,13), each with -1/2 and its mirror.
  EXPECT_EQ(u.terms.size(), 8u);
  for (const FourierTerm& t : u.terms) EXPECT_NEAR(std::abs(t.c - cplx(-0.5)), 0.0, 1e-15);
  EXPECT_NEAR(u.coefficient_sum, 1.0, 1e-15);
}

TEST(BirkhoffFourier, RejectsNonzeroMean) {
  TrigPolynomial r = r_cat();
  r.push_back({{0, 0}, 0.1});
  EXPECT_THROW(birkhoff_fourier(IntMatrix::cat_map(), r, Direction::alpha, 5), PreconditionError);
}

TEST(BirkhoffFourier, OmegaNeedsInvertibleMap) {
  EXPECT_THROW(birkhoff_fourier(IntMatrix::circle(2), trig_cos({1}), Direction::omega, 5), PreconditionError);
}

TEST(Bump, PartitionOfUnity) {
  for (double x : {0.0, 0.7, 1.3, 5.0, 17.0, 300.0}) {
    double s = 0.0;
    for (int l = 0; l <= 12; ++l) s += dyadic_bump(l, x);
    EXPECT_NEAR(s, 1.0, 1e-14) << x;
  }
  EXPECT_EQ(dyadic_bump(3, 1.0), 0.0);
}

TEST(Besov, CatMapBlocksAreBounded) {
  const IntMatrix m = IntMatrix::cat_map();
  const int j = required_j_max(m, r_cat(), Direction::alpha, 16);
  const SparseFourierDistribution u = birkhoff_fourier(m, r_cat(), Direction::alpha, j);
  const DyadicBlockProfile p = besov_profile(u, 16);
  for (double s : p.sups) EXPECT_LE(s, 2.0 * u.coefficient_sum + 1e-12);
  EXPECT_LE(p.growth_exponent, 0.05);
  EXPECT_EQ(p.classification, "Lambda0");
}

TEST(Besov, RefusesBlocksBeyondCoverage) {
  const SparseFourierDistribution u = birkhoff_fourier(IntMatrix::cat_map(), r_cat(), Direction::alpha, 2);
  EXPECT_THROW(besov_profile(u, 20), PreconditionError);
}

TEST(Besov, ReducedGridMatchesDirectSampling) {
  // A block sup evaluated in reduced coordinates equals a fine x-grid sup.
  const SparseFourierDistribution u = birkhoff_fourier(IntMatrix::cat_map(), r_cat(), Direction::alpha, 4);
  const DyadicBlockProfile p = besov_profile(u, 5);
  double direct = 0.0;
  const int n = 512;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cplx s = 0.0;
      for (const FourierTerm& t : u.terms) {
        const double w = dyadic_bump(4, 2 * kPi * std::hypot(double(t.k[0]), double(t.k[1])));
        s += w * t.c * std::polar(1.0, 2 * kPi * (t.k[0] * a + t.k[1] * b) / double(n));
      }
      direct = std::max(direct, std::abs(s));
    }
  EXPECT_NEAR(p.sups[4], direct, 5e-3);
}

TEST(Derivative, StableDerivativeMatchesFiniteDifference) {
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  const std::array<double, 2> x{0.3, 0.17};
  auto u = [&](long double a, long double b) {
    long double s = 0;
    for (int j = 0; j < 15; ++j) {
      s -= cosl(2 * std::numbers::pi_v<long double> * (a + b));
      const long double na = 2 * a + b, nb = a + b;
      a = na - floorl(na);
      b = nb - floorl(nb);
    }
    return s;
  };
  const long double e = 1e-5;
  const double fd = static_cast<double>(
      (u(x[0] + e * h.v_s[0], x[1] + e * h.v_s[1]) - u(x[0] - e * h.v_s[0], x[1] - e * h.v_s[1])) / (2 * e));
  EXPECT_NEAR(directional_derivative(h, r_cat(), Direction::alpha, 's', x), fd, 1e-5);
}

TEST(Derivative, RefusesDivergentPairings) {
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  EXPECT_THROW(directional_derivative(h, r_cat(), Direction::omega, 's', {0.1, 0.2}), PreconditionError);
  EXPECT_THROW(directional_derivative(h, r_cat(), Direction::alpha, 'u', {0.1, 0.2}), PreconditionError);
}

TEST(Deformation, ConstantFieldSolvesLinearSystem) {
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  const TrigPolynomial one{{{0, 0}, 1.0}};
  // alpha = (I - M)^{-1} W: (0, -1) for W = (1, 0), (-1, 1) for W = (0, 1).
  const auto a = infinitesimal_deformation(h, {one, {}}, {0.4, 0.9});
  EXPECT_NEAR(a[0], 0.0, 1e-10);
  EXPECT_NEAR(a[1], -1.0, 1e-10);
  const auto b = infinitesimal_deformation(h, {{}, one}, {0.4, 0.9});
  EXPECT_NEAR(b[0], -1.0, 1e-10);
  EXPECT_NEAR(b[1], 1.0, 1e-10);
}

TEST(Deformation, SolvesTheTwistedEquation) {
  // W = alpha o F - M alpha at a sample point.
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  const VectorField w{trig_sin({0, 1}), trig_cos({1, 0}, 0.5)};
  const std::array<double, 2> x{0.21, 0.64};
  std::array<double, 2> fx{2 * x[0] + x[1], x[0] + x[1]};
  fx = {fx[0] - std::floor(fx[0]), fx[1] - std::floor(fx[1])};
  const auto ax = infinitesimal_deformation(h, w, x, 1e-14);
  const auto afx = infinitesimal_deformation(h, w, fx, 1e-14);
  const double w1 = std::sin(2 * kPi * x[1]), w2 = 0.5 * std::cos(2 * kPi * x[0]);
  EXPECT_NEAR(afx[0] - (2 * ax[0] + ax[1]), w1, 1e-10);
  EXPECT_NEAR(afx[1] - (ax[0] + ax[1]), w2, 1e-10);
}

TEST(Deformation, SecondDifferencesStayBounded) {
  const HyperbolicMatrix h = hyperbolic_split(IntMatrix::cat_map());
  std::vector<double> hs;
  for (int k = 4; k <= 20; k += 2) hs.push_back(std::ldexp(1.0, -k));
  const auto d2 = deformation_second_differences(h, {trig_sin({0, 1}), {}}, {0.3, 0.7}, {1.0, 0.0}, hs);
  for (double v : d2) EXPECT_LT(v, 20.0);
}

TEST(Advect, ChargeAndObservablesAreExact) {
  const IntMatrix m = IntMatrix::cat_map();
  const AdvectResult one = advect(m, r_cat(), {}, {{{0, 0}, 1.0}}, 50);
  for (cplx q : one.q) EXPECT_EQ(q, one.q[0]);
  const AdvectResult c = advect(m, r_cat(), {}, trig_cos({0, 1}), 20);
  EXPECT_EQ(c.q[0], cplx(0.0));
  for (std::size_t j = 1; j < c.q.size(); ++j) EXPECT_EQ(c.q[j], cplx(0.5));
  const AdvectResult self = advect(m, r_cat(), {}, r_cat(), 20);
  ASSERT_TRUE(self.u_omega.has_value());
  EXPECT_EQ(*self.u_omega, cplx(0.0));
}

TEST(Advect, RejectsNonzeroMeanSource) {
  EXPECT_THROW(advect(IntMatrix::cat_map(), {{{0, 0}, 1.0}}, {}, r_cat(), 5), PreconditionError);
}

TEST(DecayFit, SuperExponentialDecayIsCapped) {
  const DecayFit f = correlation_decay_fit(IntMatrix::cat_map(), r_cat(), r_cat(), 20);
  EXPECT_NEAR(f.correlations[0].real(), 0.5, 1e-15);
  for (std::size_t j = 1; j < f.correlations.size(); ++j) EXPECT_EQ(f.correlations[j], cplx(0.0));
  EXPECT_EQ(f.c2, 30.0);
}
