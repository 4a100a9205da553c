#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "birkhoff/errors.hpp"
#include "birkhoff/primitive.hpp"

using namespace birkhoff;

namespace {

constexpr double kPi = std::numbers::pi;

const System& doubling() {
  static const System s(doubling_map());
  return s;
}
const System& swap4() {
  static const System s(swap4_map());
  return s;
}

PiecewiseFunction cos1() { return PiecewiseFunction::uniform(0.0, 1.0, TermSum::cosine(1.0, 1.0)); }
PiecewiseFunction sawtooth() { return PiecewiseFunction::uniform(0.0, 1.0, TermSum::polynomial({-0.5, 1.0})); }

// Closed forms on the doubling map, summing int_0^x phi(2^k y) dy over k.
double oracle_cos(double x) {
  double s = 0.0;
  for (int k = 0; k < 60; ++k) s += std::sin(2 * kPi * std::ldexp(x, k)) / (2 * kPi * std::ldexp(1.0, k));
  return s;
}
double oracle_sawtooth(double x) {
  double s = 0.0;
  for (int k = 0; k < 60; ++k) {
    const double t = std::ldexp(x, k) - std::floor(std::ldexp(x, k));
    s += std::ldexp(0.5 * (t * t - t), -k);
  }
  return s;
}

}  // namespace

TEST(Primitive, CosineMatchesClosedForm) {
  EXPECT_NEAR(primitive(doubling(), cos1(), 0.25).value.real(), 1.0 / (2 * kPi), 1e-8);
  for (double x : {0.1, 0.3, 0.5, 0.77, 1.0})
    EXPECT_NEAR(primitive(doubling(), cos1(), x, 1e-10).value.real(), oracle_cos(x), 1e-8) << x;
}

TEST(Primitive, SawtoothMatchesTakagiSeries) {
  for (double x : {0.125, 0.2, 1.0 / 3.0, 0.5, 0.9})
    EXPECT_NEAR(primitive(doubling(), sawtooth(), x, 1e-10).value.real(), oracle_sawtooth(x), 1e-8) << x;
}

TEST(Primitive, UlamRouteAgreesOnCosine) {
  EXPECT_NEAR(primitive(doubling(), cos1(), 0.25, 1e-8, Route::ulam).value.real(), 1.0 / (2 * kPi), 1e-4);
}

TEST(Primitive, RoutesAgreeOnAGrid) {
  std::vector<double> xs;
  for (int i = 0; i <= 32; ++i) xs.push_back(i / 32.0);
  const RouteComparison rc = primitive_both_routes(doubling(), cos1(), xs);
  EXPECT_LT(rc.max_discrepancy, 1e-4);
}

TEST(Primitive, VanishesAtTheEndpoints) {
  EXPECT_NEAR(std::abs(primitive(doubling(), cos1(), 0.0).value), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(primitive(doubling(), cos1(), 1.0).value), 0.0, 1e-8);
}

TEST(Primitive, ZeroObservableGivesZero) {
  const PiecewiseFunction zero = PiecewiseFunction::zero(0.0, 1.0);
  EXPECT_EQ(primitive(doubling(), zero, 0.4).value, cplx(0.0));
}

TEST(Primitive, PartialSumsConverge) {
  const double x = 0.3;
  const double target = oracle_cos(x);
  double prev = INFINITY;
  for (int n : {2, 6, 12, 24}) {
    const double err = std::abs(primitive_partial(doubling(), cos1(), 1, n, x).real() - target);
    EXPECT_LE(err, prev + 1e-15);
    prev = err;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Primitive, RejectsObservablesWithMean) {
  const PiecewiseFunction one = PiecewiseFunction::constant(0.0, 1.0, 1.0);
  EXPECT_THROW(primitive(doubling(), one, 0.5), PreconditionError);
  EXPECT_THROW(check_orthogonality(doubling(), one, 1e-10), PreconditionError);
}

TEST(TruncationRule, WithinOneBlockOfTheLogRatio) {
  const PiecewiseFunction g = PiecewiseFunction::indicator(0.0, 1.0, 0.0, 0.3);
  const TruncationRule r = truncation_rule(swap4(), g, 2);
  EXPECT_EQ(r.i0 % 2, 0);
  EXPECT_GE(r.i0, r.formula - 1e-12);
  EXPECT_LT(r.i0, r.formula + 2.0);
}

TEST(Cesaro, LimitIsPrimitivePlusCorrection) {
  for (const System* s : {&doubling(), &swap4()}) {
    const CesaroPrimitive c = cesaro_primitive(*s, cos1(), 0.3);
    EXPECT_LT(c.residual, 1e-6);
  }
  // Mixing maps carry no correction.
  EXPECT_NEAR(std::abs(cesaro_correction(doubling(), cos1(), 0.3)), 0.0, 1e-15);
}

TEST(Cesaro, PeriodicMapNeedsTheCorrection) {
  // On swap4 an observable odd under the half exchange sees lambda = -1.
  const PiecewiseFunction phi =
      PiecewiseFunction::indicator(0.0, 1.0, 0.0, 0.5) - PiecewiseFunction::indicator(0.0, 1.0, 0.5, 1.0);
  EXPECT_GT(std::abs(cesaro_correction(swap4(), phi, 0.25)), 1e-3);
  EXPECT_LT(cesaro_primitive(swap4(), phi, 0.25).residual, 1e-6);
}

TEST(Alpha, DerivativeOfCoboundaryPrimitive) {
  // phi = g o f - g with g = sin 2 pi x: alpha(x) = int_0^x g.
  const PiecewiseFunction phi = PiecewiseFunction::uniform(0.0, 1.0, TermSum::sine(1.0, 2.0) - TermSum::sine(1.0, 1.0));
  for (double x : {0.2, 0.45}) {
    const AlphaEvaluation a = alpha_primitive(doubling(), phi, x);
    EXPECT_NEAR(a.value.real(), (1 - std::cos(2 * kPi * x)) / (2 * kPi), 1e-6) << x;
  }
}

TEST(PairWithBv, SeriesMatchesStieltjesSum) {
  const PiecewiseFunction gamma = PiecewiseFunction::uniform(0.0, 1.0, TermSum::polynomial({0.0, 1.0}));
  const Pairing p = pair_with_bv(doubling(), cos1(), gamma, 1e-10, 10);
  EXPECT_LT(p.discrepancy, 1e-4);
  // Oracle: the pairing is sum_k int_0^1 x cos(2 pi 2^k x) dx and every term vanishes.
  EXPECT_NEAR(std::abs(p.value), 0.0, 1e-8);
}
