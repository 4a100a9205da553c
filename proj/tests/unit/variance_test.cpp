#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "birkhoff/errors.hpp"
#include "birkhoff/variance.hpp"

using namespace birkhoff;

namespace {

constexpr double kPi = std::numbers::pi;

const System& doubling() {
  static const System s(doubling_map());
  return s;
}
const System& two_component() {
  static const System s(two_component_map());
  return s;
}
const System& swap4() {
  static const System s(swap4_map());
  return s;
}

PiecewiseFunction trig(const TermSum& t) { return PiecewiseFunction::uniform(0.0, 1.0, t); }

}  // namespace

TEST(GreenKubo, CosineOnDoubling) {
  EXPECT_NEAR(sigma2_m(doubling(), trig(TermSum::cosine(1.0, 1.0))), 0.5, 1e-6);
}

TEST(GreenKubo, CorrelatedPairOnDoubling) {
  // phi = cos 2 pi x + a cos 4 pi x: C_0 = (1 + a^2)/2, C_1 = a/2, C_k = 0 for k >= 2.
  for (double a : {0.5, -1.0, 2.0}) {
    const PiecewiseFunction phi = trig(TermSum::cosine(1.0, 1.0) + TermSum::cosine(a, 2.0));
    EXPECT_NEAR(sigma2_m(doubling(), phi), (1 + a * a) / 2 + a, 1e-8) << a;
  }
}

TEST(GreenKubo, CoboundaryHasZeroVariance) {
  const PiecewiseFunction phi = trig(TermSum::sine(1.0, 2.0) - TermSum::sine(1.0, 1.0));
  EXPECT_LT(std::abs(sigma2_m(doubling(), phi)), 1e-10);
}

TEST(GreenKubo, LedgerAddsUp) {
  GreenKuboLedger ledger;
  const PiecewiseFunction phi = trig(TermSum::cosine(1.0, 1.0));
  const PiecewiseFunction rho = PiecewiseFunction::constant(0.0, 1.0, 1.0);
  const cplx s = green_kubo_pair(doubling(), phi, phi, rho, 1e-10, &ledger);
  EXPECT_NEAR(std::abs(s - (ledger.ktail + ledger.projector - ledger.diagonal)), 0.0, 1e-12);
  EXPECT_NEAR(ledger.diagonal.real(), 0.5, 1e-14);
}

TEST(SigmaForm, PolarizationMatchesCorrelationSum) {
  // sigma(cos 4 pi x, cos 2 pi x) = int cos 4 pi x cos(2 pi 2 x) dx = 1/2.
  const cplx s = sigma_m(doubling(), trig(TermSum::cosine(1.0, 2.0)), trig(TermSum::cosine(1.0, 1.0)));
  EXPECT_NEAR(s.real(), 0.5, 1e-8);
  EXPECT_NEAR(s.imag(), 0.0, 1e-8);
}

TEST(Components, IdentityOnTwoComponentMap) {
  // cos 4 pi x on each half is a doubling cosine; amplitudes 1 and 2.
  const PiecewiseFunction left = PiecewiseFunction::indicator(0.0, 1.0, 0.0, 0.5);
  const PiecewiseFunction right = PiecewiseFunction::indicator(0.0, 1.0, 0.5, 1.0);
  const PiecewiseFunction c = trig(TermSum::cosine(1.0, 2.0));
  const PiecewiseFunction phi = left * c + right * c * cplx(2.0);
  const VarianceReport r = variance_report(two_component(), phi);
  ASSERT_EQ(r.components.size(), 2u);
  double lo = std::min(r.components[0].sigma2, r.components[1].sigma2);
  double hi = std::max(r.components[0].sigma2, r.components[1].sigma2);
  EXPECT_NEAR(lo, 0.5, 1e-6);
  EXPECT_NEAR(hi, 2.0, 1e-6);
  EXPECT_NEAR(r.sigma2_m, 1.25, 1e-6);
  EXPECT_LT(r.identity_residual, 1e-8);
}

TEST(Components, RequireCenteringPerComponent) {
  // Centered overall but not on each half.
  const PiecewiseFunction phi =
      PiecewiseFunction::indicator(0.0, 1.0, 0.0, 0.5) - PiecewiseFunction::indicator(0.0, 1.0, 0.5, 1.0);
  EXPECT_THROW(sigma2_component(two_component(), phi, 0), PreconditionError);
}

TEST(Theta, InvariantUnderComposition) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  const PiecewiseFunction phi = trig(TermSum::cosine(1.0, 1.0));
  for (int trial = 0; trial < 5; ++trial) {
    TermSum t;
    for (int q = 1; q <= 3; ++q) t += TermSum::cosine(v(rng), q) + TermSum::sine(v(rng), q);
    const PiecewiseFunction g = trig(t);
    const PiecewiseFunction gf = compose_with_map(g, doubling_map());
    EXPECT_LT(std::abs(theta_functional(doubling(), phi, gf) - theta_functional(doubling(), phi, g)), 1e-6);
  }
}

TEST(Theta, PeriodicMapInvariance) {
  const PiecewiseFunction phi = trig(TermSum::cosine(1.0, 1.0));
  const PiecewiseFunction g = trig(TermSum::sine(0.3, 1.0) + TermSum::cosine(0.7, 2.0));
  const PiecewiseFunction gf = compose_with_map(g, swap4_map());
  EXPECT_LT(std::abs(theta_functional(swap4(), phi, gf) - theta_functional(swap4(), phi, g)), 1e-6);
}

TEST(MonteCarlo, UnbiasedForUncorrelatedCosine) {
  MonteCarloOptions o;
  o.points = 20000;
  o.horizon = 200;
  o.seed = 99;
  const MonteCarloEstimate e = monte_carlo_sigma2(doubling_map(), trig(TermSum::cosine(1.0, 1.0)), o);
  EXPECT_NEAR(e.estimate, 0.5, 5 * e.standard_error + 1e-3);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
  MonteCarloOptions o;
  o.points = 2000;
  o.horizon = 50;
  o.threads = 1;
  const PiecewiseFunction phi = trig(TermSum::cosine(1.0, 1.0));
  const double a = monte_carlo_sigma2(doubling_map(), phi, o).estimate;
  o.threads = 3;
  EXPECT_EQ(a, monte_carlo_sigma2(doubling_map(), phi, o).estimate);
}

TEST(Coboundary, RecoversTransferFunction) {
  const PiecewiseFunction phi = trig(TermSum::sine(1.0, 2.0) - TermSum::sine(1.0, 1.0));
  const CoboundaryResult r = coboundary_solve(doubling(), phi);
  ASSERT_TRUE(r.coboundary);
  // g is defined up to a constant; compare after removing the means.
  double mean_g = 0.0, mean_ref = 0.0;
  for (std::size_t i = 0; i < r.xs.size(); ++i) {
    mean_g += r.g[i];
    mean_ref += std::sin(2 * kPi * r.xs[i]);
  }
  mean_g /= r.xs.size();
  mean_ref /= r.xs.size();
  for (std::size_t i = 0; i < r.xs.size(); ++i)
    EXPECT_NEAR(r.g[i] - mean_g, std::sin(2 * kPi * r.xs[i]) - mean_ref, 1e-4);
}

TEST(Coboundary, CosineIsNotACoboundary) {
  const CoboundaryResult r = coboundary_solve(doubling(), trig(TermSum::cosine(1.0, 1.0)));
  EXPECT_FALSE(r.coboundary);
  EXPECT_NEAR(r.sigma2, 0.5, 1e-6);
}

TEST(Obstructions, SawtoothFixedPointsAreFlagged) {
  const PiecewiseFunction phi = trig(TermSum::polynomial({-0.5, 1.0}));
  const auto recs = obstruction_scan(doubling(), phi, 2);
  bool saw_zero = false, saw_one = false, saw_third = false;
  for (const ObstructionRecord& r : recs) {
    if (r.orbit.minimal_period == 1 && r.orbit.point.x < 0.5) {
      saw_zero = true;
      EXPECT_NEAR(r.sum.real(), -0.5, 1e-12);
      EXPECT_TRUE(r.flagged);
    } else if (r.orbit.minimal_period == 1) {
      saw_one = true;
      EXPECT_NEAR(r.sum.real(), 0.5, 1e-12);
    } else if (r.orbit.minimal_period == 2) {
      saw_third = true;
      EXPECT_NEAR(std::abs(r.sum), 0.0, 1e-12);
      EXPECT_FALSE(r.flagged);
    }
  }
  EXPECT_TRUE(saw_zero && saw_one && saw_third);
}

TEST(Obstructions, CoboundaryHasNone) {
  const PiecewiseFunction phi = trig(TermSum::sine(1.0, 2.0) - TermSum::sine(1.0, 1.0));
  for (const ObstructionRecord& r : obstruction_scan(doubling(), phi, 6)) {
    EXPECT_LT(std::abs(r.sum), 1e-8);
    EXPECT_FALSE(r.flagged);
  }
}
