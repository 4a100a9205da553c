#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "birkhoff/primitive.hpp"
#include "birkhoff/transfer.hpp"

using namespace birkhoff;

namespace {

PiecewiseFunction random_step(std::mt19937_64& rng, double a, double b, int pieces) {
  std::uniform_real_distribution<double> u(a, b), v(-1.0, 1.0);
  std::vector<double> edges{a, b};
  for (int i = 1; i < pieces; ++i) edges.push_back(u(rng));
  std::sort(edges.begin(), edges.end());
  std::vector<cplx> values;
  for (int i = 0; i < pieces; ++i) values.push_back(v(rng));
  return PiecewiseFunction::from_bins(edges, values);
}

PiecewiseFunction random_trig(std::mt19937_64& rng, double a, double b) {
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  TermSum t = TermSum::polynomial({v(rng), v(rng)});
  for (int q = 1; q <= 3; ++q) t += TermSum::cosine(v(rng), q, v(rng)) + TermSum::sine(v(rng), q);
  return PiecewiseFunction::uniform(a, b, t);
}

const System& doubling() {
  static const System s(doubling_map());
  return s;
}
const System& swap4() {
  static const System s(swap4_map());
  return s;
}
const System& two_component() {
  static const System s(two_component_map());
  return s;
}

}  // namespace

TEST(Transfer, PreservesIntegrals) {
  std::mt19937_64 rng(1);
  for (const PiecewiseMap& f : {doubling_map(), swap4_map(), tripling_map()}) {
    const PiecewiseFunction g = random_step(rng, 0.0, 1.0, 7);
    EXPECT_NEAR(std::abs(apply_transfer(f, g).integrate() - g.integrate()), 0.0, 1e-13);
  }
}

TEST(Transfer, DualityWithComposition) {
  std::mt19937_64 rng(2);
  for (const PiecewiseMap& f : {doubling_map(), swap4_map(), two_component_map(), tripling_map()}) {
    for (int trial = 0; trial < 10; ++trial) {
      const PiecewiseFunction phi = random_trig(rng, f.lower(), f.upper());
      const PiecewiseFunction gamma = random_step(rng, f.lower(), f.upper(), 5);
      const cplx lhs = inner(phi, apply_transfer(f, gamma));
      const cplx rhs = inner(compose_with_map(phi, f), gamma);
      EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-8) << f.name();
    }
  }
}

TEST(Transfer, DoublingFixesLebesgue) {
  const PiecewiseFunction one = PiecewiseFunction::constant(0.0, 1.0, 1.0);
  const PiecewiseFunction l1 = apply_transfer(doubling_map(), one).simplified();
  EXPECT_NEAR((l1 - one).sup_abs(), 0.0, 1e-15);
}

TEST(Transfer, GridVersionTracksExactOnAffineMap) {
  std::mt19937_64 rng(3);
  const PiecewiseFunction g = PiecewiseFunction::uniform(0.0, 1.0, TermSum::cosine(1.0, 1.0) + TermSum::constant(2.0));
  const PiecewiseFunction exact = apply_transfer(doubling_map(), g);
  const PiecewiseFunction grid = apply_transfer_grid(doubling_map(), g, 4097);
  for (double x : {0.05, 0.3, 0.71}) EXPECT_NEAR(std::abs(exact.eval(x) - grid.eval(x)), 0.0, 1e-5);
}

TEST(Ulam, RowsAreStochastic) {
  for (const PiecewiseMap& f : {doubling_map(), swap4_map(), perturbed_doubling_map(0.1)}) {
    const UlamDiscretization u(f, 256);
    EXPECT_LT(u.row_sum_error(), 1e-12) << f.name();
  }
}

TEST(Ulam, MatrixDuality) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  const UlamDiscretization u(swap4_map(), 128);
  BinVector a(128), b(128);
  for (int i = 0; i < 128; ++i) {
    a[i] = v(rng);
    b[i] = v(rng);
  }
  EXPECT_NEAR(std::abs(u.pairing(u.apply_transfer(a), b) - u.pairing(a, u.apply_koopman(b))), 0.0, 1e-13);
}

TEST(Spectrum, DoublingIsMixing) {
  const SpectralDecomposition& d = *doubling().decomp;
  ASSERT_EQ(d.eigenvalues().size(), 1u);
  EXPECT_EQ(d.period(), 1);
  EXPECT_EQ(d.components(), 1);
  EXPECT_NEAR(d.spectrum().leading_eigenvalue, 1.0, 1e-9);
  for (cplx v : d.density(0)) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-6);
  EXPECT_LE(d.tail_rate(), 0.5 + 1e-12);
}

TEST(Spectrum, Swap4HasPeriodTwo) {
  const SpectralDecomposition& d = *swap4().decomp;
  ASSERT_EQ(d.eigenvalues().size(), 2u);
  EXPECT_EQ(d.period(), 2);
  EXPECT_NEAR(std::abs(d.eigenvalues()[1] - cplx(-1.0)), 0.0, 1e-12);
}

TEST(Spectrum, TwoComponentMasses) {
  const SpectralDecomposition& d = *two_component().decomp;
  ASSERT_EQ(d.components(), 2);
  EXPECT_NEAR(d.basin_mass(0), 0.5, 1e-4);
  EXPECT_NEAR(d.basin_mass(1), 0.5, 1e-4);
  EXPECT_EQ(d.period(), 1);
}

TEST(Projectors, IdempotentAndOrthogonal) {
  for (const System* s : {&doubling(), &swap4(), &two_component()}) {
    const ProjectorResiduals& r = s->decomp->residuals();
    EXPECT_LT(r.idempotence, 1e-8);
    EXPECT_LT(r.orthogonality, 1e-8);
    EXPECT_LT(r.cesaro_agreement, 1e-8);
  }
}

TEST(Projectors, DirectCheckOnRandomDensity) {
  std::mt19937_64 rng(6);
  const SpectralDecomposition& d = *swap4().decomp;
  const BinVector v = d.ulam().average(random_step(rng, 0.0, 1.0, 9));
  for (int i = 0; i < 2; ++i) {
    const BinVector p = d.project(i, v);
    const BinVector pp = d.project(i, p);
    const BinVector other = d.project(1 - i, p);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      e1 = std::max(e1, std::abs(pp[k] - p[k]));
      e2 = std::max(e2, std::abs(other[k]));
    }
    EXPECT_LT(e1, 1e-8);
    EXPECT_LT(e2, 1e-8);
  }
}

TEST(LasotaYorke, DoublingContractsByTheSecondIterate) {
  // With edge jumps counted in the variation the constant is 2 / 2^n.
  const auto samples = lasota_yorke_samples(doubling_map(), 16, 9);
  const LasotaYorkeFit fit = lasota_yorke_check(doubling_map(), samples, 3);
  EXPECT_GE(fit.contracting_iterate, 1);
  EXPECT_LE(fit.contracting_iterate, 2);
  EXPECT_LT(fit.rate, 1.0);
}
