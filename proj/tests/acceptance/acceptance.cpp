// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never adapted to the measured values.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "birkhoff/regularity.hpp"
#include "birkhoff/torus.hpp"
#include "birkhoff/variance.hpp"

using namespace birkhoff;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [X]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << (v.detail.tellp() > 0 ? "; " : "") << "exception: " << e.what();
  }
  if (!v.pass) ++failures;
  std::printf("%s [%2d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.str().c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

PiecewiseFunction trig(const TermSum& t) { return PiecewiseFunction::uniform(0.0, 1.0, t); }
PiecewiseFunction cos1() { return trig(TermSum::cosine(1.0, 1.0)); }
PiecewiseFunction sawtooth() { return trig(TermSum::polynomial({-0.5, 1.0})); }
PiecewiseFunction coboundary_phi() { return trig(TermSum::sine(1.0, 2.0) - TermSum::sine(1.0, 1.0)); }

std::vector<double> dyadic_scales(int from, int to, int step = 1) {
  std::vector<double> hs;
  for (int k = from; k <= to; k += step) hs.push_back(std::ldexp(1.0, -k));
  return hs;
}

const System& doubling() {
  static const System s(doubling_map());
  return s;
}

}  // namespace

int main() {
  std::printf("Acceptance suite\n");

  criterion(1, "spectral floor (Ulam doubling, N=1024)", [](Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    AnalysisOptions o;
    o.bins = 1024;
    const System s(doubling_map(), o);
    const double elapsed = seconds_since(t0);
    const SpectralDecomposition& d = *s.decomp;
    double dev = 0.0;
    for (cplx r : d.density(0)) dev = std::max(dev, std::abs(r - 1.0));
    const double lead = std::abs(d.spectrum().leading_eigenvalue - 1.0);
    v.require(lead < 1e-9, "|lead-1|=" + num(lead) + " < 1e-9");
    v.require(dev < 1e-6, "sup|rho-1|=" + num(dev) + " < 1e-6");
    v.require(elapsed < 10.0, "runtime " + num(elapsed) + " s < 10 s");
  });

  criterion(2, "period detection (swap4, two-component)", [](Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    const System sw(swap4_map());
    const System two(two_component_map());
    const double elapsed = seconds_since(t0);
    const auto& ev = sw.decomp->eigenvalues();
    bool lambda_ok = ev.size() == 2;
    if (lambda_ok) {
      bool has_one = false, has_minus = false;
      for (cplx l : ev) {
        has_one = has_one || std::abs(l - 1.0) < 1e-12;
        has_minus = has_minus || std::abs(l + 1.0) < 1e-12;
      }
      lambda_ok = has_one && has_minus;
    }
    v.require(lambda_ok, "Lambda(swap4) = {1, -1}");
    v.require(sw.period() == 2, "p = " + std::to_string(sw.period()));
    const int e = two.decomp->components();
    v.require(e == 2, "E = " + std::to_string(e));
    if (e == 2) {
      const double m0 = two.decomp->basin_mass(0), m1 = two.decomp->basin_mass(1);
      v.require(std::abs(m0 - 0.5) < 1e-4 && std::abs(m1 - 0.5) < 1e-4, "masses " + num(m0) + ", " + num(m1));
    }
    v.require(elapsed < 10.0, "runtime " + num(elapsed) + " s < 10 s");
  });

  criterion(3, "primitive oracle (doubling, cos 2 pi x)", [](Verdict& v) {
    const double target = 1.0 / (2 * kPi);
    const double exact = primitive(doubling(), cos1(), 0.25, 1e-10, Route::exact).value.real();
    const double ulam = primitive(doubling(), cos1(), 0.25, 1e-8, Route::ulam).value.real();
    v.require(std::abs(exact - target) < 1e-8, "exact err " + num(std::abs(exact - target)) + " < 1e-8");
    v.require(std::abs(ulam - target) < 1e-4, "Ulam err " + num(std::abs(ulam - target)) + " < 1e-4");
    std::vector<double> xs;
    for (int i = 0; i <= 256; ++i) xs.push_back(i / 256.0);
    const RouteComparison rc = primitive_both_routes(doubling(), cos1(), xs, 1e-8, 1e-4);
    v.require(rc.max_discrepancy < 1e-4, "257-point route gap " + num(rc.max_discrepancy) + " < 1e-4");
  });

  criterion(4, "variance (Green-Kubo, Monte-Carlo, components)", [](Verdict& v) {
    const double s2 = sigma2_m(doubling(), cos1());
    v.require(std::abs(s2 - 0.5) < 1e-6, "sigma2 = " + num(s2) + " (|err| " + num(std::abs(s2 - 0.5)) + " < 1e-6)");
    MonteCarloOptions mo;
    mo.points = 100000;
    mo.horizon = 1000;
    mo.seed = 20240601;
    const MonteCarloEstimate mc = monte_carlo_sigma2(doubling_map(), cos1(), mo);
    v.require(std::abs(mc.estimate - 0.5) < 0.02, "Monte-Carlo " + num(mc.estimate) + " within 0.02");
    const System two(two_component_map());
    const PiecewiseFunction c = trig(TermSum::cosine(1.0, 2.0));
    const PiecewiseFunction phi = PiecewiseFunction::indicator(0.0, 1.0, 0.0, 0.5) * c +
                                  PiecewiseFunction::indicator(0.0, 1.0, 0.5, 1.0) * c * cplx(2.0);
    const VarianceReport r = variance_report(two, phi);
    v.require(r.identity_residual < 1e-8, "component identity residual " + num(r.identity_residual) + " < 1e-8");
  });

  criterion(5, "coboundary chain (sin 4 pi x - sin 2 pi x)", [](Verdict& v) {
    const PiecewiseFunction phi = coboundary_phi();
    const double s2 = sigma2_m(doubling(), phi);
    v.require(std::abs(s2) < 1e-6, "sigma2_m = " + num(s2) + " < 1e-6");
    const CoboundaryResult cr = coboundary_solve(doubling(), phi);
    double shift = 0.0;
    for (std::size_t i = 0; i < cr.xs.size(); ++i) shift += cr.g[i] - std::sin(2 * kPi * cr.xs[i]);
    shift /= cr.xs.size();
    double gerr = 0.0;
    for (std::size_t i = 0; i < cr.xs.size(); ++i)
      gerr = std::max(gerr, std::abs(cr.g[i] - std::sin(2 * kPi * cr.xs[i]) - shift));
    v.require(cr.coboundary && gerr < 1e-4, "g vs sin 2 pi x + const: " + num(gerr) + " < 1e-4");
    double worst = 0.0;
    std::size_t orbits = 0;
    for (const ObstructionRecord& r : obstruction_scan(doubling(), phi, 6)) {
      worst = std::max(worst, std::abs(r.sum));
      ++orbits;
    }
    v.require(orbits > 0 && worst < 1e-8, "max periodic sum over " + std::to_string(orbits) + " orbits " + num(worst));
    const auto xs = dyadic_grid(0.0, 1.0, 12);
    const BvTestResult bv = bv_test(xs, primitive_on_grid(doubling(), phi, xs, 1e-10));
    v.require(bv.verdict == "bounded", "bv_test " + bv.verdict);
  });

  criterion(6, "non-Zygmund coefficient (x - 1/2 at 1/2)", [](Verdict& v) {
    const auto hs = dyadic_scales(8, 24);
    const ModulusProfile saw = zygmund_profile(doubling(), sawtooth(), 0.5, hs);
    const double target = 1.0 / std::numbers::ln2;
    const double rel = std::abs(std::abs(saw.fit.slope) - target) / target;
    v.require(rel < 0.10, "|coef| " + num(std::abs(saw.fit.slope)) + " vs 1/ln2 (rel " + num(rel) + " < 10%)");
    const ModulusProfile c = zygmund_profile(doubling(), cos1(), 0.5, hs);
    v.require(std::abs(c.fit.slope) < 0.05 && c.zygmund, "cos coef " + num(std::abs(c.fit.slope)) + " < 0.05");
  });

  criterion(7, "CLT of the modulus (doubling, cos)", [](Verdict& v) {
    const int samples = 2000;
    const std::uint64_t seed = 20240607;
    std::vector<double> ks;
    for (int k : {15, 20, 25}) ks.push_back(clt_modulus(doubling(), cos1(), 0, std::ldexp(1.0, -k), samples, seed).ks);
    v.require(ks[2] < 0.1, "KS(2^-25) = " + num(ks[2]) + " < 0.1");
    const double noise = 2.0 / std::sqrt(static_cast<double>(samples));
    const bool monotone = ks[1] <= ks[0] + noise && ks[2] <= ks[1] + noise;
    v.require(monotone, "KS " + num(ks[0]) + ", " + num(ks[1]) + ", " + num(ks[2]) + " decreasing within " + num(noise));
  });

  criterion(8, "annulus count (cat map)", [](Verdict& v) {
    const torus::IntMatrix m = torus::IntMatrix::cat_map();
    int worst = 0;
    for (const torus::IntVec& p : {torus::IntVec{1, 0}, torus::IntVec{1, 1}, torus::IntVec{2, 3}, torus::IntVec{5, -7}})
      for (int l = 0; l <= 40; ++l) worst = std::max(worst, torus::annulus_crossings(m, p, l, -30, 30));
    v.require(worst == 2, "max count " + std::to_string(worst) + " = 2");
  });

  criterion(9, "Lambda0 membership (cat map u_alpha)", [](Verdict& v) {
    const torus::IntMatrix m = torus::IntMatrix::cat_map();
    const torus::TrigPolynomial r = torus::trig_cos({1, 1});
    const int l_max = 24;
    const int j = torus::required_j_max(m, r, torus::Direction::alpha, l_max);
    const auto u = torus::birkhoff_fourier(m, r, torus::Direction::alpha, j);
    const auto prof = torus::besov_profile(u, l_max);
    int big_l = 0;
    for (int l = 0; l <= l_max + 3; ++l) big_l = std::max(big_l, torus::annulus_crossings(m.transpose(), {1, 1}, l, 0, j));
    double sup = 0.0;
    bool bounded = true;
    for (double s : prof.sups) {
      sup = std::max(sup, s);
      bounded = bounded && s <= big_l * u.coefficient_sum + 1e-12;
    }
    v.require(sup <= 2.0, "max block sup " + num(sup) + " <= 2");
    v.require(prof.growth_exponent <= 0.05, "growth " + num(prof.growth_exponent) + " <= 0.05");
    v.require(bounded, "blocks <= L*sum|b| = " + num(big_l * u.coefficient_sum) + " for all l <= " + std::to_string(l_max));
  });

  criterion(10, "log-Besov check (doubling circle u_alpha)", [](Verdict& v) {
    const torus::IntMatrix m = torus::IntMatrix::circle(2);
    const torus::TrigPolynomial r = torus::trig_cos({1});
    const int l_max = 30;
    const int j = torus::required_j_max(m, r, torus::Direction::alpha, l_max);
    const auto u = torus::birkhoff_fourier(m, r, torus::Direction::alpha, j);
    torus::BesovOptions o;
    o.fit_from = 6;
    const auto prof = torus::besov_profile(u, l_max, o);
    double ratio = 0.0;
    for (int l = 0; l <= l_max; ++l) ratio = std::max(ratio, prof.sups[l] / (1.0 + l));
    v.require(ratio <= u.coefficient_sum * 2.0, "sup value/(1+l) = " + num(ratio));
    v.require(prof.growth_exponent <= 0.05, "slope beyond l=5: " + num(prof.growth_exponent) + " <= 0.05");
  });

  criterion(11, "advection (cat map, rho0 = 0)", [](Verdict& v) {
    const torus::IntMatrix m = torus::IntMatrix::cat_map();
    const torus::TrigPolynomial r = torus::trig_cos({1, 1});
    const auto one = torus::advect(m, r, {}, {{{0, 0}, 1.0}}, 50);
    double drift = 0.0;
    for (cplx q : one.q) drift = std::max(drift, std::abs(q - one.q[0]));
    v.require(drift <= 1e-15, "Q_j(1) drift " + num(drift) + " for j <= 50");
    const auto cy = torus::advect(m, r, {}, torus::trig_cos({0, 1}), 50);
    bool exact = true;
    for (std::size_t k = 1; k < cy.q.size(); ++k) exact = exact && cy.q[k] == cplx(0.5);
    v.require(exact, "Q_j(cos 2 pi y) = 1/2 exactly for 1 <= j <= 50");
    const auto self = torus::advect(m, r, {}, r, 50);
    v.require(self.u_omega && *self.u_omega == cplx(0.0), "u_omega(R) = 0 exactly");
  });

  criterion(12, "infinitesimal deformation (cat map)", [](Verdict& v) {
    const auto h = torus::hyperbolic_split(torus::IntMatrix::cat_map());
    const torus::TrigPolynomial one{{{0, 0}, 1.0}};
    double err = 0.0;
    for (auto x : {std::array<double, 2>{0.3, 0.7}, std::array<double, 2>{0.05, 0.91}}) {
      const auto a = torus::infinitesimal_deformation(h, {one, {}}, x, 1e-14);
      err = std::max({err, std::abs(a[0] - 0.0), std::abs(a[1] + 1.0)});
    }
    v.require(err < 1e-10, "alpha vs (0,-1): " + num(err) + " < 1e-10");
    // Bounded D2/h: the finer half of the scales may not exceed the coarser
    // half by more than 50% (a log-Lipschitz function would grow ~2x here).
    const auto hs = dyadic_scales(4, 24, 2);
    double coarse = 0.0, fine = 0.0;
    for (auto x : {std::array<double, 2>{0.3, 0.7}, std::array<double, 2>{0.62, 0.13}, std::array<double, 2>{0.9, 0.45}}) {
      const auto d2 = torus::deformation_second_differences(h, {torus::trig_sin({0, 1}), {}}, x, {1.0, 0.0}, hs);
      for (std::size_t i = 0; i < d2.size(); ++i) {
        double& half = i < d2.size() / 2 ? coarse : fine;
        half = std::max(half, d2[i]);
      }
    }
    v.require(std::isfinite(fine) && fine <= 1.5 * coarse,
              "max D2/h fine " + num(fine) + " vs coarse " + num(coarse));
  });

  criterion(13, "operator algebra property suite", [](Verdict& v) {
    std::mt19937_64 rng(20240613);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    auto random_trig = [&](double a, double b) {
      TermSum t = TermSum::polynomial({u(rng), u(rng)});
      for (int q = 1; q <= 3; ++q) t += TermSum::cosine(u(rng), q, u(rng)) + TermSum::sine(u(rng), q);
      return PiecewiseFunction::uniform(a, b, t);
    };
    auto random_step = [&](double a, double b) {
      std::vector<double> e{a, b};
      for (int i = 0; i < 5; ++i) e.push_back(a + (b - a) * pos(rng));
      std::sort(e.begin(), e.end());
      std::vector<cplx> vals;
      for (std::size_t i = 0; i + 1 < e.size(); ++i) vals.push_back(u(rng));
      return PiecewiseFunction::from_bins(e, vals);
    };
    double duality = 0.0;
    for (const PiecewiseMap& f : {doubling_map(), tripling_map(), swap4_map(), two_component_map()})
      for (int t = 0; t < 20; ++t) {
        const PiecewiseFunction phi = random_trig(f.lower(), f.upper());
        const PiecewiseFunction g = random_step(f.lower(), f.upper());
        duality = std::max(duality, std::abs(inner(phi, apply_transfer(f, g)) - inner(compose_with_map(phi, f), g)));
      }
    v.require(duality < 1e-8, "duality " + num(duality) + " < 1e-8");

    double idem = 0.0, orth = 0.0;
    const System sw(swap4_map()), two(two_component_map());
    for (const System* s : {&doubling(), &sw, &two}) {
      idem = std::max(idem, s->decomp->residuals().idempotence);
      orth = std::max(orth, s->decomp->residuals().orthogonality);
      const SpectralDecomposition& d = *s->decomp;
      const int n = static_cast<int>(d.eigenvalues().size());
      for (int t = 0; t < 5; ++t) {
        const BinVector vec = d.ulam().average(random_step(0.0, 1.0));
        for (int i = 0; i < n; ++i) {
          const BinVector p = d.project(i, vec), pp = d.project(i, p);
          for (std::size_t k = 0; k < p.size(); ++k) idem = std::max(idem, std::abs(pp[k] - p[k]));
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const BinVector q = d.project(j, p);
            for (cplx c : q) orth = std::max(orth, std::abs(c));
          }
        }
      }
    }
    v.require(idem < 1e-8, "idempotence " + num(idem) + " < 1e-8");
    v.require(orth < 1e-8, "orthogonality " + num(orth) + " < 1e-8");

    double theta = 0.0;
    const PiecewiseFunction phi = cos1();
    for (int t = 0; t < 20; ++t) {
      const PiecewiseFunction g = random_trig(0.0, 1.0);
      const PiecewiseFunction gf = compose_with_map(g, doubling_map());
      theta = std::max(theta, std::abs(theta_functional(doubling(), phi, gf) - theta_functional(doubling(), phi, g)));
    }
    v.require(theta < 1e-6, "Theta invariance over 20 g: " + num(theta) + " < 1e-6");
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
