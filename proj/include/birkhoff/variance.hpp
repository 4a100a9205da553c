#pragma once

// Asymptotic variance of Birkhoff sums.
//
// Correlations are evaluated through the adjoint series: for observables a, b
// and a density rho, int a (b o f^k) rho dm = int b L^k(a rho) dm. Summing in
// blocks of p(f) removes the peripheral eigenvalues lambda != 1, whose
// contribution is added back in closed form through (1 - lambda)^{-1}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/primitive.hpp"

namespace birkhoff {

/// Terms of the Green-Kubo expansion of sigma(a, b) for one density.
struct GreenKuboLedger {
  cplx projector = 0.0;  ///< sum_{lambda != 1} (1 - lambda)^{-1} parts
  cplx ktail = 0.0;      ///< blocked series sum_i int (..) K^i (..)
  cplx diagonal = 0.0;   ///< int a b rho dm (enters with a minus sign)
  int terms = 0;
  double tail_bound = 0.0;
};

/// sigma(a, b) = lim (1/n) int S_n a S_n b rho dm for a density rho that is
/// a combination of invariant densities. Bilinear in (a, b), no conjugation.
cplx green_kubo_pair(const System& sys, const PiecewiseFunction& a, const PiecewiseFunction& b,
                     const PiecewiseFunction& rho, double tail_tol = 1e-10, GreenKuboLedger* ledger = nullptr);

struct ComponentVariance {
  int component = 0;
  double mass = 0.0;   ///< m(A_l)
  double sigma2 = 0.0; ///< sigma^2_{mu_l}
  GreenKuboLedger ledger;
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double half_width = 0.0;  ///< 3 standard errors
  std::int64_t points = 0;
  int horizon = 0;
};

struct VarianceReport {
  std::vector<ComponentVariance> components;
  double sigma2_m = 0.0;            ///< computed with the density Phi_1(1)
  double weighted_sum = 0.0;        ///< sum_l m(A_l) sigma^2_{mu_l}
  double identity_residual = 0.0;   ///< |sigma2_m - weighted_sum|
  std::optional<MonteCarloEstimate> monte_carlo;
};

/// sigma^2_{mu_l}(phi). Requires |int phi dmu_l| <= 1e-10.
double sigma2_component(const System& sys, const PiecewiseFunction& phi, int l, double tail_tol = 1e-10,
                        GreenKuboLedger* ledger = nullptr);

/// sigma^2_m(phi) from the Lebesgue-weighted limit density Phi_1(1).
double sigma2_m(const System& sys, const PiecewiseFunction& phi, double tail_tol = 1e-10);

/// Hermitian form sigma_m(phi, psi) by polarization over sigma^2_m.
cplx sigma_m(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& psi,
             double tail_tol = 1e-10);

VarianceReport variance_report(const System& sys, const PiecewiseFunction& phi, double tail_tol = 1e-10);

/// Theta_phi(g) = sum_l m(A_l) sigma_{mu_l}(g, conj phi).
cplx theta_functional(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& g,
                      double tail_tol = 1e-10);

struct MonteCarloOptions {
  std::int64_t points = 100000;
  int horizon = 1000;
  std::uint64_t seed = 12345;
  int threads = 0;           ///< 0 means hardware concurrency
  double noise = 0x1p-40;    ///< relative to |I|, added after each step
};

/// (1/N) sum_{n<=N} |S_n phi|^2 / n averaged over Lebesgue-distributed
/// starting points. Deterministic for a fixed seed, independent of threads.
MonteCarloEstimate monte_carlo_sigma2(const PiecewiseMap& map, const PiecewiseFunction& phi,
                                      const MonteCarloOptions& opts = {});

struct CoboundaryResult {
  bool coboundary = false;
  double sigma2 = 0.0;
  std::vector<double> xs;
  std::vector<double> g;          ///< recovered transfer function (real part)
  double residual = 0.0;          ///< RMS of phi - (g o f - g) on the test grid
  double alpha_consistency = 0.0; ///< |alpha(b) - alpha(a) - int g|
  std::string verdict;
};

struct CoboundaryOptions {
  double sigma2_tol = 1e-6;
  int grid = 257;
  double delta = 0x1p-16;
  double residual_tol = 1e-4;
};

/// Decides whether phi = g o f - g and recovers g = D alpha when it is.
CoboundaryResult coboundary_solve(const System& sys, const PiecewiseFunction& phi, const CoboundaryOptions& opts = {});

struct ObstructionRecord {
  PeriodicOrbit orbit;
  int component = -1;  ///< support containing the orbit point
  cplx sum = 0.0;
  bool flagged = false;
};

/// Periodic orbits of minimal period <= m_max in the closure of the
/// supports, one record per orbit, flagged when |sum| > flag_tol.
std::vector<ObstructionRecord> obstruction_scan(const System& sys, const PiecewiseFunction& phi, int m_max,
                                                double flag_tol = 1e-8);

}  // namespace birkhoff
