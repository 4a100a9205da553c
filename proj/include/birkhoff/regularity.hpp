#pragma once

// Regularity diagnostics for primitives of Birkhoff sums: log-Lipschitz
// ratios, Zygmund second differences, Hoelder convergence of the partial
// primitives, BV tests and the central limit theorem for the modulus of
// continuity. All scans use dyadic scales.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/primitive.hpp"

namespace birkhoff {

/// psi on the grid a + (b - a) i / 2^level, i = 0..2^level.
std::vector<double> dyadic_grid(double a, double b, int level);
std::vector<cplx> primitive_on_grid(const System& sys, const PiecewiseFunction& phi, const std::vector<double>& xs,
                                    double tol = 1e-10, int threads = 0);

struct LogLipschitzResult {
  double ratio = 0.0;  ///< sup |dpsi| / (|dx| (1 + |ln|dx||))
  double x = 0.0;      ///< argmax pair
  double y = 0.0;
  std::vector<double> level_ratios;  ///< the sup restricted to each coarser dyadic subgrid
  bool stable = false;  ///< last refinement changed the sup by less than 5%
};

/// Pairs at all dyadic separations of a uniform grid with 2^K + 1 points.
LogLipschitzResult log_lipschitz_ratio(const std::vector<double>& xs, const std::vector<cplx>& psi);

struct BvTestResult {
  std::vector<double> variations;  ///< variation sums on subgrids of level 1..K
  double increment_ratio = 0.0;    ///< fitted geometric rate of the increments
  bool bounded = true;
  std::string verdict;             ///< "bounded" or "diverging"
};

BvTestResult bv_test(const std::vector<double>& xs, const std::vector<cplx>& psi);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS of the least-squares residuals
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct ModulusProfile {
  double x = 0.0;
  std::vector<double> scales;          ///< h, strictly decreasing
  std::vector<double> second_differences;  ///< psi(x+h) + psi(x-h) - 2 psi(x)
  LinearFit fit;                       ///< D2(h)/h against ln(1/h)
  std::optional<double> predicted_slope;
  bool zygmund = false;                ///< |slope| < zygmund_tol
  double separation = 0.0;             ///< distance from x to the other critical orbit points
};

struct ZygmundOptions {
  double zygmund_tol = 0.05;
  double rel_tol = 1e-4;  ///< series tolerance relative to h
  int orbit_depth = 64;   ///< iterates used to build the critical orbits
};

/// Second-difference profile of psi at the probe x over the scales hs.
ModulusProfile zygmund_profile(const System& sys, const PiecewiseFunction& phi, double x,
                               const std::vector<double>& hs, const ZygmundOptions& opts = {});

/// Mismatch of the lateral periodic data behind the critical point x, signed
/// like the fitted slope of D2(h)/h against ln(1/h):
/// theta(F(x+))/ln|DF(F(x+))| - theta(F(x-))/ln|DF(F(x-))|, where each side
/// follows its lateral orbit until it closes up. Empty if an orbit does not
/// close within max_steps; 0 when x is not critical.
std::optional<double> predicted_zygmund_slope(const PiecewiseMap& map, const PiecewiseFunction& phi, double x,
                                              int max_steps = 64);

struct HolderConvergence {
  double beta = 0.5;
  std::vector<int> ns;
  std::vector<double> distances;  ///< estimate of |psi - psi_n|_{C^beta}
  double rate = 0.0;              ///< fitted geometric rate per n
};

HolderConvergence holder_convergence(const System& sys, const PiecewiseFunction& phi, double beta, int n_max,
                                     int level = 8);

struct CltResult {
  double h = 0.0;
  double sigma = 0.0;
  double lyapunov = 0.0;        ///< Lambda_l = int ln|Df| dmu_l
  std::vector<double> xs;
  std::vector<double> z;        ///< normalized increments in sample order
  double ks = 0.0;              ///< Kolmogorov-Smirnov distance to N(0, 1)
};

/// Samples x from mu_l and normalizes (psi(x+h) - psi(x))/h.
CltResult clt_modulus(const System& sys, const PiecewiseFunction& phi, int l, double h, int samples,
                      std::uint64_t seed, int threads = 0);

/// Largest k with h <= 1/|Df^k(x)| (relative tolerance 1e-12).
int n_scale(const PiecewiseMap& map, double x, double h);

/// Lyapunov exponent int ln|Df| dmu_l from the Ulam density.
double lyapunov_exponent(const System& sys, int l);

}  // namespace birkhoff
