#pragma once

// Primitives of Birkhoff sums.
//
// For an observable phi orthogonal to the fixed densities, the Birkhoff sum
// sum_k phi o f^k is a distribution whose pairing with a BV test function
// gamma is the adjoint series sum_k int phi L^k(gamma) dm, summed in blocks
// of p = p(f). Taking gamma = 1_[a,x] gives the primitive psi(x). All
// quantities here are built on that series, evaluated either with the
// exact branchwise transfer operator or with the Ulam matrix.

#include <memory>
#include <vector>

#include "birkhoff/dynamics.hpp"
#include "birkhoff/transfer.hpp"

namespace birkhoff {

struct AnalysisOptions {
  int bins = 1024;
  double gap_tol = 0.05;
  int n_avg = 64;
  double support_floor = 1e-6;
  int dense_limit = 512;
  int ly_samples = 24;
  int ly_iterates = 4;
  unsigned long long ly_seed = 17;
};

/// A map together with its spectral decomposition and the constants used by
/// the truncation rule. Immutable and safe to share.
struct System {
  System(PiecewiseMap map, const AnalysisOptions& options = {});

  PiecewiseMap map;
  std::shared_ptr<const UlamDiscretization> ulam;
  std::shared_ptr<const SpectralDecomposition> decomp;
  LasotaYorkeFit lasota_yorke;

  int period() const { return decomp->period(); }
  /// Per-step Lasota-Yorke contraction c used by the truncation rule.
  double contraction() const;
};

enum class Route { exact, ulam };

struct SeriesOptions {
  double tol = 1e-8;       ///< absolute tail tolerance
  int max_blocks = 10000;  ///< hard cap on blocks of p terms
  int block = 0;           ///< block length; 0 means p(f)
  Route route = Route::exact;
  int min_blocks = 0;      ///< sum at least this many blocks
  bool keep_terms = false; ///< record every term int phi L^k gamma
};

struct TruncationRule {
  int i0 = 0;              ///< smallest multiple of p with c^{i0}|g|_BV <= |g|_L1
  double formula = 0.0;    ///< (ln|g|_BV - ln|g|_L1) / (-ln c)
  double contraction = 0.0;///< c
  double tail_rate = 0.0;  ///< r
  double tail_constant = 0.0;
};

struct SeriesResult {
  cplx value = 0.0;        ///< sum over the blocks taken
  int terms = 0;           ///< number of terms summed (multiple of the block)
  double tail_bound = 0.0;
  TruncationRule rule;
  std::vector<cplx> term_values;  ///< filled when keep_terms
};

/// Orthogonality precondition: max_l |int phi rho_l dm| <= tol, else throws
/// PreconditionError naming the offending components.
void check_orthogonality(const System& sys, const PiecewiseFunction& phi, double tol);

/// Truncation rule for a BV function gamma.
TruncationRule truncation_rule(const System& sys, const PiecewiseFunction& gamma, int block);

/// sum_k int phi L^k gamma dm over full blocks, until the tail bound is
/// below tol. Throws NumericalError if the cap is reached first.
SeriesResult adjoint_series(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma,
                            const SeriesOptions& opts = {});

struct PrimitiveEvaluation {
  double x = 0.0;
  cplx value = 0.0;
  int truncation_index = 0;
  double tail_bound = 0.0;
  int i0 = 0;
};

/// psi_n(x) = sum_{k <= (n+1)p - 1} int phi L^k 1_[a,x] dm.
cplx primitive_partial(const System& sys, const PiecewiseFunction& phi, int p, int n, double x,
                       Route route = Route::exact);

/// psi(x) with the truncation rule and tail bound below tol.
PrimitiveEvaluation primitive(const System& sys, const PiecewiseFunction& phi, double x, double tol = 1e-8,
                              Route route = Route::exact, int p = 0);

struct RouteComparison {
  std::vector<PrimitiveEvaluation> exact;
  std::vector<PrimitiveEvaluation> ulam;
  double max_discrepancy = 0.0;
};

/// Evaluates psi on a grid by both routes; throws NumericalError when they
/// disagree by more than agreement_tol.
RouteComparison primitive_both_routes(const System& sys, const PiecewiseFunction& phi, const std::vector<double>& xs,
                                      double tol = 1e-8, double agreement_tol = 1e-4);

/// int phi sum_{lambda != 1} (1 - lambda)^{-1} Phi_lambda(gamma) dm.
cplx peripheral_correction(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma);

/// G(x) = int phi sum_{lambda != 1} (1 - lambda)^{-1} Phi_lambda(1_[a,x]) dm.
cplx cesaro_correction(const System& sys, const PiecewiseFunction& phi, double x);

struct CesaroPrimitive {
  std::vector<cplx> means;  ///< psi-hat_u for u = 1..u_max
  cplx limit = 0.0;         ///< Richardson-extrapolated limit
  cplx psi = 0.0;
  cplx correction = 0.0;    ///< G(x)
  double residual = 0.0;    ///< |limit - psi - G|
};

CesaroPrimitive cesaro_primitive(const System& sys, const PiecewiseFunction& phi, double x, int u_max = 256,
                                 double residual_tol = 1e-6);

struct AlphaEvaluation {
  double x = 0.0;
  cplx value = 0.0;          ///< alpha(x) = -(psi(x) + G(x))
  std::vector<cplx> means;   ///< -psi-hat_u, for the convergence audit
  double residual = 0.0;
};

AlphaEvaluation alpha_primitive(const System& sys, const PiecewiseFunction& phi, double x, int u_max = 256);

struct Pairing {
  cplx value = 0.0;          ///< adjoint series
  cplx stieltjes = 0.0;      ///< sum gamma(mid) (psi(x_{i+1}) - psi(x_i)) on a dyadic grid
  double discrepancy = 0.0;
  SeriesResult series;
};

/// Pairing of the Birkhoff-sum distribution with a BV function.
Pairing pair_with_bv(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma,
                     double tol = 1e-8, int stieltjes_level = 8);

/// sup |phi| over the interval (sampled for non-constant pieces).
double sup_norm(const PiecewiseFunction& phi);

}  // namespace birkhoff
