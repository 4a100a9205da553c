#pragma once

// Linear maps x -> M x on the torus T^n.
//
// Observables are trigonometric polynomials R(x) = sum_k c_k e^{2 pi i k.x}.
// Composition with the map acts on frequencies: R o f^j has the frequencies
// (M^T)^j k with unchanged coefficients, so Birkhoff sums are sparse Fourier
// series and everything here is exact integer bookkeeping except the block
// sup norms, which are sampled on grids.

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace birkhoff::torus {

using cplx = std::complex<double>;
using IntVec = std::vector<long long>;

/// Square integer matrix, row-major.
struct IntMatrix {
  int n = 0;
  std::vector<long long> a;

  long long operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  IntMatrix transpose() const;
  long long determinant() const;
  /// Exact inverse; requires |det| = 1.
  IntMatrix inverse() const;
  /// M v with overflow detection (throws NumericalError).
  IntVec apply(const IntVec& v) const;

  static IntMatrix from_rows(const std::vector<std::vector<long long>>& rows);
  /// Arnold's cat map [[2, 1], [1, 1]].
  static IntMatrix cat_map();
  /// The 1x1 matrix [d]: x -> d x on the circle.
  static IntMatrix circle(long long d);
};

struct HyperbolicMatrix {
  IntMatrix m;
  std::vector<cplx> eigenvalues;
  // Two-dimensional case only (n = 2).
  double lambda_s = 0.0;
  double lambda_u = 0.0;
  std::array<double, 2> v_s{};  ///< unit stable eigenvector
  std::array<double, 2> v_u{};  ///< unit unstable eigenvector

  /// Coordinates (a_s, a_u) of w = a_s v_s + a_u v_u.
  std::array<double, 2> split(const std::array<double, 2>& w) const;
};

/// Eigendata of a unimodular hyperbolic matrix; rejects |det| != 1 and
/// eigenvalues on the unit circle (PreconditionError).
HyperbolicMatrix hyperbolic_split(const IntMatrix& m);

/// Number of j in [j_lo, j_hi] with 2^l <= |M^j p| <= 2^(l+1), in exact
/// big-integer arithmetic.
int annulus_crossings(const IntMatrix& m, const IntVec& p, int l, int j_lo, int j_hi);

struct FourierTerm {
  IntVec k;
  cplx c;
};

/// R(x) = sum c e^{2 pi i k.x}.
using TrigPolynomial = std::vector<FourierTerm>;

/// a cos(2 pi k.x) and a sin(2 pi k.x) as pairs of terms.
TrigPolynomial trig_cos(const IntVec& k, double amplitude = 1.0);
TrigPolynomial trig_sin(const IntVec& k, double amplitude = 1.0);
TrigPolynomial operator+(TrigPolynomial a, const TrigPolynomial& b);
/// Merges equal frequencies and drops zero coefficients.
TrigPolynomial normalized(const TrigPolynomial& r);

cplx evaluate(const TrigPolynomial& r, const std::vector<double>& x);
/// int R phi dm = sum_k c_k(R) c_{-k}(phi).
cplx pairing(const TrigPolynomial& r, const TrigPolynomial& phi);
double coefficient_sum(const TrigPolynomial& r);

enum class Direction { alpha, omega };

struct SparseFourierDistribution {
  std::vector<FourierTerm> terms;
  Direction direction = Direction::alpha;
  int j_max = 0;
  double coefficient_sum = 0.0;  ///< sum |b_p| of the observable
  /// Largest l such that every frequency with |2 pi k| <= 2^(l+1) is present.
  int coverage_level = -1;
};

/// u_alpha = -sum_{j>=0} R o f^j (frequencies (M^T)^j p, coefficients -b_p)
/// or u_omega = sum_{j>=1} R o f^{-j} (frequencies (M^T)^{-j} p, +b_p),
/// truncated at j_max. Requires a zero-mean R; omega requires |det M| = 1.
SparseFourierDistribution birkhoff_fourier(const IntMatrix& m, const TrigPolynomial& r, Direction dir, int j_max);

/// Smallest j_max whose stream covers blocks up to l_max.
int required_j_max(const IntMatrix& m, const TrigPolynomial& r, Direction dir, int l_max);

/// psi_0(x) = H(2 - |x|) / (H(2 - |x|) + H(|x| - 1)), H(t) = e^{-1/t} for t > 0.
double bump(double x);
/// psi_l(x) = psi_0(x / 2^l) - psi_0(x / 2^(l-1)) for l >= 1; psi_0 for l = 0.
double dyadic_bump(int l, double x);

struct DyadicBlockProfile {
  std::vector<double> sups;       ///< sup_x |u_l(x)| for l = 0..l_max
  std::vector<int> frequencies;   ///< number of frequencies in block l
  std::vector<bool> reduced;      ///< block evaluated in reduced phase coordinates
  double growth_exponent = 0.0;   ///< slope of ln sup against ln(1 + l)
  int fit_from = 1;
  std::string classification;     ///< "Lambda0", "log-Besov" or "unbounded"
};

struct BesovOptions {
  int grid_density = 16;   ///< points per shortest wavelength
  int fit_from = 1;        ///< first block used in the growth fit
  long long max_grid_points = 1LL << 26;
};

DyadicBlockProfile besov_profile(const SparseFourierDistribution& u, int l_max, const BesovOptions& opts = {});

/// D_s u_alpha(x) (direction 's') or D_u u_omega(x) (direction 'u') by the
/// geometric series of derivatives; n = 2. Other pairings diverge and are
/// refused with PreconditionError.
double directional_derivative(const HyperbolicMatrix& h, const TrigPolynomial& r, Direction dist, char direction,
                              const std::array<double, 2>& x, double tol = 1e-12);

/// Vector field W = (W_1, W_2) with trigonometric components.
struct VectorField {
  TrigPolynomial w1;
  TrigPolynomial w2;
};

/// alpha(x) solving W = alpha o F - M alpha, split along E^s and E^u.
std::array<double, 2> infinitesimal_deformation(const HyperbolicMatrix& h, const VectorField& w,
                                                const std::array<double, 2>& x, double tol = 1e-12);

/// max over components of |alpha(x + h e) + alpha(x - h e) - 2 alpha(x)| / h
/// for each h.
std::vector<double> deformation_second_differences(const HyperbolicMatrix& h, const VectorField& w,
                                                   const std::array<double, 2>& x, const std::array<double, 2>& e,
                                                   const std::vector<double>& hs, double tol = 1e-13);

struct AdvectResult {
  std::vector<cplx> q;            ///< Q_j(phi) for j = 0..j
  int stabilized_at = -1;         ///< index after which no frequency meets phi again
  std::optional<cplx> limit;      ///< lim Q_j(phi), when stabilized
  std::optional<cplx> u_omega;    ///< limit of the R part alone (rho_0 = 0)
};

/// rho_{j+1} = L(rho_j + R) with L rho = rho o f^{-1}; Q_j(phi) = int phi rho_j dm.
AdvectResult advect(const IntMatrix& m, const TrigPolynomial& r, const TrigPolynomial& rho0,
                    const TrigPolynomial& phi, int j);

struct DecayFit {
  std::vector<cplx> correlations;  ///< int R(f^j x) phi(x) dm, j = 0..j_max
  double c1 = 0.0;
  double c2 = 0.0;                 ///< capped at 30 when correlations vanish
  double block_constant = 0.0;     ///< C1 / (1 - e^{-C2}), bound on sum_j |corr_j|
};

DecayFit correlation_decay_fit(const IntMatrix& m, const TrigPolynomial& r, const TrigPolynomial& phi, int j_max);

}  // namespace birkhoff::torus
