#pragma once

// Transfer operator of a piecewise expanding map.
//
// Two representations are provided: the exact branchwise operator acting on
// piecewise exponential-polynomial densities (affine maps), and the Ulam
// discretization on N uniform bins. The peripheral structure (eigenvalues
// on the unit circle, their projectors, the ergodic densities and basins)
// is extracted from the Ulam chain.

#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <vector>

#include "birkhoff/dynamics.hpp"
#include "birkhoff/piecewise.hpp"

namespace birkhoff {

using BinVector = std::vector<cplx>;

/// (L gamma)(y) = sum over branches of gamma(b^{-1} y) / |Df(b^{-1} y)|.
/// Exact for affine maps.
PiecewiseFunction apply_transfer(const PiecewiseMap& map, const PiecewiseFunction& gamma);

/// Grid version for non-affine maps: L gamma sampled at grid_points uniform
/// nodes (plus images of the critical set) and interpolated linearly.
PiecewiseFunction apply_transfer_grid(const PiecewiseMap& map, const PiecewiseFunction& gamma, int grid_points);

class UlamDiscretization {
 public:
  UlamDiscretization(const PiecewiseMap& map, int bins);

  int bins() const { return n_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  double width() const { return (b_ - a_) / n_; }
  const std::vector<double>& edges() const { return edges_; }
  /// P[i][j] = m(B_i intersect f^{-1} B_j) / m(B_i), row-major sparse.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return p_; }
  /// Largest deviation of a row sum from 1.
  double row_sum_error() const { return row_error_; }
  /// Bound on the overlap error from numerical branch inversion (0 when affine).
  double error_bound() const { return error_bound_; }
  /// Expansion floor theta of the discretized map.
  double expansion_floor() const { return theta_; }

  /// Transfer operator on bin densities: v -> P^T v.
  BinVector apply_transfer(const BinVector& v) const;
  /// Koopman operator on bin functions: w -> P w.
  BinVector apply_koopman(const BinVector& w) const;

  /// Bin averages of a piecewise function.
  BinVector average(const PiecewiseFunction& f) const;
  PiecewiseFunction to_function(const BinVector& v) const;
  /// Integral of a bin function against another bin function.
  cplx pairing(const BinVector& u, const BinVector& v) const;

 private:
  double a_, b_;
  int n_;
  std::vector<double> edges_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> p_;
  double row_error_ = 0.0;
  double error_bound_ = 0.0;
  double theta_ = 2.0;
};

UlamDiscretization ulam_matrix(const PiecewiseMap& map, int bins);

/// Closed communicating class of the Ulam chain with its cyclic structure.
struct ErgodicClass {
  std::vector<int> bins;         ///< bins of the class, sorted
  int period = 1;                ///< d; eigenvalues are the d-th roots of unity
  std::vector<int> subclass;     ///< cyclic subclass (0..d-1) per entry of bins
};

struct PeripheralSpectrum {
  std::vector<cplx> eigenvalues;  ///< Lambda, sorted by argument in [0, 2 pi)
  std::vector<int> orders;        ///< root-of-unity order of each eigenvalue
  std::vector<int> multiplicity;  ///< number of classes carrying each eigenvalue
  int period = 1;                 ///< p(f), lcm of the orders
  std::vector<ErgodicClass> classes;
  double leading_eigenvalue = 1.0;  ///< Rayleigh quotient from power iteration
  bool dense_checked = false;
  bool dense_agrees = true;
  /// Dense eigenvalues with |lambda| > 1 - gap_tol not accounted for by the
  /// class structure (reported, not used).
  std::vector<cplx> near_peripheral;
};

/// Lambda and p(f). A dense eigensolve cross-checks the class structure
/// when bins <= dense_limit.
PeripheralSpectrum peripheral_spectrum(const UlamDiscretization& ulam, double gap_tol = 0.05,
                                       int dense_limit = 512);

/// Interval in [a, b].
struct Interval {
  double lo;
  double hi;
};

struct ProjectorResiduals {
  double idempotence = 0.0;     ///< max over lambda of |Phi^2 v - Phi v| / |v|
  double orthogonality = 0.0;   ///< max over lambda != mu of |Phi_l Phi_m v| / |v|
  double tail_commutation = 0.0;///< max of |K Phi v|, |Phi K v| relative
  double cesaro_agreement = 0.0;///< factored projector vs direct Cesaro average
};

/// Peripheral projectors, ergodic structure and tail estimates.
class SpectralDecomposition {
 public:
  SpectralDecomposition(std::shared_ptr<const UlamDiscretization> ulam, PeripheralSpectrum spectrum,
                        int n_avg = 64, double support_floor = 1e-6);

  const UlamDiscretization& ulam() const { return *ulam_; }
  const PeripheralSpectrum& spectrum() const { return spectrum_; }
  const std::vector<cplx>& eigenvalues() const { return spectrum_.eigenvalues; }
  int period() const { return spectrum_.period; }
  int components() const { return static_cast<int>(rho_.size()); }
  int n_avg() const { return n_avg_; }

  /// Invariant density of component l (bin values, integral 1).
  const BinVector& density(int l) const { return rho_[l]; }
  PiecewiseFunction density_function(int l) const;
  const std::vector<Interval>& support(int l) const { return supports_[l]; }
  double basin_mass(int l) const { return masses_[l]; }
  /// Dual vector w_{lambda,l}; Phi_lambda(g) = sum_l <w, g> u_{lambda,l}.
  const BinVector& dual(int lambda_index, int l) const { return dual_[lambda_index][l]; }
  /// u_{lambda,l} = s_{lambda,l} rho_l (zero when lambda is not carried by l).
  const BinVector& eigendensity(int lambda_index, int l) const { return eig_[lambda_index][l]; }
  /// Unit-modulus eigenfunction s_{lambda,l} on the support (bin values).
  BinVector eigenfunction(int lambda_index, int l) const;
  bool carries(int lambda_index, int l) const;

  /// Phi_lambda applied to a bin density.
  BinVector project(int lambda_index, const BinVector& v) const;
  BinVector project(int lambda_index, const PiecewiseFunction& g) const;
  /// Direct windowed Cesaro average of lambda^{-i} L^i v (cross-check).
  BinVector cesaro_project(int lambda_index, const BinVector& v) const;
  /// Coefficient <w_{lambda,l}, g> of Phi_lambda(g) along u_{lambda,l}.
  cplx coefficient(int lambda_index, int l, const PiecewiseFunction& g) const;

  /// Tail operator K v = L v - sum lambda Phi_lambda v.
  BinVector apply_tail(const BinVector& v) const;
  /// Estimated ||K^n|| in BV for n = 0..; and the fitted rate and constant.
  const std::vector<double>& tail_norms() const { return tail_norms_; }
  double tail_rate() const { return tail_rate_; }
  double tail_constant() const { return tail_constant_; }
  const ProjectorResiduals& residuals() const { return residuals_; }
  int lambda_index(cplx lambda) const;

 private:
  void build_components(double support_floor);
  void build_duals();
  void estimate_tail();
  void measure_residuals();
  /// Runs windows of n_avg * p steps after burn-in until two consecutive
  /// window averages of lambda^{-i} A^i v agree.
  template <class Step>
  BinVector windowed_average(cplx lambda, BinVector v, Step step) const;

  std::shared_ptr<const UlamDiscretization> ulam_;
  PeripheralSpectrum spectrum_;
  int n_avg_;
  std::vector<BinVector> rho_;
  std::vector<std::vector<Interval>> supports_;
  std::vector<double> masses_;
  std::vector<std::vector<BinVector>> dual_;
  std::vector<std::vector<BinVector>> eig_;
  std::vector<double> tail_norms_;
  double tail_rate_ = 0.0;
  double tail_constant_ = 1.0;
  ProjectorResiduals residuals_;
};

/// Norms of bin vectors in the zero-extended BV sense.
double bin_l1(const UlamDiscretization& u, const BinVector& v);
double bin_variation(const BinVector& v);
inline double bin_bv(const UlamDiscretization& u, const BinVector& v) { return bin_variation(v) + bin_l1(u, v); }

struct LasotaYorkeFit {
  std::vector<double> c;  ///< c_n for iterates n = 1..n_max
  std::vector<double> b;  ///< b_n
  double rate = 1.0;      ///< min_n c_n^{1/n} over n with c_n < 1
  int contracting_iterate = 0;  ///< smallest n with c_n < 1 (0 if none)
};

/// Fits |L^n g|_BV <= c_n |g|_BV + b_n |g|_L1 over the sample densities.
LasotaYorkeFit lasota_yorke_check(const PiecewiseMap& map, const std::vector<PiecewiseFunction>& samples, int n_max);

/// Random interval indicators and step functions used as default samples.
std::vector<PiecewiseFunction> lasota_yorke_samples(const PiecewiseMap& map, int count, unsigned long long seed);

}  // namespace birkhoff
