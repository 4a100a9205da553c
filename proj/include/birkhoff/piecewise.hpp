#pragma once

// Exact algebra for piecewise exponential-polynomial functions on an interval.
//
// A piece is a finite sum of terms c * x^k * exp(i*omega*x). Cosines and
// sines are stored as conjugate exponential pairs, so products, affine
// substitutions and integrals all stay inside the family and can be carried
// out in closed form. This is what makes the transfer operator of a
// piecewise-affine map exact on these functions.

#include <complex>
#include <cstddef>
#include <vector>

namespace birkhoff {

using cplx = std::complex<double>;

/// Side of a lateral limit: x+ is the limit from the right, x- from the left.
enum class Side { plus, minus };

/// One term c * x^power * exp(i*omega*x).
struct Term {
  int power = 0;
  double omega = 0.0;
  cplx coef{0.0, 0.0};
};

/// Finite sum of exponential-polynomial terms in canonical order
/// (sorted by power then frequency, equal keys merged, zeros dropped).
class TermSum {
 public:
  TermSum() = default;
  explicit TermSum(std::vector<Term> terms);

  static TermSum constant(cplx c);
  static TermSum monomial(int power, cplx c);
  static TermSum exponential(double omega, cplx c);
  /// Coefficients c0 + c1 x + c2 x^2 + ...
  static TermSum polynomial(const std::vector<double>& coeffs);
  /// amplitude * cos(2*pi*q*x + phase).
  static TermSum cosine(double amplitude, double q, double phase = 0.0);
  /// amplitude * sin(2*pi*q*x + phase).
  static TermSum sine(double amplitude, double q, double phase = 0.0);

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  bool is_constant() const;
  cplx constant_value() const;
  double max_abs_omega() const;
  int max_power() const;
  /// Sum of |coef|, a crude scale used for relative tolerances.
  double coef_scale() const;

  cplx operator()(double x) const;
  cplx derivative(double x) const;
  /// Closed-form integral over [u, v] (any order of u, v).
  cplx integrate(double u, double v) const;
  /// The function x -> this(s*x + t).
  TermSum compose_affine(double s, double t) const;
  TermSum conj() const;

  TermSum& operator+=(const TermSum& other);
  TermSum& operator-=(const TermSum& other);
  TermSum& operator*=(cplx c);
  friend TermSum operator+(TermSum a, const TermSum& b) { return a += b; }
  friend TermSum operator-(TermSum a, const TermSum& b) { return a -= b; }
  friend TermSum operator*(TermSum a, cplx c) { return a *= c; }
  friend TermSum operator*(const TermSum& a, const TermSum& b);

  /// Coefficientwise comparison; tol is absolute on the coefficients.
  bool approx_equal(const TermSum& other, double tol) const;

 private:
  void normalize();
  std::vector<Term> terms_;
};

/// Integral of x^k exp(i*omega*x) over [u, v], accurate also for tiny
/// intervals and small frequencies.
cplx integrate_term(int k, double omega, double u, double v);

/// A function on [a, b] given by one TermSum per interval between
/// consecutive breakpoints. Lateral evaluation picks the piece on the
/// requested side, so values at breakpoints are one-sided limits.
class PiecewiseFunction {
 public:
  PiecewiseFunction() = default;
  PiecewiseFunction(std::vector<double> breaks, std::vector<TermSum> pieces);

  static PiecewiseFunction zero(double a, double b);
  static PiecewiseFunction constant(double a, double b, cplx c);
  static PiecewiseFunction uniform(double a, double b, TermSum t);
  /// Indicator of [u, v] intersected with [a, b].
  static PiecewiseFunction indicator(double a, double b, double u, double v);
  /// Piecewise-constant function with value values[i] on [edges[i], edges[i+1]].
  static PiecewiseFunction from_bins(const std::vector<double>& edges,
                                     const std::vector<cplx>& values);

  double lower() const { return breaks_.front(); }
  double upper() const { return breaks_.back(); }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<TermSum>& pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  /// Index of the piece that owns the lateral point (x, side).
  std::size_t piece_index(double x, Side side) const;
  cplx eval(double x, Side side = Side::plus) const;
  cplx integrate() const;
  cplx integrate(double u, double v) const;
  /// Exact integrals over consecutive bins given by edges.
  std::vector<cplx> bin_integrals(const std::vector<double>& edges) const;

  PiecewiseFunction conj() const;
  PiecewiseFunction& operator*=(cplx c);
  friend PiecewiseFunction operator*(PiecewiseFunction f, cplx c) { return f *= c; }
  friend PiecewiseFunction operator+(const PiecewiseFunction& f, const PiecewiseFunction& g);
  friend PiecewiseFunction operator-(const PiecewiseFunction& f, const PiecewiseFunction& g);
  friend PiecewiseFunction operator*(const PiecewiseFunction& f, const PiecewiseFunction& g);

  /// Merges neighbouring pieces whose term sums agree to tol (relative).
  PiecewiseFunction simplified(double tol = 1e-13) const;
  bool is_piecewise_constant() const;
  bool is_zero() const;

  double sup_abs() const;
  double l1_norm() const;
  /// Total variation on the real line of the zero extension: interior
  /// variation plus jumps at breakpoints plus the two edge jumps.
  double variation() const;
  double bv_norm() const { return variation() + l1_norm(); }

 private:
  std::vector<double> breaks_;
  std::vector<TermSum> pieces_;
};

/// Integral of f*g over the common domain, exact.
cplx inner(const PiecewiseFunction& f, const PiecewiseFunction& g);

/// Common refinement of two breakpoint lists (near-duplicates merged).
std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b);

/// Breakpoints closer than this fraction of the domain length are merged.
inline constexpr double kBreakMergeTol = 1e-13;

}  // namespace birkhoff
