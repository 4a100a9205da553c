#pragma once

// Piecewise expanding interval maps with lateral-limit semantics.
//
// A map is a finite list of monotone branches tiling [a, b]. Every point of
// the interval is addressed as a lateral point x+ or x-, which removes the
// ambiguity at the critical set: f(x+) is the right limit of the branch to
// the right of x, and the side of the image follows the branch orientation.

#include <string>
#include <vector>

#include "birkhoff/piecewise.hpp"

namespace birkhoff {

struct LateralPoint {
  double x = 0.0;
  Side side = Side::plus;
};

/// One monotone branch on [lo, hi]:
///   f(x) = slope*x + offset + amplitude*sin(2*pi*frequency*x).
/// With amplitude == 0 the branch is affine.
struct Branch {
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;

  bool affine() const { return amplitude == 0.0; }
  double value(double x) const;
  double derivative(double x) const;
  /// Sign of the derivative (+1 or -1).
  int orientation() const;
  /// Infimum of |f'| over the domain.
  double min_abs_derivative() const;
  /// Preimage of y under this branch (y must lie in its image).
  double inverse(double y) const;
  double image_lo() const;
  double image_hi() const;
};

class PiecewiseMap {
 public:
  /// Validates tiling, monotonicity, expansion (theta > 1) and images.
  PiecewiseMap(double a, double b, std::vector<Branch> branches, std::string name = "custom");

  double lower() const { return a_; }
  double upper() const { return b_; }
  double length() const { return b_ - a_; }
  const std::vector<Branch>& branches() const { return branches_; }
  /// Critical set c_0 = a < c_1 < ... < c_n = b.
  std::vector<double> critical_set() const;
  double expansion_floor() const { return theta_; }
  bool affine() const { return affine_; }
  const std::string& name() const { return name_; }

  /// Index of the branch owning the lateral point.
  std::size_t branch_index(const LateralPoint& p) const;
  /// f at a lateral point; the side of the image follows the orientation.
  LateralPoint eval_lateral(const LateralPoint& p) const;
  /// Df at a lateral point.
  double derivative(const LateralPoint& p) const;
  /// f applied n times laterally.
  LateralPoint iterate(LateralPoint p, int n) const;
  /// Plain evaluation (right limit except at b).
  double operator()(double x) const;

 private:
  double a_;
  double b_;
  std::vector<Branch> branches_;
  std::string name_;
  double theta_ = 0.0;
  bool affine_ = true;
};

/// Built-in maps addressable by name.
PiecewiseMap doubling_map();
PiecewiseMap tripling_map();
/// Four slope-2 branches exchanging the halves of [0, 1].
PiecewiseMap swap4_map();
/// Two invariant halves, each carrying a doubling map.
PiecewiseMap two_component_map();
/// Doubling map plus eps*sin(2*pi*x); requires |eps| < 1/(2*pi).
PiecewiseMap perturbed_doubling_map(double eps);
/// "doubling", "tripling", "swap4", "two-component", "perturbed-doubling(eps)".
PiecewiseMap builtin_map(const std::string& name);

/// An observable is a piecewise exponential-polynomial function together
/// with its declared Hoelder exponent.
struct Observable {
  PiecewiseFunction f;
  double holder_exponent = 1.0;
};

cplx eval_lateral(const PiecewiseFunction& obs, const LateralPoint& p);

/// Open intervals of monotonicity of f^n, sorted.
struct Cylinder {
  double lo;
  double hi;
};
std::vector<Cylinder> monotonicity_partition(const PiecewiseMap& map, int n);

struct PeriodicOrbit {
  LateralPoint point;
  int period = 1;          ///< the m that was searched (f^m fixes the point)
  int minimal_period = 1;  ///< smallest k with f^k fixing the point
  double multiplier = 0.0; ///< Df^m at the point
};

/// One candidate per cylinder of P^m carrying a fixed point of f^m in its
/// closure, found by bisection on f^m(x) - x to 1e-12.
std::vector<PeriodicOrbit> periodic_points(const PiecewiseMap& map, int m);

/// Exact integral of the observable over [u, v].
cplx observable_integrate(const PiecewiseFunction& obs, double u, double v);

/// Sum of lateral evaluations along the orbit; re-verifies periodicity.
cplx birkhoff_orbit_sum(const PiecewiseFunction& obs, const PiecewiseMap& map, const PeriodicOrbit& orbit);

struct Distortion {
  double ratio = 1.0;           ///< sup Df^n(x)/Df^n(y) on J
  double log_lipschitz = 0.0;   ///< sup |ln|Df^n x| - ln|Df^n y|| / |f^n x - f^n y|
};
Distortion distortion_constants(const PiecewiseMap& map, int n, const Cylinder& J, int samples = 257);

/// phi o f as a piecewise function; exact for affine maps.
PiecewiseFunction compose_with_map(const PiecewiseFunction& phi, const PiecewiseMap& map);

}  // namespace birkhoff
