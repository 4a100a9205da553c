#include "birkhoff/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "birkhoff/errors.hpp"

namespace birkhoff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------------------
// Branch
// ---------------------------------------------------------------------------

double Branch::value(double x) const {
  double y = slope * x + offset;
  if (amplitude != 0.0) y += amplitude * std::sin(kTwoPi * frequency * x);
  return y;
}

double Branch::derivative(double x) const {
  double d = slope;
  if (amplitude != 0.0) d += amplitude * kTwoPi * frequency * std::cos(kTwoPi * frequency * x);
  return d;
}

int Branch::orientation() const { return derivative(0.5 * (lo + hi)) > 0 ? 1 : -1; }

double Branch::min_abs_derivative() const {
  if (affine()) return std::abs(slope);
  double m = std::min(std::abs(derivative(lo)), std::abs(derivative(hi)));
  constexpr int kSamples = 4096;
  for (int k = 1; k < kSamples; ++k) m = std::min(m, std::abs(derivative(lo + (hi - lo) * k / kSamples)));
  // Exact interior critical values of the cosine, when they fall in range.
  if (frequency != 0.0) {
    const double q2 = 2.0 * std::abs(frequency);
    for (double k = std::ceil(q2 * lo); k <= std::floor(q2 * hi); k += 1.0)
      m = std::min(m, std::abs(derivative(k / q2)));
  }
  return m;
}

double Branch::image_lo() const { return std::min(value(lo), value(hi)); }
double Branch::image_hi() const { return std::max(value(lo), value(hi)); }

double Branch::inverse(double y) const {
  if (affine()) return std::clamp((y - offset) / slope, lo, hi);
  const int o = orientation();
  double l = lo, h = hi;
  for (int it = 0; it < 200 && h - l > 1e-16 * std::max(1.0, std::abs(h)); ++it) {
    const double m = 0.5 * (l + h);
    const double v = value(m) - y;
    if ((v < 0) == (o > 0)) l = m;
    else h = m;
  }
  double x = 0.5 * (l + h);
  for (int it = 0; it < 2; ++it) {
    const double nx = x - (value(x) - y) / derivative(x);
    if (nx >= lo && nx <= hi) x = nx;
  }
  return x;
}

// ---------------------------------------------------------------------------
// PiecewiseMap
// ---------------------------------------------------------------------------

PiecewiseMap::PiecewiseMap(double a, double b, std::vector<Branch> branches, std::string name)
    : a_(a), b_(b), branches_(std::move(branches)), name_(std::move(name)) {
  if (!(a_ < b_)) throw ConfigError("map interval must satisfy a < b");
  if (branches_.empty()) throw ConfigError("map needs at least one branch");
  const double tol = 1e-12 * (b_ - a_);
  if (std::abs(branches_.front().lo - a_) > tol || std::abs(branches_.back().hi - b_) > tol)
    throw ConfigError("branches must tile the interval [a, b]");
  branches_.front().lo = a_;
  branches_.back().hi = b_;
  theta_ = INFINITY;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    Branch& br = branches_[i];
    if (!(br.lo < br.hi)) throw ConfigError("branch domain must be a nondegenerate interval");
    if (i + 1 < branches_.size()) {
      if (std::abs(br.hi - branches_[i + 1].lo) > tol) throw ConfigError("branches must tile the interval [a, b]");
      branches_[i + 1].lo = br.hi;
    }
    const double d = br.min_abs_derivative();
    // Strict monotonicity: the derivative must not change sign.
    if (br.derivative(br.lo) * br.derivative(br.hi) <= 0 || d <= 0)
      throw ConfigError("branch " + std::to_string(i) + " is not strictly monotone");
    theta_ = std::min(theta_, d);
    if (br.image_lo() < a_ - tol || br.image_hi() > b_ + tol)
      throw ConfigError("branch " + std::to_string(i) + " maps outside the interval");
    affine_ = affine_ && br.affine();
  }
  if (!(theta_ > 1.0)) {
    std::ostringstream os;
    os << "expansion floor theta = " << theta_ << " must exceed 1";
    throw ConfigError(os.str());
  }
}

std::vector<double> PiecewiseMap::critical_set() const {
  std::vector<double> c;
  for (const Branch& br : branches_) c.push_back(br.lo);
  c.push_back(b_);
  return c;
}

std::size_t PiecewiseMap::branch_index(const LateralPoint& p) const {
  if (p.x < a_ || p.x > b_) throw std::out_of_range("lateral point outside the interval");
  if (p.x == a_ && p.side == Side::minus) throw std::out_of_range("a admits only the plus side");
  if (p.x == b_ && p.side == Side::plus) throw std::out_of_range("b admits only the minus side");
  if (p.side == Side::plus) {
    for (std::size_t i = branches_.size(); i-- > 0;)
      if (branches_[i].lo <= p.x) return i;
    return 0;
  }
  for (std::size_t i = 0; i < branches_.size(); ++i)
    if (branches_[i].hi >= p.x) return i;
  return branches_.size() - 1;
}

LateralPoint PiecewiseMap::eval_lateral(const LateralPoint& p) const {
  const Branch& br = branches_[branch_index(p)];
  double y = std::clamp(br.value(p.x), a_, b_);
  Side s = p.side;
  if (br.orientation() < 0) s = (s == Side::plus) ? Side::minus : Side::plus;
  if (y <= a_) s = Side::plus;
  if (y >= b_) s = Side::minus;
  return {y, s};
}

double PiecewiseMap::derivative(const LateralPoint& p) const {
  return branches_[branch_index(p)].derivative(p.x);
}

LateralPoint PiecewiseMap::iterate(LateralPoint p, int n) const {
  for (int i = 0; i < n; ++i) p = eval_lateral(p);
  return p;
}

double PiecewiseMap::operator()(double x) const {
  return eval_lateral({x, x >= b_ ? Side::minus : Side::plus}).x;
}

// ---------------------------------------------------------------------------
// Built-ins
// ---------------------------------------------------------------------------

PiecewiseMap doubling_map() {
  return PiecewiseMap(0.0, 1.0, {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, -1.0}}, "doubling");
}

PiecewiseMap tripling_map() {
  return PiecewiseMap(0.0, 1.0,
                      {{0.0, 1.0 / 3.0, 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0, 3.0, -1.0}, {2.0 / 3.0, 1.0, 3.0, -2.0}},
                      "tripling");
}

PiecewiseMap swap4_map() {
  return PiecewiseMap(0.0, 1.0,
                      {{0.0, 0.25, 2.0, 0.5}, {0.25, 0.5, 2.0, 0.0}, {0.5, 0.75, 2.0, -1.0}, {0.75, 1.0, 2.0, -1.5}},
                      "swap4");
}

PiecewiseMap two_component_map() {
  return PiecewiseMap(0.0, 1.0,
                      {{0.0, 0.25, 2.0, 0.0}, {0.25, 0.5, 2.0, -0.5}, {0.5, 0.75, 2.0, -0.5}, {0.75, 1.0, 2.0, -1.0}},
                      "two-component");
}

PiecewiseMap perturbed_doubling_map(double eps) {
  if (!(std::abs(eps) < 1.0 / kTwoPi))
    throw ConfigError("perturbed-doubling needs |eps| < 1/(2 pi) to stay expanding");
  std::ostringstream name;
  name << "perturbed-doubling(" << eps << ")";
  return PiecewiseMap(0.0, 1.0, {{0.0, 0.5, 2.0, 0.0, eps, 1.0}, {0.5, 1.0, 2.0, -1.0, eps, 1.0}}, name.str());
}

PiecewiseMap builtin_map(const std::string& name) {
  if (name == "doubling") return doubling_map();
  if (name == "tripling") return tripling_map();
  if (name == "swap4") return swap4_map();
  if (name == "two-component") return two_component_map();
  const std::string prefix = "perturbed-doubling(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    const std::string arg = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    std::size_t used = 0;
    double eps = 0.0;
    try {
      eps = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || arg.empty()) throw ConfigError("cannot parse epsilon in '" + name + "'");
    return perturbed_doubling_map(eps);
  }
  throw ConfigError("unknown built-in map '" + name + "'");
}

// ---------------------------------------------------------------------------
// Observables and orbits
// ---------------------------------------------------------------------------

cplx eval_lateral(const PiecewiseFunction& obs, const LateralPoint& p) {
  if (p.x < obs.lower() || p.x > obs.upper()) throw std::out_of_range("lateral point outside the interval");
  return obs.eval(p.x, p.side);
}

std::vector<Cylinder> monotonicity_partition(const PiecewiseMap& map, int n) {
  if (n < 1) throw std::invalid_argument("monotonicity_partition needs n >= 1");
  std::vector<Cylinder> cur;
  for (const Branch& br : map.branches()) cur.push_back({br.lo, br.hi});
  const double tiny = 1e-15 * map.length();
  for (int k = 2; k <= n; ++k) {
    std::vector<Cylinder> next;
    for (const Branch& br : map.branches()) {
      const double ilo = br.image_lo(), ihi = br.image_hi();
      for (const Cylinder& J : cur) {
        const double u = std::max(J.lo, ilo), v = std::min(J.hi, ihi);
        if (v - u <= tiny) continue;
        double p = br.inverse(u), q = br.inverse(v);
        if (p > q) std::swap(p, q);
        if (std::abs(p - br.lo) <= tiny) p = br.lo;
        if (std::abs(q - br.hi) <= tiny) q = br.hi;
        if (q - p > tiny) next.push_back({p, q});
      }
    }
    std::sort(next.begin(), next.end(), [](const Cylinder& x, const Cylinder& y) { return x.lo < y.lo; });
    cur = std::move(next);
  }
  return cur;
}

namespace {

bool near_critical(const PiecewiseMap& map, double x) {
  for (double c : map.critical_set())
    if (std::abs(x - c) <= 1e-12 * map.length()) return true;
  return false;
}

bool same_lateral(const PiecewiseMap& map, const LateralPoint& p, const LateralPoint& q, double tol) {
  if (std::abs(p.x - q.x) > tol * map.length()) return false;
  if (near_critical(map, p.x)) return p.side == q.side;
  return true;
}

double orbit_multiplier(const PiecewiseMap& map, LateralPoint p, int m) {
  double d = 1.0;
  for (int i = 0; i < m; ++i) {
    d *= map.derivative(p);
    p = map.eval_lateral(p);
  }
  return d;
}

}  // namespace

std::vector<PeriodicOrbit> periodic_points(const PiecewiseMap& map, int m) {
  if (m < 1) throw std::invalid_argument("periodic_points needs m >= 1");
  std::vector<PeriodicOrbit> out;
  const double tol = 1e-12 * map.length();
  for (const Cylinder& J : monotonicity_partition(map, m)) {
    const double glo = map.iterate({J.lo, Side::plus}, m).x - J.lo;
    const double ghi = map.iterate({J.hi, Side::minus}, m).x - J.hi;
    LateralPoint found;
    if (std::abs(glo) <= tol) {
      found = {J.lo, Side::plus};
    } else if (std::abs(ghi) <= tol) {
      found = {J.hi, Side::minus};
    } else if ((glo < 0) != (ghi < 0)) {
      double l = J.lo, h = J.hi;
      const bool rising = glo < 0;
      while (h - l > 1e-13 * map.length()) {
        const double mid = 0.5 * (l + h);
        const double g = map.iterate({mid, Side::plus}, m).x - mid;
        if ((g < 0) == rising) l = mid;
        else h = mid;
      }
      found = {0.5 * (l + h), Side::plus};
    } else {
      continue;
    }
    PeriodicOrbit orbit;
    orbit.point = found;
    orbit.period = m;
    orbit.multiplier = orbit_multiplier(map, found, m);
    orbit.minimal_period = m;
    for (int k = 1; k < m; ++k) {
      if (m % k != 0) continue;
      if (same_lateral(map, map.iterate(found, k), found, 1e-9)) {
        orbit.minimal_period = k;
        break;
      }
    }
    out.push_back(orbit);
  }
  return out;
}

cplx observable_integrate(const PiecewiseFunction& obs, double u, double v) {
  if (u < obs.lower() - 1e-15 || v > obs.upper() + 1e-15) throw std::out_of_range("integration interval outside domain");
  return obs.integrate(u, v);
}

cplx birkhoff_orbit_sum(const PiecewiseFunction& obs, const PiecewiseMap& map, const PeriodicOrbit& orbit) {
  LateralPoint p = orbit.point;
  cplx sum = 0.0;
  for (int i = 0; i < orbit.period; ++i) {
    sum += eval_lateral(obs, p);
    p = map.eval_lateral(p);
  }
  if (!same_lateral(map, p, orbit.point, 1e-9))
    throw NumericalError("orbit fails re-verification: f^m does not return to the point");
  return sum;
}

Distortion distortion_constants(const PiecewiseMap& map, int n, const Cylinder& J, int samples) {
  Distortion out;
  if (map.affine()) return out;
  std::vector<double> logd, img;
  for (int k = 1; k <= samples; ++k) {
    LateralPoint p{J.lo + (J.hi - J.lo) * k / (samples + 1), Side::plus};
    double d = 1.0;
    for (int i = 0; i < n; ++i) {
      d *= map.derivative(p);
      p = map.eval_lateral(p);
    }
    logd.push_back(std::log(std::abs(d)));
    img.push_back(p.x);
  }
  const auto [mn, mx] = std::minmax_element(logd.begin(), logd.end());
  out.ratio = std::exp(*mx - *mn);
  for (std::size_t i = 0; i < logd.size(); ++i)
    for (std::size_t j = i + 1; j < logd.size(); ++j) {
      const double dy = std::abs(img[i] - img[j]);
      if (dy > 1e-14) out.log_lipschitz = std::max(out.log_lipschitz, std::abs(logd[i] - logd[j]) / dy);
    }
  return out;
}

PiecewiseFunction compose_with_map(const PiecewiseFunction& phi, const PiecewiseMap& map) {
  if (!map.affine()) throw PreconditionError("exact composition needs an affine map");
  std::vector<std::pair<Cylinder, TermSum>> parts;
  for (const Branch& br : map.branches()) {
    std::vector<std::pair<Cylinder, TermSum>> local;
    const double ilo = br.image_lo(), ihi = br.image_hi();
    const auto& B = phi.breaks();
    for (std::size_t i = 0; i < phi.piece_count(); ++i) {
      const double u = std::max(B[i], ilo), v = std::min(B[i + 1], ihi);
      if (!(u < v)) continue;
      double p = br.inverse(u), q = br.inverse(v);
      if (p > q) std::swap(p, q);
      local.push_back({{p, q}, phi.pieces()[i].compose_affine(br.slope, br.offset)});
    }
    std::sort(local.begin(), local.end(), [](const auto& x, const auto& y) { return x.first.lo < y.first.lo; });
    if (!local.empty()) {
      local.front().first.lo = br.lo;
      local.back().first.hi = br.hi;
    }
    parts.insert(parts.end(), local.begin(), local.end());
  }
  std::vector<double> br{map.lower()};
  std::vector<TermSum> pc;
  const double tiny = kBreakMergeTol * map.length();
  for (auto& [J, t] : parts) {
    if (J.hi - br.back() <= tiny) continue;
    pc.push_back(std::move(t));
    br.push_back(J.hi);
  }
  br.back() = map.upper();
  return PiecewiseFunction(std::move(br), std::move(pc)).simplified();
}

}  // namespace birkhoff
