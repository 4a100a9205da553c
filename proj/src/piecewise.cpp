#include "birkhoff/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace birkhoff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool same_omega(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

bool key_less(const Term& a, const Term& b) {
  if (a.power != b.power) return a.power < b.power;
  if (same_omega(a.omega, b.omega)) return false;
  return a.omega < b.omega;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integral of t^j exp(i*omega*t) over [-d, d].
cplx centered_moment(int j, double omega, double d) {
  if (d == 0.0) return 0.0;
  const double wd = std::abs(omega) * d;
  if (wd < 1.0 + j) {
    // Power series of the exponential; only even total powers survive.
    cplx sum = 0.0;
    cplx factor = 1.0;  // (i*omega)^n / n!
    const cplx iw(0.0, omega);
    for (int n = 0; n < 200; ++n) {
      if (n > 0) factor *= iw / static_cast<double>(n);
      const int e = j + n;
      if (e % 2 == 0) {
        const cplx term = factor * (2.0 * std::pow(d, e + 1) / (e + 1));
        sum += term;
        if (n > 2 * wd + 4 && std::abs(term) <= 1e-18 * std::max(std::abs(sum), 1e-300)) break;
      }
    }
    return sum;
  }
  // Antiderivative e^{iwt} sum_r (-1)^r j!/(j-r)! t^{j-r} / (iw)^{r+1}.
  const cplx iw(0.0, omega);
  auto antiderivative = [&](double t) {
    cplx acc = 0.0;
    double falling = 1.0;  // j!/(j-r)!
    cplx denom = iw;       // (iw)^{r+1}
    for (int r = 0; r <= j; ++r) {
      const double sign = (r % 2 == 0) ? 1.0 : -1.0;
      acc += sign * falling * std::pow(t, j - r) / denom;
      falling *= (j - r);
      denom *= iw;
    }
    return std::polar(1.0, omega * t) * acc;
  };
  return antiderivative(d) - antiderivative(-d);
}

}  // namespace

cplx integrate_term(int k, double omega, double u, double v) {
  if (u == v) return 0.0;
  const double m = 0.5 * (u + v);
  const double d = 0.5 * (v - u);
  const double sign = d < 0 ? -1.0 : 1.0;
  const double ad = std::abs(d);
  cplx acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    acc += binomial(k, j) * std::pow(m, k - j) * centered_moment(j, omega, ad);
  }
  return sign * std::polar(1.0, omega * m) * acc;
}

// ---------------------------------------------------------------------------
// TermSum
// ---------------------------------------------------------------------------

TermSum::TermSum(std::vector<Term> terms) : terms_(std::move(terms)) { normalize(); }

TermSum TermSum::constant(cplx c) { return TermSum({Term{0, 0.0, c}}); }
TermSum TermSum::monomial(int power, cplx c) { return TermSum({Term{power, 0.0, c}}); }
TermSum TermSum::exponential(double omega, cplx c) { return TermSum({Term{0, omega, c}}); }

TermSum TermSum::polynomial(const std::vector<double>& coeffs) {
  std::vector<Term> t;
  for (std::size_t k = 0; k < coeffs.size(); ++k) t.push_back(Term{static_cast<int>(k), 0.0, coeffs[k]});
  return TermSum(std::move(t));
}

TermSum TermSum::cosine(double amplitude, double q, double phase) {
  const double w = kTwoPi * q;
  return TermSum({Term{0, w, 0.5 * amplitude * std::polar(1.0, phase)},
                  Term{0, -w, 0.5 * amplitude * std::polar(1.0, -phase)}});
}

TermSum TermSum::sine(double amplitude, double q, double phase) {
  // sin(z) = (e^{iz} - e^{-iz}) / (2i)
  const double w = kTwoPi * q;
  const cplx half_over_i(0.0, -0.5 * amplitude);
  return TermSum({Term{0, w, half_over_i * std::polar(1.0, phase)},
                  Term{0, -w, -half_over_i * std::polar(1.0, -phase)}});
}

void TermSum::normalize() {
  std::sort(terms_.begin(), terms_.end(), key_less);
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const Term& t : terms_) {
    if (!out.empty() && out.back().power == t.power && same_omega(out.back().omega, t.omega)) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  double scale = 0.0;
  for (const Term& t : out) scale = std::max(scale, std::abs(t.coef));
  std::erase_if(out, [&](const Term& t) { return std::abs(t.coef) <= 1e-16 * scale || t.coef == 0.0; });
  terms_ = std::move(out);
}

bool TermSum::is_constant() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const Term& t) { return t.power == 0 && t.omega == 0.0; });
}

cplx TermSum::constant_value() const {
  cplx c = 0.0;
  for (const Term& t : terms_)
    if (t.power == 0 && t.omega == 0.0) c += t.coef;
  return c;
}

double TermSum::max_abs_omega() const {
  double w = 0.0;
  for (const Term& t : terms_) w = std::max(w, std::abs(t.omega));
  return w;
}

int TermSum::max_power() const {
  int k = 0;
  for (const Term& t : terms_) k = std::max(k, t.power);
  return k;
}

double TermSum::coef_scale() const {
  double s = 0.0;
  for (const Term& t : terms_) s += std::abs(t.coef);
  return s;
}

cplx TermSum::operator()(double x) const {
  cplx acc = 0.0;
  for (const Term& t : terms_) {
    cplx v = t.coef * std::pow(x, t.power);
    if (t.omega != 0.0) v *= std::polar(1.0, t.omega * x);
    acc += v;
  }
  return acc;
}

cplx TermSum::derivative(double x) const {
  cplx acc = 0.0;
  for (const Term& t : terms_) {
    const cplx e = t.omega != 0.0 ? std::polar(1.0, t.omega * x) : cplx(1.0);
    cplx d = cplx(0.0, t.omega) * std::pow(x, t.power);
    if (t.power > 0) d += static_cast<double>(t.power) * std::pow(x, t.power - 1);
    acc += t.coef * d * e;
  }
  return acc;
}

cplx TermSum::integrate(double u, double v) const {
  cplx acc = 0.0;
  for (const Term& t : terms_) acc += t.coef * integrate_term(t.power, t.omega, u, v);
  return acc;
}

TermSum TermSum::compose_affine(double s, double t) const {
  std::vector<Term> out;
  for (const Term& term : terms_) {
    const cplx c = term.omega != 0.0 ? term.coef * std::polar(1.0, term.omega * t) : term.coef;
    const double w = term.omega * s;
    for (int j = 0; j <= term.power; ++j) {
      const double b = binomial(term.power, j) * std::pow(s, j) * std::pow(t, term.power - j);
      if (b != 0.0) out.push_back(Term{j, w, c * b});
    }
  }
  return TermSum(std::move(out));
}

TermSum TermSum::conj() const {
  std::vector<Term> out = terms_;
  for (Term& t : out) {
    t.coef = std::conj(t.coef);
    t.omega = -t.omega;
  }
  return TermSum(std::move(out));
}

TermSum& TermSum::operator+=(const TermSum& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  normalize();
  return *this;
}

TermSum& TermSum::operator-=(const TermSum& other) { return *this += other * cplx(-1.0); }

TermSum& TermSum::operator*=(cplx c) {
  for (Term& t : terms_) t.coef *= c;
  normalize();
  return *this;
}

TermSum operator*(const TermSum& a, const TermSum& b) {
  std::vector<Term> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const Term& x : a.terms_)
    for (const Term& y : b.terms_) out.push_back(Term{x.power + y.power, x.omega + y.omega, x.coef * y.coef});
  return TermSum(std::move(out));
}

bool TermSum::approx_equal(const TermSum& other, double tol) const {
  std::size_t i = 0, j = 0;
  const auto& A = terms_;
  const auto& B = other.terms_;
  while (i < A.size() || j < B.size()) {
    if (j == B.size() || (i < A.size() && key_less(A[i], B[j]))) {
      if (std::abs(A[i].coef) > tol) return false;
      ++i;
    } else if (i == A.size() || key_less(B[j], A[i])) {
      if (std::abs(B[j].coef) > tol) return false;
      ++j;
    } else {
      if (std::abs(A[i].coef - B[j].coef) > tol) return false;
      ++i;
      ++j;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// PiecewiseFunction
// ---------------------------------------------------------------------------

PiecewiseFunction::PiecewiseFunction(std::vector<double> breaks, std::vector<TermSum> pieces)
    : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
  if (breaks_.size() < 2 || pieces_.size() + 1 != breaks_.size())
    throw std::invalid_argument("piecewise function: need n+1 breakpoints for n pieces");
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
    if (!(breaks_[i] < breaks_[i + 1]))
      throw std::invalid_argument("piecewise function: breakpoints must increase strictly");
}

PiecewiseFunction PiecewiseFunction::zero(double a, double b) { return {{a, b}, {TermSum()}}; }

PiecewiseFunction PiecewiseFunction::constant(double a, double b, cplx c) {
  return {{a, b}, {TermSum::constant(c)}};
}

PiecewiseFunction PiecewiseFunction::uniform(double a, double b, TermSum t) {
  return {{a, b}, {std::move(t)}};
}

PiecewiseFunction PiecewiseFunction::indicator(double a, double b, double u, double v) {
  u = std::max(u, a);
  v = std::min(v, b);
  if (!(u < v)) return zero(a, b);
  std::vector<double> br{a};
  std::vector<TermSum> pc;
  if (u > a) {
    br.push_back(u);
    pc.emplace_back();
  }
  pc.push_back(TermSum::constant(1.0));
  if (v < b) {
    br.push_back(v);
    pc.emplace_back();
  }
  br.push_back(b);
  return {std::move(br), std::move(pc)};
}

PiecewiseFunction PiecewiseFunction::from_bins(const std::vector<double>& edges,
                                               const std::vector<cplx>& values) {
  if (edges.size() != values.size() + 1) throw std::invalid_argument("from_bins: size mismatch");
  std::vector<TermSum> pc;
  pc.reserve(values.size());
  for (const cplx& v : values) pc.push_back(TermSum::constant(v));
  return {edges, std::move(pc)};
}

std::size_t PiecewiseFunction::piece_index(double x, Side side) const {
  const std::size_t n = pieces_.size();
  if (side == Side::plus) {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t i = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return std::min(i, n - 1);
  }
  auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t i = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return std::min(i, n - 1);
}

cplx PiecewiseFunction::eval(double x, Side side) const {
  if (x < lower() || x > upper()) throw std::out_of_range("evaluation point outside the interval");
  return pieces_[piece_index(x, side)](x);
}

cplx PiecewiseFunction::integrate() const {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) acc += pieces_[i].integrate(breaks_[i], breaks_[i + 1]);
  return acc;
}

cplx PiecewiseFunction::integrate(double u, double v) const {
  double sign = 1.0;
  if (v < u) {
    std::swap(u, v);
    sign = -1.0;
  }
  u = std::max(u, lower());
  v = std::min(v, upper());
  if (!(u < v)) return 0.0;
  cplx acc = 0.0;
  for (std::size_t i = piece_index(u, Side::plus); i < pieces_.size() && breaks_[i] < v; ++i) {
    const double lo = std::max(u, breaks_[i]);
    const double hi = std::min(v, breaks_[i + 1]);
    if (lo < hi) acc += pieces_[i].integrate(lo, hi);
  }
  return sign * acc;
}

std::vector<cplx> PiecewiseFunction::bin_integrals(const std::vector<double>& edges) const {
  std::vector<cplx> out(edges.size() - 1, 0.0);
  std::size_t p = 0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double u = std::max(edges[k], lower());
    const double v = std::min(edges[k + 1], upper());
    if (!(u < v)) continue;
    while (p + 1 < pieces_.size() && breaks_[p + 1] <= u) ++p;
    cplx acc = 0.0;
    for (std::size_t i = p; i < pieces_.size() && breaks_[i] < v; ++i) {
      const double lo = std::max(u, breaks_[i]);
      const double hi = std::min(v, breaks_[i + 1]);
      if (lo < hi) acc += pieces_[i].integrate(lo, hi);
    }
    out[k] = acc;
  }
  return out;
}

PiecewiseFunction PiecewiseFunction::conj() const {
  std::vector<TermSum> pc;
  pc.reserve(pieces_.size());
  for (const TermSum& t : pieces_) pc.push_back(t.conj());
  return {breaks_, std::move(pc)};
}

PiecewiseFunction& PiecewiseFunction::operator*=(cplx c) {
  for (TermSum& t : pieces_) t *= c;
  return *this;
}

std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  if (all.empty()) return all;
  const double span = all.back() - all.front();
  const double tol = kBreakMergeTol * std::max(span, 1e-300);
  std::vector<double> out{all.front()};
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i] - out.back() > tol) out.push_back(all[i]);
  }
  // Keep the exact right endpoint.
  if (out.size() >= 2) out.back() = all.back();
  else out.push_back(all.back());
  return out;
}

namespace {

template <class Op>
PiecewiseFunction combine(const PiecewiseFunction& f, const PiecewiseFunction& g, Op op) {
  const double span = f.upper() - f.lower();
  if (std::abs(f.lower() - g.lower()) > 1e-12 * span || std::abs(f.upper() - g.upper()) > 1e-12 * span)
    throw std::invalid_argument("piecewise functions live on different intervals");
  std::vector<double> br = merge_breaks(f.breaks(), g.breaks());
  std::vector<TermSum> pc;
  pc.reserve(br.size() - 1);
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    const double mid = 0.5 * (br[k] + br[k + 1]);
    while (i + 1 < f.piece_count() && f.breaks()[i + 1] <= mid) ++i;
    while (j + 1 < g.piece_count() && g.breaks()[j + 1] <= mid) ++j;
    pc.push_back(op(f.pieces()[i], g.pieces()[j]));
  }
  return {std::move(br), std::move(pc)};
}

}  // namespace

PiecewiseFunction operator+(const PiecewiseFunction& f, const PiecewiseFunction& g) {
  return combine(f, g, [](const TermSum& a, const TermSum& b) { return a + b; });
}

PiecewiseFunction operator-(const PiecewiseFunction& f, const PiecewiseFunction& g) {
  return combine(f, g, [](const TermSum& a, const TermSum& b) { return a - b; });
}

PiecewiseFunction operator*(const PiecewiseFunction& f, const PiecewiseFunction& g) {
  return combine(f, g, [](const TermSum& a, const TermSum& b) { return a * b; });
}

PiecewiseFunction PiecewiseFunction::simplified(double tol) const {
  std::vector<double> br{breaks_.front()};
  std::vector<TermSum> pc{pieces_.front()};
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    const double scale = std::max(pc.back().coef_scale(), pieces_[i].coef_scale());
    if (pc.back().approx_equal(pieces_[i], tol * scale)) continue;
    br.push_back(breaks_[i]);
    pc.push_back(pieces_[i]);
  }
  br.push_back(breaks_.back());
  return {std::move(br), std::move(pc)};
}

bool PiecewiseFunction::is_piecewise_constant() const {
  return std::all_of(pieces_.begin(), pieces_.end(), [](const TermSum& t) { return t.is_constant(); });
}

bool PiecewiseFunction::is_zero() const {
  return std::all_of(pieces_.begin(), pieces_.end(), [](const TermSum& t) { return t.empty(); });
}

namespace {

// Sample count used when a piece is not constant.
int samples_for(const TermSum& t, double len) {
  return 64 + static_cast<int>(std::ceil(8.0 * t.max_abs_omega() * len / kTwoPi)) + 8 * t.max_power();
}

}  // namespace

double PiecewiseFunction::sup_abs() const {
  double s = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const TermSum& t = pieces_[i];
    if (t.is_constant()) {
      s = std::max(s, std::abs(t.constant_value()));
      continue;
    }
    const double lo = breaks_[i], hi = breaks_[i + 1];
    const int n = samples_for(t, hi - lo);
    for (int k = 0; k <= n; ++k) s = std::max(s, std::abs(t(lo + (hi - lo) * k / n)));
  }
  return s;
}

double PiecewiseFunction::l1_norm() const {
  // 8-point Gauss-Legendre on subsegments for non-constant pieces.
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  double acc = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const TermSum& t = pieces_[i];
    const double lo = breaks_[i], hi = breaks_[i + 1];
    if (t.is_constant()) {
      acc += std::abs(t.constant_value()) * (hi - lo);
      continue;
    }
    const int segs = samples_for(t, hi - lo);
    const double h = (hi - lo) / segs;
    for (int s = 0; s < segs; ++s) {
      const double m = lo + (s + 0.5) * h;
      for (int q = 0; q < 8; ++q) acc += 0.5 * h * gw[q] * std::abs(t(m + 0.5 * h * gx[q]));
    }
  }
  return acc;
}

double PiecewiseFunction::variation() const {
  double v = std::abs(pieces_.front()(breaks_.front())) + std::abs(pieces_.back()(breaks_.back()));
  for (std::size_t i = 1; i < pieces_.size(); ++i)
    v += std::abs(pieces_[i](breaks_[i]) - pieces_[i - 1](breaks_[i]));
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const TermSum& t = pieces_[i];
    if (t.is_constant()) continue;
    const double lo = breaks_[i], hi = breaks_[i + 1];
    const int n = samples_for(t, hi - lo);
    cplx prev = t(lo);
    for (int k = 1; k <= n; ++k) {
      const cplx cur = t(lo + (hi - lo) * k / n);
      v += std::abs(cur - prev);
      prev = cur;
    }
  }
  return v;
}

cplx inner(const PiecewiseFunction& f, const PiecewiseFunction& g) {
  const double span = f.upper() - f.lower();
  if (std::abs(f.lower() - g.lower()) > 1e-12 * span || std::abs(f.upper() - g.upper()) > 1e-12 * span)
    throw std::invalid_argument("inner: functions live on different intervals");
  // Sweep the common refinement without materializing the product.
  const std::vector<double> br = merge_breaks(f.breaks(), g.breaks());
  cplx acc = 0.0;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    const double mid = 0.5 * (br[k] + br[k + 1]);
    while (i + 1 < f.piece_count() && f.breaks()[i + 1] <= mid) ++i;
    while (j + 1 < g.piece_count() && g.breaks()[j + 1] <= mid) ++j;
    const TermSum& a = f.pieces()[i];
    const TermSum& b = g.pieces()[j];
    if (a.empty() || b.empty()) continue;
    for (const Term& x : a.terms())
      for (const Term& y : b.terms())
        acc += x.coef * y.coef * integrate_term(x.power + y.power, x.omega + y.omega, br[k], br[k + 1]);
  }
  return acc;
}

}  // namespace birkhoff
