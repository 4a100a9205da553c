#include "birkhoff/torus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "birkhoff/errors.hpp"

namespace birkhoff::torus {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;
using BigVec = std::vector<cpp_int>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long long checked_mul_add(long long acc, long long a, long long b) {
  long long prod, sum;
  if (__builtin_mul_overflow(a, b, &prod) || __builtin_add_overflow(acc, prod, &sum))
    throw NumericalError("integer frequency overflow; use a smaller truncation");
  return sum;
}

BigVec to_big(const IntVec& v) { return BigVec(v.begin(), v.end()); }

BigVec apply_big(const IntMatrix& m, const BigVec& v) {
  BigVec out(m.n, 0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) out[i] += cpp_int(m(i, j)) * v[j];
  return out;
}

cpp_int norm2(const BigVec& v) {
  cpp_int s = 0;
  for (const cpp_int& x : v) s += x * x;
  return s;
}

std::optional<IntVec> to_small(const BigVec& v) {
  IntVec out;
  for (const cpp_int& x : v) {
    if (x > std::numeric_limits<long long>::max() || x < std::numeric_limits<long long>::min()) return std::nullopt;
    out.push_back(static_cast<long long>(x));
  }
  return out;
}

long double norm_ld(const IntVec& k) {
  long double s = 0;
  for (long long x : k) s += static_cast<long double>(x) * x;
  return std::sqrt(s);
}

// 2 pi i k.x phase reduced modulo 1 in extended precision.
cplx phase(const IntVec& k, const double* x) {
  long double t = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    long double p = static_cast<long double>(k[i]) * static_cast<long double>(x[i]);
    t += p - std::floor(p);
  }
  t -= std::floor(t);
  const double th = kTwoPi * static_cast<double>(t);
  return {std::cos(th), std::sin(th)};
}

void require_dim(const IntMatrix& m, const IntVec& v) {
  if (static_cast<int>(v.size()) != m.n) throw PreconditionError("frequency dimension does not match the matrix");
}

}  // namespace

IntMatrix IntMatrix::transpose() const {
  IntMatrix t{n, a};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t.a[static_cast<std::size_t>(i) * n + j] = (*this)(j, i);
  return t;
}

long long IntMatrix::determinant() const {
  // Bareiss fraction-free elimination.
  std::vector<cpp_int> w(a.begin(), a.end());
  auto at = [&](int i, int j) -> cpp_int& { return w[static_cast<std::size_t>(i) * n + j]; };
  cpp_int prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (at(k, k) == 0) {
      int r = k + 1;
      while (r < n && at(r, k) == 0) ++r;
      if (r == n) return 0;
      for (int j = 0; j < n; ++j) std::swap(at(k, j), at(r, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
    prev = at(k, k);
  }
  return sign * static_cast<long long>(at(n - 1, n - 1));
}

IntMatrix IntMatrix::inverse() const {
  const long long det = determinant();
  if (std::abs(det) != 1) throw PreconditionError("matrix is not unimodular (|det| != 1)");
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = static_cast<double>((*this)(i, j));
  const Eigen::MatrixXd inv = d.inverse();
  IntMatrix out{n, std::vector<long long>(a.size())};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.a[static_cast<std::size_t>(i) * n + j] = std::llround(inv(i, j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long long s = 0;
      for (int k = 0; k < n; ++k) s = checked_mul_add(s, (*this)(i, k), out(k, j));
      if (s != (i == j ? 1 : 0)) throw NumericalError("integer inverse could not be recovered");
    }
  return out;
}

IntVec IntMatrix::apply(const IntVec& v) const {
  require_dim(*this, v);
  IntVec out(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] = checked_mul_add(out[i], (*this)(i, j), v[j]);
  return out;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<long long>>& rows) {
  IntMatrix m;
  m.n = static_cast<int>(rows.size());
  if (m.n == 0) throw PreconditionError("matrix must be non-empty");
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != m.n) throw PreconditionError("matrix must be square");
    m.a.insert(m.a.end(), r.begin(), r.end());
  }
  return m;
}

IntMatrix IntMatrix::cat_map() { return from_rows({{2, 1}, {1, 1}}); }
IntMatrix IntMatrix::circle(long long d) { return from_rows({{d}}); }

std::array<double, 2> HyperbolicMatrix::split(const std::array<double, 2>& w) const {
  const double det = v_s[0] * v_u[1] - v_u[0] * v_s[1];
  return {(w[0] * v_u[1] - v_u[0] * w[1]) / det, (v_s[0] * w[1] - w[0] * v_s[1]) / det};
}

HyperbolicMatrix hyperbolic_split(const IntMatrix& m) {
  if (m.n < 1) throw PreconditionError("empty matrix");
  if (std::abs(m.determinant()) != 1) throw PreconditionError("matrix is not unimodular (|det| != 1)");
  HyperbolicMatrix h;
  h.m = m;
  Eigen::MatrixXd d(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) d(i, j) = static_cast<double>(m(i, j));
  Eigen::EigenSolver<Eigen::MatrixXd> es(d, false);
  for (int i = 0; i < m.n; ++i) {
    const cplx ev = es.eigenvalues()[i];
    if (std::abs(std::abs(ev) - 1.0) < 1e-9) {
      std::ostringstream os;
      os << "matrix is not hyperbolic: eigenvalue " << ev << " lies on the unit circle";
      throw PreconditionError(os.str());
    }
    h.eigenvalues.push_back(ev);
  }
  if (m.n == 2) {
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), dd = m(1, 1);
    const double tr = a + dd, det = a * dd - b * c;
    const double disc = std::sqrt(tr * tr - 4 * det);  // real: |tr| > 2 for hyperbolic unimodular
    const double l1 = 0.5 * (tr + (tr >= 0 ? disc : -disc));
    const double l2 = det / l1;
    h.lambda_u = std::abs(l1) > std::abs(l2) ? l1 : l2;
    h.lambda_s = std::abs(l1) > std::abs(l2) ? l2 : l1;
    auto eigvec = [&](double lam) {
      std::array<double, 2> v = std::abs(b) >= std::abs(c) ? std::array<double, 2>{b, lam - a}
                                                           : std::array<double, 2>{lam - dd, c};
      const double nrm = std::hypot(v[0], v[1]);
      v[0] /= nrm;
      v[1] /= nrm;
      if (v[0] < 0 || (v[0] == 0 && v[1] < 0)) v = {-v[0], -v[1]};
      return v;
    };
    h.v_u = eigvec(h.lambda_u);
    h.v_s = eigvec(h.lambda_s);
  }
  return h;
}

int annulus_crossings(const IntMatrix& m, const IntVec& p, int l, int j_lo, int j_hi) {
  require_dim(m, p);
  if (std::all_of(p.begin(), p.end(), [](long long x) { return x == 0; }))
    throw PreconditionError("p must be nonzero");
  if (l < 0) throw PreconditionError("l must be nonnegative");
  const cpp_int lo = cpp_int(1) << (2 * l), hi = cpp_int(1) << (2 * (l + 1));
  auto inside = [&](const BigVec& v) {
    const cpp_int n2 = norm2(v);
    return n2 >= lo && n2 <= hi;
  };
  int count = 0;
  if (j_hi >= 0) {
    BigVec v = to_big(p);
    for (int j = 0; j <= j_hi; ++j) {
      if (j >= j_lo && inside(v)) ++count;
      v = apply_big(m, v);
    }
  }
  if (j_lo < 0) {
    const IntMatrix inv = m.inverse();
    BigVec v = apply_big(inv, to_big(p));
    for (int j = -1; j >= j_lo; --j) {
      if (j <= j_hi && inside(v)) ++count;
      v = apply_big(inv, v);
    }
  }
  return count;
}

TrigPolynomial trig_cos(const IntVec& k, double amplitude) {
  IntVec mk(k.size());
  std::transform(k.begin(), k.end(), mk.begin(), [](long long x) { return -x; });
  return normalized({{k, 0.5 * amplitude}, {mk, 0.5 * amplitude}});
}

TrigPolynomial trig_sin(const IntVec& k, double amplitude) {
  IntVec mk(k.size());
  std::transform(k.begin(), k.end(), mk.begin(), [](long long x) { return -x; });
  return normalized({{k, cplx(0, -0.5 * amplitude)}, {mk, cplx(0, 0.5 * amplitude)}});
}

TrigPolynomial operator+(TrigPolynomial a, const TrigPolynomial& b) {
  a.insert(a.end(), b.begin(), b.end());
  return normalized(a);
}

TrigPolynomial normalized(const TrigPolynomial& r) {
  std::map<IntVec, cplx> acc;
  for (const FourierTerm& t : r) acc[t.k] += t.c;
  TrigPolynomial out;
  for (const auto& [k, c] : acc)
    if (c != 0.0) out.push_back({k, c});
  return out;
}

cplx evaluate(const TrigPolynomial& r, const std::vector<double>& x) {
  cplx s = 0.0;
  for (const FourierTerm& t : r) {
    if (t.k.size() != x.size()) throw PreconditionError("point dimension does not match the frequencies");
    s += t.c * phase(t.k, x.data());
  }
  return s;
}

cplx pairing(const TrigPolynomial& r, const TrigPolynomial& phi) {
  std::map<IntVec, cplx> coeff;
  for (const FourierTerm& t : phi) coeff[t.k] += t.c;
  cplx s = 0.0;
  for (const FourierTerm& t : r) {
    IntVec mk(t.k.size());
    std::transform(t.k.begin(), t.k.end(), mk.begin(), [](long long x) { return -x; });
    const auto it = coeff.find(mk);
    if (it != coeff.end()) s += t.c * it->second;
  }
  return s;
}

double coefficient_sum(const TrigPolynomial& r) {
  double s = 0.0;
  for (const FourierTerm& t : r) s += std::abs(t.c);
  return s;
}

namespace {

void require_zero_mean(const TrigPolynomial& r) {
  for (const FourierTerm& t : r)
    if (std::all_of(t.k.begin(), t.k.end(), [](long long x) { return x == 0; }) && std::abs(t.c) > 0.0) {
      std::ostringstream os;
      os << "observable has nonzero mean " << t.c << " (the zero Fourier coefficient must vanish)";
      throw PreconditionError(os.str());
    }
}

// Matrix acting on frequencies for one step of the stream.
IntMatrix stream_matrix(const IntMatrix& m, Direction dir) {
  if (dir == Direction::alpha) return m.transpose();
  if (std::abs(m.determinant()) != 1)
    throw PreconditionError("u_omega needs an invertible map (|det M| = 1); only u_alpha is available");
  return m.inverse().transpose();
}

int coverage_for(const IntMatrix& step, const TrigPolynomial& r, Direction dir, int j_max) {
  // Smallest norm among the first 64 omitted frequencies of every orbit.
  long double smallest = std::numeric_limits<long double>::infinity();
  for (const FourierTerm& t : r) {
    std::vector<long double> v(t.k.begin(), t.k.end());
    const int first = dir == Direction::alpha ? 0 : 1;
    for (int j = 0; j < first + j_max + 64; ++j) {
      if (j > 0 || dir == Direction::omega) {
        std::vector<long double> w(step.n, 0.0L);
        for (int i = 0; i < step.n; ++i)
          for (int c = 0; c < step.n; ++c) w[i] += static_cast<long double>(step(i, c)) * v[c];
        v = w;
      }
      const int index = dir == Direction::alpha ? j : j + 1;
      if (index > j_max) {
        long double n2 = 0;
        for (long double x : v) n2 += x * x;
        smallest = std::min(smallest, std::sqrt(n2));
      }
    }
  }
  if (!std::isfinite(static_cast<double>(smallest))) return 1000;
  const double top = std::log2(kTwoPi * static_cast<double>(smallest));
  return static_cast<int>(std::ceil(top)) - 2;
}

}  // namespace

SparseFourierDistribution birkhoff_fourier(const IntMatrix& m, const TrigPolynomial& r, Direction dir, int j_max) {
  if (j_max < 0) throw PreconditionError("j_max must be nonnegative");
  const TrigPolynomial rn = normalized(r);
  require_zero_mean(rn);
  for (const FourierTerm& t : rn) require_dim(m, t.k);
  const IntMatrix step = stream_matrix(m, dir);
  SparseFourierDistribution u;
  u.direction = dir;
  u.j_max = j_max;
  u.coefficient_sum = coefficient_sum(rn);
  std::map<IntVec, cplx> acc;
  for (const FourierTerm& t : rn) {
    IntVec k = t.k;
    if (dir == Direction::alpha) {
      for (int j = 0; j <= j_max; ++j) {
        acc[k] -= t.c;
        if (j < j_max) k = step.apply(k);
      }
    } else {
      for (int j = 1; j <= j_max; ++j) {
        k = step.apply(k);
        acc[k] += t.c;
      }
    }
  }
  for (const auto& [k, c] : acc)
    if (c != 0.0) u.terms.push_back({k, c});
  u.coverage_level = rn.empty() ? 1000 : coverage_for(step, rn, dir, j_max);
  return u;
}

int required_j_max(const IntMatrix& m, const TrigPolynomial& r, Direction dir, int l_max) {
  const TrigPolynomial rn = normalized(r);
  require_zero_mean(rn);
  if (rn.empty()) return 0;
  const IntMatrix step = stream_matrix(m, dir);
  for (int j = 0; j <= 400; ++j)
    if (coverage_for(step, rn, dir, j) >= l_max) return j;
  throw NumericalError("no truncation up to 400 iterates covers the requested blocks");
}

double bump(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return 1.0;
  if (ax >= 2.0) return 0.0;
  const double h1 = std::exp(-1.0 / (2.0 - ax));
  const double h2 = std::exp(-1.0 / (ax - 1.0));
  return h1 / (h1 + h2);
}

double dyadic_bump(int l, double x) {
  if (l < 0) throw PreconditionError("block index must be nonnegative");
  if (l == 0) return bump(x);
  return bump(std::ldexp(x, -l)) - bump(std::ldexp(x, -(l - 1)));
}

namespace {

struct Block {
  std::vector<IntVec> k;
  std::vector<cplx> c;
};

// Grid sup of |sum c e^{2 pi i a.y}| over y in [0,1)^dim with per-axis sizes.
double grid_sup(const std::vector<IntVec>& a, const std::vector<cplx>& c, const std::vector<long long>& sizes) {
  const int dim = static_cast<int>(sizes.size());
  std::vector<long long> idx(dim, 0);
  std::vector<double> y(dim, 0.0);
  double best = 0.0;
  for (;;) {
    for (int d = 0; d < dim; ++d) y[d] = static_cast<double>(idx[d]) / static_cast<double>(sizes[d]);
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += c[i] * phase(a[i], y.data());
    best = std::max(best, std::abs(s));
    int d = 0;
    while (d < dim && ++idx[d] == sizes[d]) idx[d++] = 0;
    if (d == dim) break;
  }
  return best;
}

// Exact coordinates of k in the span of the basis columns, or nothing when k
// lies outside the span.
std::optional<std::vector<cpp_rational>> solve_exact(const std::vector<IntVec>& basis, const IntVec& k, int n) {
  const int r = static_cast<int>(basis.size());
  std::vector<std::vector<cpp_rational>> a(n, std::vector<cpp_rational>(r + 1));
  for (int row = 0; row < n; ++row) {
    for (int c = 0; c < r; ++c) a[row][c] = basis[c][row];
    a[row][r] = k[row];
  }
  std::vector<int> pivot_row(r, -1);
  int row = 0;
  for (int c = 0; c < r && row < n; ++c) {
    int p = row;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) continue;
    std::swap(a[p], a[row]);
    for (int i = 0; i < n; ++i)
      if (i != row && a[i][c] != 0) {
        const cpp_rational f = a[i][c] / a[row][c];
        for (int j = c; j <= r; ++j) a[i][j] -= f * a[row][j];
      }
    pivot_row[c] = row++;
  }
  for (int i = row; i < n; ++i)
    if (a[i][r] != 0) return std::nullopt;
  std::vector<cpp_rational> sol(r, 0);
  for (int c = 0; c < r; ++c)
    if (pivot_row[c] >= 0) sol[c] = a[pivot_row[c]][r] / a[pivot_row[c]][c];
  return sol;
}

// Coordinates of the block frequencies in a basis chosen among them, or
// nothing if some frequency is not an integer combination of the basis.
std::optional<std::vector<IntVec>> reduce(const Block& b, int n) {
  std::vector<std::size_t> order(b.k.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norm_ld(b.k[i]) < norm_ld(b.k[j]); });
  std::vector<IntVec> basis;
  for (std::size_t i : order) {
    if (!solve_exact(basis, b.k[i], n)) basis.push_back(b.k[i]);
    if (static_cast<int>(basis.size()) == n) break;
  }
  std::vector<IntVec> coords;
  for (const IntVec& k : b.k) {
    const auto sol = solve_exact(basis, k, n);
    if (!sol) return std::nullopt;
    IntVec a;
    for (const cpp_rational& q : *sol) {
      if (denominator(q) != 1) return std::nullopt;
      const cpp_int v = numerator(q);
      if (abs(v) > (1LL << 40)) return std::nullopt;
      a.push_back(static_cast<long long>(v));
    }
    coords.push_back(a);
  }
  return coords;
}

}  // namespace

DyadicBlockProfile besov_profile(const SparseFourierDistribution& u, int l_max, const BesovOptions& opts) {
  if (l_max < 0) throw PreconditionError("l_max must be nonnegative");
  if (l_max > u.coverage_level) {
    std::ostringstream os;
    os << "insufficient coverage: the stream covers blocks up to " << u.coverage_level << " but l_max = " << l_max
       << " (increase j_max)";
    throw PreconditionError(os.str());
  }
  DyadicBlockProfile prof;
  prof.fit_from = opts.fit_from;
  const int n = u.terms.empty() ? 1 : static_cast<int>(u.terms.front().k.size());
  for (int l = 0; l <= l_max; ++l) {
    Block b;
    for (const FourierTerm& t : u.terms) {
      const double w = dyadic_bump(l, kTwoPi * static_cast<double>(norm_ld(t.k)));
      if (w != 0.0) {
        b.k.push_back(t.k);
        b.c.push_back(t.c * w);
      }
    }
    prof.frequencies.push_back(static_cast<int>(b.k.size()));
    if (b.k.empty()) {
      prof.sups.push_back(0.0);
      prof.reduced.push_back(true);
      continue;
    }
    const auto coords = reduce(b, n);
    std::vector<long long> sizes;
    long long total = 1;
    const std::vector<IntVec>& a = coords ? *coords : b.k;
    const int dim = static_cast<int>(a.front().size());
    for (int d = 0; d < dim; ++d) {
      long long mx = 1;
      for (const IntVec& v : a) mx = std::max(mx, std::abs(v[d]));
      sizes.push_back(opts.grid_density * mx);
      total = sizes.back() > opts.max_grid_points / total ? opts.max_grid_points + 1 : total * sizes.back();
    }
    if (total > opts.max_grid_points) {
      std::ostringstream os;
      os << "block " << l << " needs more than " << opts.max_grid_points << " grid points";
      throw NumericalError(os.str());
    }
    prof.sups.push_back(grid_sup(a, b.c, sizes));
    prof.reduced.push_back(coords.has_value());
  }
  std::vector<double> fx, fy;
  for (int l = std::max(0, opts.fit_from); l <= l_max; ++l)
    if (prof.sups[l] > 1e-300) {
      fx.push_back(std::log(1.0 + l));
      fy.push_back(std::log(prof.sups[l]));
    }
  if (fx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
      mx += fx[i];
      my += fy[i];
    }
    mx /= fx.size();
    my /= fx.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
      sxx += (fx[i] - mx) * (fx[i] - mx);
      sxy += (fx[i] - mx) * (fy[i] - my);
    }
    prof.growth_exponent = sxy / sxx;
  }
  prof.classification = prof.growth_exponent <= 0.05 ? "Lambda0" : prof.growth_exponent <= 1.05 ? "log-Besov" : "unbounded";
  return prof;
}

double directional_derivative(const HyperbolicMatrix& h, const TrigPolynomial& r, Direction dist, char direction,
                              const std::array<double, 2>& x, double tol) {
  if (h.m.n != 2) throw PreconditionError("directional derivatives need n = 2");
  const bool stable = direction == 's';
  if (!stable && direction != 'u') throw PreconditionError("direction must be 's' or 'u'");
  if ((dist == Direction::alpha) != stable)
    throw PreconditionError(stable ? "D_s u_omega diverges; use u_alpha for the stable direction"
                                   : "D_u u_alpha diverges; use u_omega for the unstable direction");
  const TrigPolynomial rn = normalized(r);
  require_zero_mean(rn);
  const std::array<double, 2> v = stable ? h.v_s : h.v_u;
  const double rate = stable ? std::abs(h.lambda_s) : 1.0 / std::abs(h.lambda_u);
  const double factor = stable ? h.lambda_s : 1.0 / h.lambda_u;
  const IntMatrix step = stable ? h.m.transpose() : h.m.inverse().transpose();
  // grad R . v has coefficients c 2 pi i (k.v) at frequency k.
  double amp = 0.0;
  std::vector<cplx> coef;
  std::vector<IntVec> freq;
  for (const FourierTerm& t : rn) {
    coef.push_back(t.c * cplx(0, kTwoPi) * (t.k[0] * v[0] + t.k[1] * v[1]));
    freq.push_back(t.k);
    amp += std::abs(coef.back());
  }
  if (amp == 0.0) return 0.0;
  double sum = 0.0, weight = 1.0;
  int j = stable ? 0 : 1;
  if (!stable) {
    for (IntVec& k : freq) k = step.apply(k);
    weight = factor;
  }
  for (;; ++j) {
    cplx term = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) term += coef[i] * phase(freq[i], x.data());
    sum += weight * term.real();
    weight *= factor;
    if (amp * std::abs(weight) / (1.0 - rate) < tol) break;
    if (j > 2000) throw NumericalError("directional derivative series did not converge");
    for (IntVec& k : freq) k = step.apply(k);
  }
  return stable ? -sum : sum;
}

std::array<double, 2> infinitesimal_deformation(const HyperbolicMatrix& h, const VectorField& w,
                                                const std::array<double, 2>& x, double tol) {
  if (h.m.n != 2) throw PreconditionError("infinitesimal deformations need n = 2");
  const TrigPolynomial w1 = normalized(w.w1), w2 = normalized(w.w2);
  for (const auto* p : {&w1, &w2})
    for (const FourierTerm& t : *p) require_dim(h.m, t.k);
  const IntMatrix fwd = h.m.transpose();             // frequencies of W o F^k
  const IntMatrix bwd = h.m.inverse().transpose();   // frequencies of W o F^{-k}
  // Projection coefficients: a_s(W) = P0 . W, a_u(W) = P1 . W.
  const std::array<double, 2> s_of_e1 = h.split({1, 0}), s_of_e2 = h.split({0, 1});
  const double bound_w = std::max(coefficient_sum(w1), coefficient_sum(w2));
  const double bound_s = (std::abs(s_of_e1[0]) + std::abs(s_of_e2[0])) * bound_w;
  const double bound_u = (std::abs(s_of_e1[1]) + std::abs(s_of_e2[1])) * bound_w;

  auto eval_w = [&](const TrigPolynomial& p, const std::vector<IntVec>& ks) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i].c * phase(ks[i], x.data());
    return s.real();
  };
  auto freqs = [](const TrigPolynomial& p) {
    std::vector<IntVec> ks;
    for (const FourierTerm& t : p) ks.push_back(t.k);
    return ks;
  };
  auto advance = [](const IntMatrix& m, std::vector<IntVec>& ks) {
    for (IntVec& k : ks) k = m.apply(k);
  };

  std::array<double, 2> alpha{0.0, 0.0};
  // Stable part: sum_{k>=0} lambda_s^k a_s(W(F^{-(k+1)} x)) v_s.
  {
    std::vector<IntVec> k1 = freqs(w1), k2 = freqs(w2);
    advance(bwd, k1);
    advance(bwd, k2);
    double weight = 1.0, total = 0.0;
    const double rate = std::abs(h.lambda_s);
    for (int k = 0; bound_s > 0.0; ++k) {
      const double a_s = s_of_e1[0] * eval_w(w1, k1) + s_of_e2[0] * eval_w(w2, k2);
      total += weight * a_s;
      weight *= h.lambda_s;
      if (bound_s * std::abs(weight) / (1.0 - rate) < tol) break;
      if (k > 2000) throw NumericalError("deformation series did not converge");
      advance(bwd, k1);
      advance(bwd, k2);
    }
    alpha[0] += total * h.v_s[0];
    alpha[1] += total * h.v_s[1];
  }
  // Unstable part: -sum_{k>=0} lambda_u^{-(k+1)} a_u(W(F^k x)) v_u.
  {
    std::vector<IntVec> k1 = freqs(w1), k2 = freqs(w2);
    double weight = 1.0 / h.lambda_u, total = 0.0;
    const double rate = 1.0 / std::abs(h.lambda_u);
    for (int k = 0; bound_u > 0.0; ++k) {
      const double a_u = s_of_e1[1] * eval_w(w1, k1) + s_of_e2[1] * eval_w(w2, k2);
      total += weight * a_u;
      weight /= h.lambda_u;
      if (bound_u * std::abs(weight) / (1.0 - rate) < tol) break;
      if (k > 2000) throw NumericalError("deformation series did not converge");
      advance(fwd, k1);
      advance(fwd, k2);
    }
    alpha[0] -= total * h.v_u[0];
    alpha[1] -= total * h.v_u[1];
  }
  return alpha;
}

std::vector<double> deformation_second_differences(const HyperbolicMatrix& h, const VectorField& w,
                                                   const std::array<double, 2>& x, const std::array<double, 2>& e,
                                                   const std::vector<double>& hs, double tol) {
  const std::array<double, 2> mid = infinitesimal_deformation(h, w, x, tol);
  std::vector<double> out;
  for (double step : hs) {
    if (!(step > 0.0)) throw PreconditionError("scales must be positive");
    const std::array<double, 2> xp{x[0] + step * e[0], x[1] + step * e[1]};
    const std::array<double, 2> xm{x[0] - step * e[0], x[1] - step * e[1]};
    const std::array<double, 2> ap = infinitesimal_deformation(h, w, xp, tol);
    const std::array<double, 2> am = infinitesimal_deformation(h, w, xm, tol);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(ap[i] + am[i] - 2.0 * mid[i]) / step);
    out.push_back(worst);
  }
  return out;
}

namespace {

struct BigTerm {
  BigVec k;
  cplx c;
};

cplx pair_big(const std::vector<BigTerm>& terms, const std::map<IntVec, cplx>& phi) {
  cplx s = 0.0;
  for (const BigTerm& t : terms) {
    BigVec mk = t.k;
    for (cpp_int& v : mk) v = -v;
    const auto small = to_small(mk);
    if (!small) continue;
    const auto it = phi.find(*small);
    if (it != phi.end()) s += t.c * it->second;
  }
  return s;
}

bool is_zero_vec(const BigVec& v) {
  return std::all_of(v.begin(), v.end(), [](const cpp_int& x) { return x == 0; });
}

// First index from which the orbits of all nonzero frequencies stay outside
// the ball containing phi's frequencies (checked over a 64-step window).
std::optional<int> leave_index(const IntMatrix& step, const std::vector<BigTerm>& start, const cpp_int& radius2) {
  std::vector<BigVec> cur;
  for (const BigTerm& t : start)
    if (!is_zero_vec(t.k)) cur.push_back(t.k);
  if (cur.empty()) return 0;
  std::vector<std::vector<bool>> outside(cur.size());
  constexpr int kWindow = 64, kCap = 4096;
  for (int i = 0; i <= kCap + kWindow; ++i) {
    for (std::size_t q = 0; q < cur.size(); ++q) {
      outside[q].push_back(norm2(cur[q]) > radius2);
      cur[q] = apply_big(step, cur[q]);
    }
    if (i >= kWindow) {
      const int s = i - kWindow;
      bool ok = true;
      for (std::size_t q = 0; q < cur.size() && ok; ++q)
        for (int t = s; t <= i && ok; ++t) ok = outside[q][t];
      if (ok) return s;
    }
  }
  return std::nullopt;
}

}  // namespace

AdvectResult advect(const IntMatrix& m, const TrigPolynomial& r, const TrigPolynomial& rho0,
                    const TrigPolynomial& phi, int j) {
  if (j < 0) throw PreconditionError("j must be nonnegative");
  const TrigPolynomial rn = normalized(r);
  for (const FourierTerm& t : rn)
    if (std::all_of(t.k.begin(), t.k.end(), [](long long x) { return x == 0; }))
      throw PreconditionError("R has nonzero mean: the total charge is not conserved");
  const IntMatrix step = stream_matrix(m, Direction::omega);
  std::map<IntVec, cplx> phi_coeff;
  cpp_int radius2 = 0;
  for (const FourierTerm& t : normalized(phi)) {
    require_dim(m, t.k);
    phi_coeff[t.k] += t.c;
    radius2 = std::max(radius2, norm2(to_big(t.k)));
  }
  std::vector<BigTerm> rho_terms, r_terms;
  for (const FourierTerm& t : normalized(rho0)) rho_terms.push_back({to_big(t.k), t.c});
  for (const FourierTerm& t : rn) r_terms.push_back({to_big(t.k), t.c});

  AdvectResult res;
  cplx r_part = 0.0;
  std::vector<BigTerm> rho_j = rho_terms, r_j = r_terms;
  for (int i = 0; i <= j; ++i) {
    res.q.push_back(pair_big(rho_j, phi_coeff) + r_part);
    for (BigTerm& t : rho_j) t.k = apply_big(step, t.k);
    for (BigTerm& t : r_j) t.k = apply_big(step, t.k);
    r_part += pair_big(r_j, phi_coeff);  // L^{i+1} R enters rho_{i+1}
  }

  // Limits: R part sums L^i R for i >= 1 until its frequencies leave phi.
  std::vector<BigTerm> r1 = r_terms;
  for (BigTerm& t : r1) t.k = apply_big(step, t.k);
  const auto s_r = leave_index(step, r1, radius2);
  const auto s_rho = leave_index(step, rho_terms, radius2);
  if (s_r && s_rho) {
    cplx u = 0.0;
    std::vector<BigTerm> cur = r1;
    for (int i = 0; i < *s_r; ++i) {
      u += pair_big(cur, phi_coeff);
      for (BigTerm& t : cur) t.k = apply_big(step, t.k);
    }
    res.u_omega = u;
    cplx rho_limit = 0.0;
    for (const BigTerm& t : rho_terms)
      if (is_zero_vec(t.k)) rho_limit += t.c * pair_big({t}, phi_coeff) / t.c;
    res.limit = u + rho_limit;
    res.stabilized_at = std::max(*s_r + 1, *s_rho);
  }
  return res;
}

DecayFit correlation_decay_fit(const IntMatrix& m, const TrigPolynomial& r, const TrigPolynomial& phi, int j_max) {
  if (j_max < 1) throw PreconditionError("j_max must be at least 1");
  const IntMatrix step = m.transpose();
  std::map<IntVec, cplx> phi_coeff;
  for (const FourierTerm& t : normalized(phi)) {
    require_dim(m, t.k);
    phi_coeff[t.k] += t.c;
  }
  std::vector<BigTerm> cur;
  for (const FourierTerm& t : normalized(r)) cur.push_back({to_big(t.k), t.c});
  DecayFit fit;
  for (int j = 0; j <= j_max; ++j) {
    fit.correlations.push_back(pair_big(cur, phi_coeff));
    for (BigTerm& t : cur) t.k = apply_big(step, t.k);
  }
  std::vector<double> xs, ys;
  for (int j = 0; j <= j_max; ++j)
    if (std::abs(fit.correlations[j]) > 1e-300) {
      xs.push_back(j);
      ys.push_back(std::log(std::abs(fit.correlations[j])));
    }
  constexpr double kCap = 30.0;
  if (xs.empty()) {
    fit.c2 = kCap;
    return fit;
  }
  if (xs.size() == 1) {
    fit.c2 = kCap;
  } else {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.c2 = std::min(kCap, -sxy / sxx);
  }
  if (!(fit.c2 > 0.0)) {
    std::ostringstream os;
    os << "no decay detected: fitted rate " << fit.c2 << " is not positive";
    throw NumericalError(os.str());
  }
  for (std::size_t i = 0; i < xs.size(); ++i) fit.c1 = std::max(fit.c1, std::exp(ys[i] + fit.c2 * xs[i]));
  fit.block_constant = fit.c1 / (1.0 - std::exp(-fit.c2));
  return fit;
}

}  // namespace birkhoff::torus
