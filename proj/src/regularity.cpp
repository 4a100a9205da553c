#include "birkhoff/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "birkhoff/errors.hpp"
#include "birkhoff/parallel.hpp"
#include "birkhoff/variance.hpp"

namespace birkhoff {

std::vector<double> dyadic_grid(double a, double b, int level) {
  if (level < 0 || level > 30) throw PreconditionError("dyadic level must be in [0, 30]");
  const int n = 1 << level;
  std::vector<double> xs(n + 1);
  for (int i = 0; i <= n; ++i) xs[i] = a + (b - a) * i / n;
  xs[n] = b;
  return xs;
}

std::vector<cplx> primitive_on_grid(const System& sys, const PiecewiseFunction& phi, const std::vector<double>& xs,
                                    double tol, int threads) {
  check_orthogonality(sys, phi, 1e-8);
  std::vector<cplx> out(xs.size());
  parallel_for(static_cast<int>(xs.size()), threads,
               [&](int i) { out[i] = primitive(sys, phi, xs[i], tol).value; });
  return out;
}

namespace {

int grid_level(std::size_t points) {
  int k = 0;
  while ((std::size_t{1} << k) + 1 < points) ++k;
  if ((std::size_t{1} << k) + 1 != points) throw PreconditionError("grid must have 2^K + 1 points");
  return k;
}

}  // namespace

LogLipschitzResult log_lipschitz_ratio(const std::vector<double>& xs, const std::vector<cplx>& psi) {
  if (xs.size() != psi.size()) throw PreconditionError("grid and values differ in length");
  const int K = grid_level(xs.size());
  const int n = 1 << K;
  LogLipschitzResult res;
  // by_sep[j]: sup over pairs 2^j grid steps apart.
  std::vector<double> by_sep(K + 1, 0.0);
  std::vector<std::pair<int, int>> arg(K + 1, {0, 0});
  for (int j = 0; j <= K; ++j) {
    const int s = 1 << j;
    for (int i = 0; i + s <= n; i += 1) {
      const double dx = xs[i + s] - xs[i];
      const double r = std::abs(psi[i + s] - psi[i]) / (dx * (1.0 + std::abs(std::log(dx))));
      if (r > by_sep[j]) {
        by_sep[j] = r;
        arg[j] = {i, i + s};
      }
    }
  }
  // Subgrid of level m uses separations 2^j with j >= K - m, restricted to its nodes.
  for (int m = 1; m <= K; ++m) {
    double best = 0.0;
    const int stride = 1 << (K - m);
    for (int j = K - m; j <= K; ++j) {
      const int s = 1 << j;
      for (int i = 0; i + s <= n; i += stride) {
        const double dx = xs[i + s] - xs[i];
        best = std::max(best, std::abs(psi[i + s] - psi[i]) / (dx * (1.0 + std::abs(std::log(dx)))));
      }
    }
    res.level_ratios.push_back(best);
  }
  for (int j = 0; j <= K; ++j)
    if (by_sep[j] >= res.ratio) {
      res.ratio = by_sep[j];
      res.x = xs[arg[j].first];
      res.y = xs[arg[j].second];
    }
  if (res.level_ratios.size() >= 2) {
    const double last = res.level_ratios.back(), prev = res.level_ratios[res.level_ratios.size() - 2];
    res.stable = last == 0.0 || std::abs(last - prev) <= 0.05 * last;
  } else {
    res.stable = true;
  }
  return res;
}

BvTestResult bv_test(const std::vector<double>& xs, const std::vector<cplx>& psi) {
  if (xs.size() != psi.size()) throw PreconditionError("grid and values differ in length");
  const int K = grid_level(xs.size());
  if (K < 3) throw PreconditionError("bv_test needs at least 3 dyadic levels");
  BvTestResult res;
  const int n = 1 << K;
  // Variation sums on nested subgrids never decrease (triangle inequality).
  for (int m = 1; m <= K; ++m) {
    const int stride = 1 << (K - m);
    double v = 0.0;
    for (int i = 0; i + stride <= n; i += stride) v += std::abs(psi[i + stride] - psi[i]);
    res.variations.push_back(v);
  }
  // Geometric rate of the variation increments over the finest levels.
  const std::size_t L = res.variations.size();
  const double scale = std::max(1e-300, res.variations.back());
  const std::size_t first = L > 7 ? L - 6 : 1;
  std::vector<double> lv, li;
  bool all_flat = true;
  for (std::size_t m = first; m < L; ++m) {
    const double inc = res.variations[m] - res.variations[m - 1];
    if (inc > 1e-12 * scale) all_flat = false;
    lv.push_back(static_cast<double>(m));
    li.push_back(std::log(std::max(inc, 1e-16 * scale)));
  }
  res.increment_ratio = all_flat ? 0.0 : std::exp(least_squares(lv, li).slope);
  res.bounded = res.increment_ratio <= 0.75;
  res.verdict = res.bounded ? "bounded" : "diverging";
  return res;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("least squares needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("least squares needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

namespace {

bool is_critical(const PiecewiseMap& map, double x, double tol) {
  for (double c : map.critical_set())
    if (std::abs(c - x) <= tol) return true;
  return false;
}

bool same_point(const LateralPoint& p, const LateralPoint& q, double tol) {
  return p.side == q.side && std::abs(p.x - q.x) <= tol;
}

// theta / ln|multiplier| of the cycle eventually reached by the lateral orbit of p.
std::optional<double> cycle_value(const PiecewiseMap& map, const PiecewiseFunction& phi, LateralPoint p,
                                  int max_steps) {
  const double tol = 1e-9 * map.length();
  std::vector<LateralPoint> orbit{p};
  for (int step = 0; step < max_steps; ++step) {
    p = map.eval_lateral(p);
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      if (!same_point(orbit[i], p, tol)) continue;
      cplx theta = 0.0;
      double log_mult = 0.0;
      for (std::size_t k = i; k < orbit.size(); ++k) {
        theta += eval_lateral(phi, orbit[k]);
        log_mult += std::log(std::abs(map.derivative(orbit[k])));
      }
      return theta.real() / log_mult;
    }
    orbit.push_back(p);
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> predicted_zygmund_slope(const PiecewiseMap& map, const PiecewiseFunction& phi, double x,
                                              int max_steps) {
  const double tol = 1e-12 * map.length();
  if (x <= map.lower() || x >= map.upper() || !is_critical(map, x, tol)) return 0.0;
  const auto minus = cycle_value(map, phi, map.eval_lateral({x, Side::minus}), max_steps);
  const auto plus = cycle_value(map, phi, map.eval_lateral({x, Side::plus}), max_steps);
  if (!minus || !plus) return std::nullopt;
  return *plus - *minus;
}

ModulusProfile zygmund_profile(const System& sys, const PiecewiseFunction& phi, double x,
                               const std::vector<double>& hs, const ZygmundOptions& opts) {
  check_orthogonality(sys, phi, 1e-8);
  if (hs.size() < 2) throw PreconditionError("zygmund_profile needs at least two scales");
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1])) throw PreconditionError("scales must be strictly decreasing");
  const PiecewiseMap& map = sys.map;
  const double a = map.lower(), b = map.upper();
  const double hmax = hs.front();
  if (!(hs.back() > 0) || x - hmax < a || x + hmax > b) throw PreconditionError("probe x must be interior at all scales");

  ModulusProfile prof;
  prof.x = x;
  prof.scales = hs;
  // Distance from x to the forward critical orbits, ignoring x itself.
  const double self_tol = 1e-12 * map.length();
  prof.separation = map.length();
  for (double c : map.critical_set()) {
    for (Side s : {Side::minus, Side::plus}) {
      if ((c <= a && s == Side::minus) || (c >= b && s == Side::plus)) continue;
      LateralPoint p{c, s};
      for (int k = 0; k <= opts.orbit_depth; ++k) {
        const double dist = std::abs(p.x - x);
        if (dist > self_tol) prof.separation = std::min(prof.separation, dist);
        p = map.eval_lateral(p);
      }
    }
  }
  if (prof.separation <= hmax) {
    std::ostringstream os;
    os << "probe too close to the critical orbit: separation " << prof.separation << " <= max h " << hmax;
    throw PreconditionError(os.str());
  }

  std::vector<double> lx, ly;
  for (double h : hs) {
    const PiecewiseFunction gamma =
        PiecewiseFunction::indicator(a, b, x, x + h) - PiecewiseFunction::indicator(a, b, x - h, x);
    SeriesOptions so;
    so.tol = opts.rel_tol * h;
    const double d2 = adjoint_series(sys, phi, gamma, so).value.real() + peripheral_correction(sys, phi, gamma).real();
    prof.second_differences.push_back(d2);
    lx.push_back(std::log(1.0 / h));
    ly.push_back(d2 / h);
  }
  prof.fit = least_squares(lx, ly);
  prof.zygmund = std::abs(prof.fit.slope) < opts.zygmund_tol;
  prof.predicted_slope = predicted_zygmund_slope(map, phi, x, opts.orbit_depth);
  return prof;
}

HolderConvergence holder_convergence(const System& sys, const PiecewiseFunction& phi, double beta, int n_max,
                                     int level) {
  if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("beta must lie in (0, 1)");
  if (n_max < 1) throw PreconditionError("n_max must be positive");
  check_orthogonality(sys, phi, 1e-8);
  const std::vector<double> xs = dyadic_grid(sys.map.lower(), sys.map.upper(), level);
  const int p = sys.period();
  const int npts = static_cast<int>(xs.size());
  // suffix[i][n] = psi(x_i) - psi_n(x_i) from the recorded terms.
  std::vector<std::vector<cplx>> err(npts, std::vector<cplx>(n_max + 1, 0.0));
  parallel_for(npts, 0, [&](int i) {
    if (xs[i] <= sys.map.lower()) return;
    SeriesOptions so;
    so.tol = 1e-13;
    so.keep_terms = true;
    so.min_blocks = n_max + 2;
    const SeriesResult r = adjoint_series(
        sys, phi, PiecewiseFunction::indicator(sys.map.lower(), sys.map.upper(), sys.map.lower(), xs[i]), so);
    const int total = static_cast<int>(r.term_values.size());
    std::vector<cplx> suffix(total + 1, 0.0);
    for (int k = total - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + r.term_values[k];
    for (int n = 0; n <= n_max; ++n) err[i][n] = suffix[std::min(total, (n + 1) * p)];
  });
  HolderConvergence out;
  out.beta = beta;
  const int n_grid = npts - 1;
  for (int n = 0; n <= n_max; ++n) {
    double sup = 0.0, semi = 0.0;
    for (int i = 0; i < npts; ++i) sup = std::max(sup, std::abs(err[i][n]));
    for (int s = 1; s <= n_grid; s *= 2)
      for (int i = 0; i + s <= n_grid; ++i)
        semi = std::max(semi, std::abs(err[i + s][n] - err[i][n]) / std::pow(xs[i + s] - xs[i], beta));
    out.ns.push_back(n);
    out.distances.push_back(sup + semi);
  }
  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < out.ns.size(); ++k)
    if (out.distances[k] > 1e-14) {
      fx.push_back(out.ns[k]);
      fy.push_back(std::log(out.distances[k]));
    }
  out.rate = fx.size() >= 2 ? std::exp(least_squares(fx, fy).slope) : 0.0;
  return out;
}

double lyapunov_exponent(const System& sys, int l) {
  const UlamDiscretization& u = *sys.ulam;
  const BinVector& rho = sys.decomp->density(l);
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  double s = 0.0;
  for (int i = 0; i < u.bins(); ++i) {
    if (rho[i] == 0.0) continue;
    const double lo = u.edges()[i], hi = u.edges()[i + 1];
    double avg = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[q];
      avg += 0.5 * gw[q] * std::log(std::abs(sys.map.derivative({x, Side::plus})));
    }
    s += rho[i].real() * avg * (hi - lo);
  }
  return s;
}

CltResult clt_modulus(const System& sys, const PiecewiseFunction& phi, int l, double h, int samples,
                      std::uint64_t seed, int threads) {
  const SpectralDecomposition& d = *sys.decomp;
  if (l < 0 || l >= d.components()) throw PreconditionError("component index out of range");
  if (!(h > 0.0) || h >= 0.5 * sys.map.length()) throw PreconditionError("h must be small and positive");
  if (samples < 1) throw PreconditionError("sample count must be positive");
  CltResult res;
  res.h = h;
  const double s2 = sigma2_component(sys, phi, l);
  if (!(s2 > 1e-10)) {
    std::ostringstream os;
    os << "degenerate variance sigma^2 = " << s2 << ": the limit theorem needs sigma > 0";
    throw PreconditionError(os.str());
  }
  res.sigma = std::sqrt(s2);
  res.lyapunov = lyapunov_exponent(sys, l);
  const double norm = h * res.sigma * std::sqrt(std::log(1.0 / h) / res.lyapunov);

  // Inverse CDF of the bin density restricted to [a, b - h].
  const UlamDiscretization& u = *sys.ulam;
  const BinVector& rho = d.density(l);
  const double a = sys.map.lower(), b = sys.map.upper();
  std::vector<double> cdf(u.bins() + 1, 0.0);
  for (int i = 0; i < u.bins(); ++i) {
    const double lo = u.edges()[i], hi = std::min(u.edges()[i + 1], b - h);
    cdf[i + 1] = cdf[i] + (hi > lo ? std::max(0.0, rho[i].real()) * (hi - lo) : 0.0);
  }
  const double total = cdf.back();
  res.xs.resize(samples);
  res.z.resize(samples);
  parallel_for(samples, threads, [&](int k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    const double target = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const int i = std::clamp(static_cast<int>(it - cdf.begin()) - 1, 0, u.bins() - 1);
    const double mass = cdf[i + 1] - cdf[i];
    const double lo = u.edges()[i], hi = std::min(u.edges()[i + 1], b - h);
    const double x = mass > 0 ? lo + (hi - lo) * (target - cdf[i]) / mass : lo;
    SeriesOptions so;
    so.tol = 1e-6 * h;
    const PiecewiseFunction gamma = PiecewiseFunction::indicator(a, b, x, x + h);
    const cplx inc = adjoint_series(sys, phi, gamma, so).value + peripheral_correction(sys, phi, gamma);
    res.xs[k] = x;
    res.z[k] = inc.real() / norm;
  });
  std::vector<double> sorted = res.z;
  std::sort(sorted.begin(), sorted.end());
  const double n = samples;
  for (int i = 0; i < samples; ++i) {
    const double F = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
    res.ks = std::max({res.ks, (i + 1) / n - F, F - i / n});
  }
  return res;
}

int n_scale(const PiecewiseMap& map, double x, double h) {
  if (!(h > 0.0)) throw PreconditionError("h must be positive");
  const double tol = 1e-14 * map.length();
  std::vector<double> interior;
  for (double c : map.critical_set())
    if (c > map.lower() + tol && c < map.upper() - tol) interior.push_back(c);
  LateralPoint p{x, Side::plus};
  double D = 1.0;
  int k = 0;
  for (;;) {
    for (double c : interior)
      if (std::abs(p.x - c) <= tol) {
        std::ostringstream os;
        os << "orbit of x hits the critical set at iterate " << k << " before h is bracketed";
        throw PreconditionError(os.str());
      }
    const double next = D * std::abs(map.derivative(p));
    if (h > (1.0 / next) * (1.0 + 1e-12)) return k;
    D = next;
    p = map.eval_lateral(p);
    ++k;
    if (k > 4096) throw NumericalError("n_scale did not bracket h within 4096 iterates");
  }
}

}  // namespace birkhoff
