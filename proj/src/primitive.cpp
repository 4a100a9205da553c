#include "birkhoff/primitive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "birkhoff/errors.hpp"

namespace birkhoff {

System::System(PiecewiseMap m, const AnalysisOptions& options) : map(std::move(m)) {
  ulam = std::make_shared<UlamDiscretization>(map, options.bins);
  PeripheralSpectrum spec = peripheral_spectrum(*ulam, options.gap_tol, options.dense_limit);
  decomp = std::make_shared<SpectralDecomposition>(ulam, std::move(spec), options.n_avg, options.support_floor);
  lasota_yorke = lasota_yorke_check(map, lasota_yorke_samples(map, options.ly_samples, options.ly_seed),
                                    options.ly_iterates);
}

double System::contraction() const {
  if (lasota_yorke.contracting_iterate > 0) return lasota_yorke.rate;
  return 1.0 / map.expansion_floor();
}

double sup_norm(const PiecewiseFunction& phi) { return phi.sup_abs(); }

void check_orthogonality(const System& sys, const PiecewiseFunction& phi, double tol) {
  const UlamDiscretization& u = *sys.ulam;
  const std::vector<cplx> bins = phi.bin_integrals(u.edges());
  const double scale = std::max(1.0, sup_norm(phi));
  std::ostringstream bad;
  bool violated = false;
  for (int l = 0; l < sys.decomp->components(); ++l) {
    cplx m = 0.0;
    const BinVector& rho = sys.decomp->density(l);
    for (int i = 0; i < u.bins(); ++i) m += rho[i] * bins[i];
    if (std::abs(m) > tol * scale) {
      bad << (violated ? "; " : "") << "component " << l << ": int phi rho_l dm = " << m.real()
          << (m.imag() != 0.0 ? " + " + std::to_string(m.imag()) + "i" : "");
      violated = true;
    }
  }
  if (violated)
    throw PreconditionError("observable is not orthogonal to the invariant densities (zero-mean requirement): " +
                            bad.str());
}

TruncationRule truncation_rule(const System& sys, const PiecewiseFunction& gamma, int block) {
  TruncationRule rule;
  rule.contraction = sys.contraction();
  rule.tail_rate = sys.decomp->tail_rate();
  rule.tail_constant = sys.decomp->tail_constant();
  const double l1 = gamma.l1_norm();
  if (l1 <= 0.0) return rule;
  const double bv = gamma.bv_norm();
  rule.formula = std::max(0.0, (std::log(bv) - std::log(l1)) / (-std::log(rule.contraction)));
  rule.i0 = block * static_cast<int>(std::ceil(rule.formula / block - 1e-12));
  return rule;
}

namespace {

// Shared driver for both routes: State carries L^k gamma.
template <class State, class Inner, class Step, class Dist>
SeriesResult run_series(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma,
                        const SeriesOptions& opts, State g, Inner inner_fn, Step step, Dist dist) {
  SeriesResult res;
  const int block = opts.block > 0 ? opts.block : sys.period();
  res.rule = truncation_rule(sys, gamma, block);
  const double r = sys.decomp->tail_rate();
  if (!(r < 1.0)) throw NumericalError("tail rate r >= 1: decomposition unusable for the truncation rule");
  const double C = sys.decomp->tail_constant();
  const double rb = std::pow(r, block);
  const double phi_sup = sup_norm(phi);
  for (int n = 1; n <= opts.max_blocks; ++n) {
    State start = g;
    for (int j = 0; j < block; ++j) {
      const cplx t = inner_fn(g);
      res.value += t;
      if (opts.keep_terms) res.term_values.push_back(t);
      g = step(g);
    }
    res.terms = n * block;
    // ||K^{(n-1)b} gamma|| <= sum_{m >= n-1} ||L^{mb} gamma - L^{(m+1)b} gamma||.
    const double d = dist(start, g);
    const double k_est = d / (1.0 - rb);
    res.tail_bound = phi_sup * C * rb / (1.0 - r) * k_est;
    if (res.terms >= res.rule.i0 && n >= opts.min_blocks && res.tail_bound <= opts.tol) return res;
  }
  std::ostringstream os;
  os << "series did not reach tail tolerance " << opts.tol << " within " << opts.max_blocks
     << " blocks (last bound " << res.tail_bound << ")";
  throw NumericalError(os.str());
}

}  // namespace

SeriesResult adjoint_series(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma,
                            const SeriesOptions& opts) {
  const bool exact = opts.route == Route::exact && sys.map.affine();
  if (exact) {
    return run_series(
        sys, phi, gamma, opts, gamma, [&](const PiecewiseFunction& g) { return inner(phi, g); },
        [&](const PiecewiseFunction& g) { return apply_transfer(sys.map, g); },
        [](const PiecewiseFunction& x, const PiecewiseFunction& y) {
          const PiecewiseFunction d = (x - y).simplified();
          return d.is_zero() ? 0.0 : d.bv_norm();
        });
  }
  const UlamDiscretization& u = *sys.ulam;
  const std::vector<cplx> phi_bins = phi.bin_integrals(u.edges());
  return run_series(
      sys, phi, gamma, opts, u.average(gamma),
      [&](const BinVector& v) {
        cplx acc = 0.0;
        for (int i = 0; i < u.bins(); ++i) acc += phi_bins[i] * v[i];
        return acc;
      },
      [&](const BinVector& v) { return u.apply_transfer(v); },
      [&](const BinVector& x, const BinVector& y) {
        BinVector d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
        return bin_bv(u, d);
      });
}

namespace {

std::vector<cplx> leading_terms(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma,
                                int count, Route route) {
  std::vector<cplx> out;
  out.reserve(count);
  if (route == Route::exact && sys.map.affine()) {
    PiecewiseFunction g = gamma;
    for (int k = 0; k < count; ++k) {
      out.push_back(inner(phi, g));
      if (k + 1 < count) g = apply_transfer(sys.map, g);
    }
    return out;
  }
  const UlamDiscretization& u = *sys.ulam;
  const std::vector<cplx> phi_bins = phi.bin_integrals(u.edges());
  BinVector v = u.average(gamma);
  for (int k = 0; k < count; ++k) {
    cplx acc = 0.0;
    for (int i = 0; i < u.bins(); ++i) acc += phi_bins[i] * v[i];
    out.push_back(acc);
    if (k + 1 < count) v = u.apply_transfer(v);
  }
  return out;
}

}  // namespace

cplx primitive_partial(const System& sys, const PiecewiseFunction& phi, int p, int n, double x, Route route) {
  if (p < 1 || p % sys.period() != 0) throw PreconditionError("block length p must be a multiple of p(f)");
  if (n < 0) throw PreconditionError("n must be nonnegative");
  check_orthogonality(sys, phi, 1e-8);
  const double a = sys.map.lower();
  if (x <= a) return 0.0;
  const std::vector<cplx> t =
      leading_terms(sys, phi, PiecewiseFunction::indicator(a, sys.map.upper(), a, x), (n + 1) * p, route);
  cplx s = 0.0;
  for (const cplx& v : t) s += v;
  return s;
}

PrimitiveEvaluation primitive(const System& sys, const PiecewiseFunction& phi, double x, double tol, Route route,
                              int p) {
  if (!(tol > 0)) throw PreconditionError("tolerance must be positive");
  if (p != 0 && p % sys.period() != 0) throw PreconditionError("block length p must be a multiple of p(f)");
  check_orthogonality(sys, phi, 1e-8);
  PrimitiveEvaluation ev;
  ev.x = x;
  const double a = sys.map.lower();
  if (x <= a) return ev;
  SeriesOptions opts;
  opts.tol = tol;
  opts.route = route;
  opts.block = p;
  const SeriesResult r = adjoint_series(sys, phi, PiecewiseFunction::indicator(a, sys.map.upper(), a, x), opts);
  ev.value = r.value;
  ev.truncation_index = r.terms;
  ev.tail_bound = r.tail_bound;
  ev.i0 = r.rule.i0;
  return ev;
}

RouteComparison primitive_both_routes(const System& sys, const PiecewiseFunction& phi, const std::vector<double>& xs,
                                      double tol, double agreement_tol) {
  RouteComparison cmp;
  for (double x : xs) {
    cmp.exact.push_back(primitive(sys, phi, x, tol, Route::exact));
    cmp.ulam.push_back(primitive(sys, phi, x, tol, Route::ulam));
    cmp.max_discrepancy = std::max(cmp.max_discrepancy, std::abs(cmp.exact.back().value - cmp.ulam.back().value));
  }
  if (cmp.max_discrepancy > agreement_tol) {
    std::ostringstream os;
    os << "exact and Ulam routes disagree by " << cmp.max_discrepancy << " (tolerance " << agreement_tol << ")";
    throw NumericalError(os.str());
  }
  return cmp;
}

cplx peripheral_correction(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma) {
  const SpectralDecomposition& d = *sys.decomp;
  const UlamDiscretization& u = *sys.ulam;
  std::vector<cplx> phi_bins;
  cplx g = 0.0;
  for (std::size_t li = 0; li < d.eigenvalues().size(); ++li) {
    const cplx lam = d.eigenvalues()[li];
    if (std::abs(lam - 1.0) < 1e-9) continue;
    if (phi_bins.empty()) phi_bins = phi.bin_integrals(u.edges());
    for (int l = 0; l < d.components(); ++l) {
      if (!d.carries(static_cast<int>(li), l)) continue;
      const cplx c = d.coefficient(static_cast<int>(li), l, gamma);
      const BinVector& e = d.eigendensity(static_cast<int>(li), l);
      cplx pe = 0.0;
      for (int i = 0; i < u.bins(); ++i) pe += phi_bins[i] * e[i];
      g += c * pe / (1.0 - lam);
    }
  }
  return g;
}

cplx cesaro_correction(const System& sys, const PiecewiseFunction& phi, double x) {
  const double a = sys.map.lower();
  if (x <= a) return 0.0;
  return peripheral_correction(sys, phi, PiecewiseFunction::indicator(a, sys.map.upper(), a, x));
}

CesaroPrimitive cesaro_primitive(const System& sys, const PiecewiseFunction& phi, double x, int u_max,
                                 double residual_tol) {
  check_orthogonality(sys, phi, 1e-8);
  const int p = sys.period();
  if (u_max < 4 * p) throw PreconditionError("u_max must be at least 4 p(f)");
  CesaroPrimitive out;
  const double a = sys.map.lower();
  if (x <= a) {
    out.means.assign(u_max, 0.0);
    return out;
  }
  const PiecewiseFunction ind = PiecewiseFunction::indicator(a, sys.map.upper(), a, x);
  const std::vector<cplx> t = leading_terms(sys, phi, ind, u_max, Route::exact);
  cplx partial = 0.0, running = 0.0;
  for (int n = 0; n < u_max; ++n) {
    partial += t[n];  // psi-tilde_n
    running += partial;
    out.means.push_back(running / static_cast<double>(n + 1));
  }
  const int U = (u_max / (2 * p)) * (2 * p);
  out.limit = 2.0 * out.means[U - 1] - out.means[U / 2 - 1];
  out.psi = primitive(sys, phi, x, 1e-12).value;
  out.correction = cesaro_correction(sys, phi, x);
  out.residual = std::abs(out.limit - out.psi - out.correction);
  if (out.residual > residual_tol) {
    std::ostringstream os;
    os << "Cesaro primitive does not converge to psi + G: residual " << out.residual;
    throw NumericalError(os.str());
  }
  return out;
}

AlphaEvaluation alpha_primitive(const System& sys, const PiecewiseFunction& phi, double x, int u_max) {
  const CesaroPrimitive c = cesaro_primitive(sys, phi, x, u_max);
  AlphaEvaluation a;
  a.x = x;
  a.value = -(c.psi + c.correction);
  for (const cplx& m : c.means) a.means.push_back(-m);
  a.residual = c.residual;
  return a;
}

Pairing pair_with_bv(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& gamma, double tol,
                     int stieltjes_level) {
  check_orthogonality(sys, phi, 1e-8);
  Pairing out;
  SeriesOptions opts;
  opts.tol = tol;
  out.series = adjoint_series(sys, phi, gamma, opts);
  out.value = out.series.value;
  const double a = sys.map.lower(), b = sys.map.upper();
  const int n = 1 << stieltjes_level;
  std::vector<cplx> psi(n + 1);
  for (int i = 0; i <= n; ++i) psi[i] = primitive(sys, phi, a + (b - a) * i / n, tol).value;
  for (int i = 0; i < n; ++i) {
    const double mid = a + (b - a) * (i + 0.5) / n;
    out.stieltjes += gamma.eval(mid) * (psi[i + 1] - psi[i]);
  }
  out.discrepancy = std::abs(out.value - out.stieltjes);
  return out;
}

}  // namespace birkhoff
