#include "birkhoff/variance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "birkhoff/errors.hpp"

namespace birkhoff {

namespace {

int unit_index(const SpectralDecomposition& d) { return d.lambda_index(cplx(1.0, 0.0)); }

cplx bin_dot(const std::vector<cplx>& a_bins, const BinVector& v) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += a_bins[i] * v[i];
  return s;
}

// sum_k int a L^k gamma dm with the lambda != 1 parts resummed; the
// lambda = 1 part must vanish for the sum to exist.
void correlation_sum(const System& sys, const PiecewiseFunction& a, const PiecewiseFunction& gamma, double tol,
                     GreenKuboLedger& ledger) {
  const SpectralDecomposition& d = *sys.decomp;
  const std::vector<cplx> a_bins = a.bin_integrals(sys.ulam->edges());
  const cplx fixed = bin_dot(a_bins, d.project(unit_index(d), gamma));
  const double scale = std::max(1.0, sup_norm(a)) * std::max(1.0, gamma.l1_norm());
  if (std::abs(fixed) > 1e-8 * scale) {
    std::ostringstream os;
    os << "correlation sum diverges: int a Phi_1(gamma) dm = " << std::abs(fixed)
       << " (neither observable is centered)";
    throw PreconditionError(os.str());
  }
  SeriesOptions opts;
  opts.tol = tol;
  const SeriesResult s = adjoint_series(sys, a, gamma, opts);
  ledger.ktail += s.value;
  ledger.terms += s.terms;
  ledger.tail_bound += s.tail_bound;
  ledger.projector += peripheral_correction(sys, a, gamma);
}

PiecewiseFunction limit_density(const System& sys) {
  const SpectralDecomposition& d = *sys.decomp;
  const UlamDiscretization& u = *sys.ulam;
  BinVector ones(u.bins(), cplx(1.0, 0.0));
  BinVector rho = d.project(unit_index(d), ones);
  for (cplx& v : rho) v = v.real();
  return u.to_function(rho).simplified();
}

}  // namespace

cplx green_kubo_pair(const System& sys, const PiecewiseFunction& a, const PiecewiseFunction& b,
                     const PiecewiseFunction& rho, double tail_tol, GreenKuboLedger* ledger) {
  GreenKuboLedger lg;
  lg.diagonal = inner(a * b, rho);
  correlation_sum(sys, a, (b * rho).simplified(), tail_tol / 2, lg);
  correlation_sum(sys, b, (a * rho).simplified(), tail_tol / 2, lg);
  if (ledger) *ledger = lg;
  return lg.projector + lg.ktail - lg.diagonal;
}

double sigma2_component(const System& sys, const PiecewiseFunction& phi, int l, double tail_tol,
                        GreenKuboLedger* ledger) {
  const SpectralDecomposition& d = *sys.decomp;
  if (l < 0 || l >= d.components()) throw PreconditionError("component index out of range");
  const PiecewiseFunction rho = d.density_function(l).simplified();
  const cplx mean = inner(phi, rho);
  if (std::abs(mean) > 1e-10) {
    std::ostringstream os;
    os << "observable is not centered for component " << l << ": int phi dmu_l = " << std::abs(mean);
    throw PreconditionError(os.str());
  }
  return green_kubo_pair(sys, phi, phi.conj(), rho, tail_tol, ledger).real();
}

double sigma2_m(const System& sys, const PiecewiseFunction& phi, double tail_tol) {
  check_orthogonality(sys, phi, 1e-10);
  return green_kubo_pair(sys, phi, phi.conj(), limit_density(sys), tail_tol).real();
}

cplx sigma_m(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& psi, double tail_tol) {
  const cplx unit[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  cplx s = 0.0;
  for (const cplx& c : unit) s += c * sigma2_m(sys, phi + psi * c, tail_tol);
  return 0.25 * s;
}

VarianceReport variance_report(const System& sys, const PiecewiseFunction& phi, double tail_tol) {
  VarianceReport rep;
  const SpectralDecomposition& d = *sys.decomp;
  for (int l = 0; l < d.components(); ++l) {
    ComponentVariance cv;
    cv.component = l;
    cv.mass = d.basin_mass(l);
    cv.sigma2 = sigma2_component(sys, phi, l, tail_tol, &cv.ledger);
    rep.weighted_sum += cv.mass * cv.sigma2;
    rep.components.push_back(cv);
  }
  rep.sigma2_m = sigma2_m(sys, phi, tail_tol);
  rep.identity_residual = std::abs(rep.sigma2_m - rep.weighted_sum);
  return rep;
}

cplx theta_functional(const System& sys, const PiecewiseFunction& phi, const PiecewiseFunction& g, double tail_tol) {
  check_orthogonality(sys, phi, 1e-10);
  const SpectralDecomposition& d = *sys.decomp;
  cplx s = 0.0;
  for (int l = 0; l < d.components(); ++l)
    s += d.basin_mass(l) * green_kubo_pair(sys, g, phi, d.density_function(l).simplified(), tail_tol);
  return s;
}

MonteCarloEstimate monte_carlo_sigma2(const PiecewiseMap& map, const PiecewiseFunction& phi,
                                      const MonteCarloOptions& opts) {
  if (opts.points < 1 || opts.horizon < 1) throw PreconditionError("Monte-Carlo needs points >= 1 and horizon >= 1");
  constexpr int kChunks = 64;
  const double a = map.lower(), len = map.length();
  struct Acc {
    double sum = 0.0, sum2 = 0.0;
  };
  std::vector<Acc> acc(kChunks);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < kChunks; c = next++) {
      const std::int64_t lo = opts.points * c / kChunks, hi = opts.points * (c + 1) / kChunks;
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(c)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Acc s;
      for (std::int64_t i = lo; i < hi; ++i) {
        double x = a + len * unif(rng);
        cplx sn = 0.0;
        double avg = 0.0;
        for (int n = 1; n <= opts.horizon; ++n) {
          sn += phi.eval(x);
          avg += std::norm(sn) / n;
          x = map(x) + opts.noise * len * (unif(rng) - 0.5);
          if (x < a) x += len;
          if (x >= a + len) x -= len;
        }
        avg /= opts.horizon;
        s.sum += avg;
        s.sum2 += avg * avg;
      }
      acc[c] = s;
    }
  };
  int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, kChunks);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  double sum = 0.0, sum2 = 0.0;
  for (const Acc& s : acc) {
    sum += s.sum;
    sum2 += s.sum2;
  }
  MonteCarloEstimate est;
  est.points = opts.points;
  est.horizon = opts.horizon;
  const double n = static_cast<double>(opts.points);
  est.estimate = sum / n;
  const double var = opts.points > 1 ? std::max(0.0, (sum2 - n * est.estimate * est.estimate) / (n - 1)) : 0.0;
  est.standard_error = std::sqrt(var / n);
  est.half_width = 3.0 * est.standard_error;
  return est;
}

namespace {

// g(x) = D alpha(x) by a centered difference, evaluated as one series on the
// short indicator to avoid cancellation.
double recovered_g(const System& sys, const PiecewiseFunction& phi, double x, double delta) {
  const double a = sys.map.lower(), b = sys.map.upper();
  const double lo = std::max(a, x - delta), hi = std::min(b, x + delta);
  const PiecewiseFunction ind = PiecewiseFunction::indicator(a, b, lo, hi);
  SeriesOptions opts;
  opts.tol = 1e-14;
  const cplx inc = adjoint_series(sys, phi, ind, opts).value + peripheral_correction(sys, phi, ind);
  return -inc.real() / (hi - lo);
}

}  // namespace

CoboundaryResult coboundary_solve(const System& sys, const PiecewiseFunction& phi, const CoboundaryOptions& opts) {
  check_orthogonality(sys, phi, 1e-8);
  CoboundaryResult res;
  res.sigma2 = sigma2_m(sys, phi);
  if (res.sigma2 >= opts.sigma2_tol) {
    std::ostringstream os;
    os << "not-coboundary (sigma2_m = " << res.sigma2 << ")";
    res.verdict = os.str();
    return res;
  }
  const double a = sys.map.lower(), len = sys.map.length();
  double sq = 0.0, integral = 0.0;
  for (int i = 0; i < opts.grid; ++i) {
    const double x = a + len * (i + 0.5) / opts.grid;
    const double gx = recovered_g(sys, phi, x, opts.delta);
    const double gfx = recovered_g(sys, phi, sys.map(x), opts.delta);
    const double r = phi.eval(x).real() - (gfx - gx);
    sq += r * r;
    integral += gx * len / opts.grid;
    res.xs.push_back(x);
    res.g.push_back(gx);
  }
  res.residual = std::sqrt(sq / opts.grid);
  const cplx alpha_b = alpha_primitive(sys, phi, sys.map.upper()).value;
  res.alpha_consistency = std::abs(alpha_b.real() - integral);
  if (res.residual > opts.residual_tol) {
    std::ostringstream os;
    os << "inconsistent coboundary: sigma2_m = " << res.sigma2 << " but residual " << res.residual
       << " exceeds " << opts.residual_tol << " (grid too coarse)";
    throw NumericalError(os.str());
  }
  std::ostringstream os;
  os << "coboundary (residual " << res.residual << ")";
  res.verdict = os.str();
  res.coboundary = true;
  return res;
}

namespace {

bool lateral_less(const LateralPoint& p, const LateralPoint& q, double tol) {
  if (std::abs(p.x - q.x) > tol) return p.x < q.x;
  return p.side == Side::minus && q.side == Side::plus;
}

}  // namespace

std::vector<ObstructionRecord> obstruction_scan(const System& sys, const PiecewiseFunction& phi, int m_max,
                                                double flag_tol) {
  if (m_max < 1) throw PreconditionError("m_max must be at least 1");
  const SpectralDecomposition& d = *sys.decomp;
  const double tol = 1e-9 * sys.map.length();
  std::vector<ObstructionRecord> out;
  for (int m = 1; m <= m_max; ++m) {
    for (const PeriodicOrbit& orbit : periodic_points(sys.map, m)) {
      if (orbit.minimal_period != m) continue;
      // One record per orbit: keep the leftmost point.
      bool leftmost = true;
      LateralPoint q = orbit.point;
      for (int j = 1; j < m && leftmost; ++j) {
        q = sys.map.eval_lateral(q);
        if (lateral_less(q, orbit.point, tol)) leftmost = false;
      }
      if (!leftmost) continue;
      const bool seen = std::any_of(out.begin(), out.end(), [&](const ObstructionRecord& r) {
        return !lateral_less(r.orbit.point, orbit.point, tol) && !lateral_less(orbit.point, r.orbit.point, tol);
      });
      if (seen) continue;
      int comp = -1;
      for (int l = 0; l < d.components() && comp < 0; ++l)
        for (const Interval& iv : d.support(l))
          if (orbit.point.x >= iv.lo - tol && orbit.point.x <= iv.hi + tol) {
            comp = l;
            break;
          }
      if (comp < 0) continue;
      ObstructionRecord rec;
      rec.orbit = orbit;
      rec.component = comp;
      rec.sum = birkhoff_orbit_sum(phi, sys.map, orbit);
      rec.flagged = std::abs(rec.sum) > flag_tol;
      out.push_back(rec);
    }
  }
  return out;
}

}  // namespace birkhoff
