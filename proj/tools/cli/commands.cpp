#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "birkhoff/errors.hpp"
#include "birkhoff/regularity.hpp"
#include "birkhoff/variance.hpp"

namespace birkhoff::cli {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json cj(cplx c) { return json::array({c.real(), c.imag()}); }

json interval_json(const std::vector<Interval>& iv) {
  json out = json::array();
  for (const Interval& i : iv) out.push_back(json::array({i.lo, i.hi}));
  return out;
}

// Short stable label used in verdict keys.
std::string label(const ExperimentConfig& cfg) {
  const json& sys = cfg.doc.at("system");
  std::string s;
  if (sys.contains("map")) s = sys.at("map").is_string() ? sys.at("map").get<std::string>() : "custom-" + sha256_hex(sys.dump()).substr(0, 8);
  else s = "matrix" + sys.at("matrix").dump();
  if (!cfg.doc.at("observable").empty()) s += "/obs-" + sha256_hex(cfg.doc.at("observable").dump()).substr(0, 8);
  return s;
}

struct Csv {
  std::ostringstream os;
  explicit Csv(const std::string& header) { os << header << "\n"; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os << (first ? "" : ",") << cell(cells), first = false), ...);
    os << "\n";
  }
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
};

struct IntervalContext {
  PiecewiseMap map;
  System sys;
  PiecewiseFunction phi;
};

IntervalContext interval_context(const ExperimentConfig& cfg) {
  PiecewiseMap map = build_map(cfg.doc.at("system"));
  const AnalysisOptions opts = build_analysis(cfg.doc.at("analysis"));
  PiecewiseFunction phi = build_observable(cfg.doc.at("observable"), map.lower(), map.upper());
  System sys(map, opts);
  return {std::move(map), std::move(sys), std::move(phi)};
}

std::vector<double> numbers(const json& arr) { return arr.get<std::vector<double>>(); }

CommandOutput cmd_spectrum(const ExperimentConfig& cfg) {
  PiecewiseMap map = build_map(cfg.doc.at("system"));
  const AnalysisOptions opts = build_analysis(cfg.doc.at("analysis"));
  const System sys(map, opts);
  const SpectralDecomposition& d = *sys.decomp;
  CommandOutput out;
  json& s = out.summary;
  s["map"] = map.name();
  s["bins"] = opts.bins;
  s["eigenvalues"] = json::array();
  for (cplx l : d.eigenvalues()) s["eigenvalues"].push_back(cj(l));
  s["orders"] = d.spectrum().orders;
  s["period"] = d.period();
  s["components"] = d.components();
  s["leading_eigenvalue"] = d.spectrum().leading_eigenvalue;
  s["masses"] = json::array();
  s["supports"] = json::array();
  s["density_range"] = json::array();
  for (int l = 0; l < d.components(); ++l) {
    s["masses"].push_back(d.basin_mass(l));
    s["supports"].push_back(interval_json(d.support(l)));
    double lo = INFINITY, hi = 0.0;
    for (cplx v : d.density(l))
      if (std::abs(v) > 0.0) {
        lo = std::min(lo, v.real());
        hi = std::max(hi, v.real());
      }
    s["density_range"].push_back(json::array({lo, hi}));
  }
  s["tail_rate"] = d.tail_rate();
  s["tail_constant"] = d.tail_constant();
  s["contraction"] = sys.contraction();
  s["expansion_floor"] = map.expansion_floor();
  s["dense_checked"] = d.spectrum().dense_checked;
  s["dense_agrees"] = d.spectrum().dense_agrees;
  s["near_peripheral"] = json::array();
  for (cplx l : d.spectrum().near_peripheral) s["near_peripheral"].push_back(cj(l));
  const ProjectorResiduals& r = d.residuals();
  s["projector_residuals"] = {{"idempotence", r.idempotence},
                              {"orthogonality", r.orthogonality},
                              {"tail_commutation", r.tail_commutation},
                              {"cesaro_agreement", r.cesaro_agreement}};
  if (cfg.params().at("refine_check").get<bool>()) {
    AnalysisOptions fine = opts;
    fine.bins = 2 * opts.bins;
    const System sys2(map, fine);
    const SpectralDecomposition& d2 = *sys2.decomp;
    bool agrees = d2.period() == d.period() && d2.components() == d.components() &&
                  d2.eigenvalues().size() == d.eigenvalues().size();
    double mass_diff = 0.0;
    if (agrees) {
      std::vector<double> m1, m2;
      for (int l = 0; l < d.components(); ++l) {
        m1.push_back(d.basin_mass(l));
        m2.push_back(d2.basin_mass(l));
      }
      std::sort(m1.begin(), m1.end());
      std::sort(m2.begin(), m2.end());
      for (std::size_t i = 0; i < m1.size(); ++i) mass_diff = std::max(mass_diff, std::abs(m1[i] - m2[i]));
      agrees = mass_diff <= 1e-4;
    }
    s["refinement"] = {{"bins", fine.bins}, {"period", d2.period()}, {"components", d2.components()},
                       {"max_mass_difference", mass_diff}, {"agrees", agrees}};
  }
  std::string header = "x";
  for (int l = 0; l < d.components(); ++l) header += ",rho_" + std::to_string(l);
  Csv csv(header);
  const auto& e = sys.ulam->edges();
  for (int i = 0; i < sys.ulam->bins(); ++i) {
    csv.os << fmt(0.5 * (e[i] + e[i + 1]));
    for (int l = 0; l < d.components(); ++l) csv.os << "," << fmt(d.density(l)[i].real());
    csv.os << "\n";
  }
  out.files.push_back({"spectrum_density.csv", csv.os.str()});
  out.verdicts["spectrum/" + label(cfg)] = {{"period", d.period()}, {"components", d.components()}};
  return out;
}

CommandOutput cmd_primitive(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const int grid = cfg.params().at("grid").get<int>();
  const double tol = cfg.params().at("tol").get<double>();
  const std::string route = cfg.params().at("route").get<std::string>();
  if (grid < 2) throw ConfigError("params.grid must be at least 2");
  if (route != "exact" && route != "ulam" && route != "both") throw ConfigError("params.route must be exact, ulam or both");
  std::vector<double> xs(grid);
  for (int i = 0; i < grid; ++i) xs[i] = c.map.lower() + c.map.length() * i / (grid - 1);
  CommandOutput out;
  Csv csv(route == "both" ? "x,psi_re,psi_im,psi_ulam_re,psi_ulam_im" : "x,psi_re,psi_im");
  if (route == "both") {
    const RouteComparison rc = primitive_both_routes(c.sys, c.phi, xs, tol);
    for (int i = 0; i < grid; ++i)
      csv.row(xs[i], rc.exact[i].value.real(), rc.exact[i].value.imag(), rc.ulam[i].value.real(), rc.ulam[i].value.imag());
    out.summary["max_discrepancy"] = rc.max_discrepancy;
  } else {
    std::vector<cplx> psi;
    if (route == "exact") {
      psi = primitive_on_grid(c.sys, c.phi, xs, tol, cfg.threads());
    } else {
      for (double x : xs) psi.push_back(primitive(c.sys, c.phi, x, tol, Route::ulam).value);
    }
    for (int i = 0; i < grid; ++i) csv.row(xs[i], psi[i].real(), psi[i].imag());
    double sup = 0.0;
    for (cplx v : psi) sup = std::max(sup, std::abs(v));
    out.summary["sup"] = sup;
  }
  out.summary["route"] = route;
  out.summary["grid"] = grid;
  out.summary["tol"] = tol;
  out.files.push_back({"primitive.csv", csv.os.str()});
  return out;
}

CommandOutput cmd_variance(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const json& p = cfg.params();
  VarianceReport rep = variance_report(c.sys, c.phi, p.at("tail_tol").get<double>());
  CommandOutput out;
  json& s = out.summary;
  s["sigma2_m"] = rep.sigma2_m;
  s["weighted_sum"] = rep.weighted_sum;
  s["identity_residual"] = rep.identity_residual;
  s["components"] = json::array();
  Csv csv("component,mass,sigma2,projector_re,ktail_re,diagonal_re,terms,tail_bound");
  for (const ComponentVariance& cv : rep.components) {
    s["components"].push_back({{"component", cv.component},
                               {"mass", cv.mass},
                               {"sigma2", cv.sigma2},
                               {"projector", cj(cv.ledger.projector)},
                               {"ktail", cj(cv.ledger.ktail)},
                               {"diagonal", cj(cv.ledger.diagonal)},
                               {"terms", cv.ledger.terms},
                               {"tail_bound", cv.ledger.tail_bound}});
    csv.row(cv.component, cv.mass, cv.sigma2, cv.ledger.projector.real(), cv.ledger.ktail.real(),
            cv.ledger.diagonal.real(), cv.ledger.terms, cv.ledger.tail_bound);
  }
  if (p.at("monte_carlo").get<bool>()) {
    MonteCarloOptions mo;
    mo.points = p.at("mc_points").get<long long>();
    mo.horizon = p.at("mc_horizon").get<int>();
    mo.seed = cfg.seed();
    mo.threads = cfg.threads();
    const MonteCarloEstimate mc = monte_carlo_sigma2(c.map, c.phi, mo);
    s["monte_carlo"] = {{"estimate", mc.estimate},
                        {"standard_error", mc.standard_error},
                        {"half_width", mc.half_width},
                        {"points", mc.points},
                        {"horizon", mc.horizon},
                        {"seed", mo.seed}};
  }
  out.files.push_back({"variance.csv", csv.os.str()});
  out.verdicts["variance/" + label(cfg)] = rep.sigma2_m;
  return out;
}

CommandOutput cmd_coboundary(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const json& p = cfg.params();
  CoboundaryOptions o;
  o.sigma2_tol = p.at("sigma2_tol").get<double>();
  o.grid = p.at("grid").get<int>();
  o.delta = p.at("delta").get<double>();
  o.residual_tol = p.at("residual_tol").get<double>();
  const CoboundaryResult r = coboundary_solve(c.sys, c.phi, o);
  CommandOutput out;
  out.summary = {{"coboundary", r.coboundary},   {"sigma2", r.sigma2},
                 {"residual", r.residual},       {"alpha_consistency", r.alpha_consistency},
                 {"verdict", r.verdict}};
  Csv csv("x,g");
  for (std::size_t i = 0; i < r.xs.size(); ++i) csv.row(r.xs[i], r.g[i]);
  out.files.push_back({"coboundary.csv", csv.os.str()});
  out.verdicts["coboundary/" + label(cfg)] = r.verdict;
  return out;
}

CommandOutput cmd_obstructions(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const int m_max = cfg.params().at("m_max").get<int>();
  const double flag_tol = cfg.params().at("flag_tol").get<double>();
  const auto recs = obstruction_scan(c.sys, c.phi, m_max, flag_tol);
  CommandOutput out;
  Csv csv("minimal_period,x,side,component,sum_re,sum_im,flagged");
  int flagged = 0;
  double worst = 0.0;
  for (const ObstructionRecord& r : recs) {
    csv.row(r.orbit.minimal_period, r.orbit.point.x, r.orbit.point.side == Side::plus ? "+" : "-", r.component,
            r.sum.real(), r.sum.imag(), r.flagged);
    flagged += r.flagged;
    worst = std::max(worst, std::abs(r.sum));
  }
  out.summary = {{"orbits", recs.size()}, {"flagged", flagged}, {"max_abs_sum", worst}, {"m_max", m_max}};
  out.files.push_back({"obstructions.csv", csv.os.str()});
  out.verdicts["obstructions/" + label(cfg)] = flagged == 0 ? "none" : "obstructed";
  return out;
}

CommandOutput cmd_clt(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const json& p = cfg.params();
  const int l = p.at("component").get<int>();
  const int samples = p.at("samples").get<int>();
  const std::vector<double> hs = numbers(p.at("scales"));
  CommandOutput out;
  out.summary["scales"] = json::array();
  Csv csv("h,index,x,z");
  std::vector<double> ks;
  for (double h : hs) {
    const CltResult r = clt_modulus(c.sys, c.phi, l, h, samples, cfg.seed(), cfg.threads());
    out.summary["scales"].push_back({{"h", h}, {"ks", r.ks}, {"sigma", r.sigma}, {"lyapunov", r.lyapunov}});
    for (std::size_t i = 0; i < r.z.size(); ++i) csv.row(h, i, r.xs[i], r.z[i]);
    ks.push_back(r.ks);
  }
  // Scales are taken in the given order; decrease is judged within noise.
  const double noise = 2.0 / std::sqrt(static_cast<double>(samples));
  bool decreasing = true;
  for (std::size_t i = 1; i < ks.size(); ++i) decreasing = decreasing && ks[i] <= ks[i - 1] + noise;
  out.summary["ks_noise"] = noise;
  out.summary["ks_decreasing"] = decreasing;
  out.files.push_back({"clt_modulus.csv", csv.os.str()});
  out.verdicts["clt-modulus/" + label(cfg)] = {{"ks_last", ks.empty() ? 0.0 : ks.back()}, {"decreasing", decreasing}};
  return out;
}

CommandOutput cmd_zygmund(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const json& p = cfg.params();
  ZygmundOptions o;
  o.zygmund_tol = p.at("zygmund_tol").get<double>();
  const double x = p.at("x").get<double>();
  const ModulusProfile prof = zygmund_profile(c.sys, c.phi, x, numbers(p.at("scales")), o);
  CommandOutput out;
  out.summary = {{"x", prof.x},
                 {"slope", prof.fit.slope},
                 {"intercept", prof.fit.intercept},
                 {"fit_residual", prof.fit.residual},
                 {"zygmund", prof.zygmund},
                 {"separation", prof.separation}};
  out.summary["predicted_slope"] = prof.predicted_slope ? json(*prof.predicted_slope) : json(nullptr);
  Csv csv("h,second_difference,ratio");
  for (std::size_t i = 0; i < prof.scales.size(); ++i)
    csv.row(prof.scales[i], prof.second_differences[i], prof.second_differences[i] / prof.scales[i]);
  out.files.push_back({"zygmund.csv", csv.os.str()});
  out.verdicts["zygmund/" + label(cfg) + "/x=" + fmt(x)] = prof.zygmund ? "Zygmund" : "non-Zygmund";
  return out;
}

CommandOutput cmd_bv(const ExperimentConfig& cfg) {
  IntervalContext c = interval_context(cfg);
  const int level = cfg.params().at("level").get<int>();
  if (level < 2 || level > 24) throw ConfigError("params.level must be in [2, 24]");
  const std::vector<double> xs = dyadic_grid(c.map.lower(), c.map.upper(), level);
  const std::vector<cplx> psi = primitive_on_grid(c.sys, c.phi, xs, cfg.params().at("tol").get<double>(), cfg.threads());
  const BvTestResult bv = bv_test(xs, psi);
  const LogLipschitzResult ll = log_lipschitz_ratio(xs, psi);
  CommandOutput out;
  out.summary = {{"verdict", bv.verdict},          {"increment_ratio", bv.increment_ratio},
                 {"variations", bv.variations},    {"log_lipschitz_ratio", ll.ratio},
                 {"log_lipschitz_stable", ll.stable}};
  Csv csv("level,variation");
  for (std::size_t i = 0; i < bv.variations.size(); ++i) csv.row(static_cast<int>(i + 1), bv.variations[i]);
  out.files.push_back({"bv_test.csv", csv.os.str()});
  out.verdicts["bv-test/" + label(cfg)] = bv.verdict;
  return out;
}

torus::Direction direction_of(const std::string& s) {
  if (s == "alpha") return torus::Direction::alpha;
  if (s == "omega") return torus::Direction::omega;
  throw ConfigError("params.direction must be alpha or omega");
}

CommandOutput cmd_anosov_blocks(const ExperimentConfig& cfg) {
  const torus::IntMatrix m = build_matrix(cfg.doc.at("system"));
  const torus::TrigPolynomial r = build_trig(cfg.doc.at("observable"), m.n);
  const json& p = cfg.params();
  const torus::Direction dir = direction_of(p.at("direction").get<std::string>());
  const int l_max = p.at("l_max").get<int>();
  int j_max = p.at("j_max").get<int>();
  if (j_max == 0) j_max = torus::required_j_max(m, r, dir, l_max);
  const torus::SparseFourierDistribution u = torus::birkhoff_fourier(m, r, dir, j_max);
  torus::BesovOptions o;
  o.grid_density = p.at("grid_density").get<int>();
  o.fit_from = p.at("fit_from").get<int>();
  const torus::DyadicBlockProfile prof = torus::besov_profile(u, l_max, o);

  // Annulus count L along the frequency orbits actually summed.
  const torus::IntMatrix step = dir == torus::Direction::alpha ? m.transpose() : m.inverse().transpose();
  const int j_lo = dir == torus::Direction::alpha ? 0 : 1;
  int big_l = 0;
  for (const torus::FourierTerm& t : torus::normalized(r))
    for (int l = 0; l <= l_max + 3; ++l) big_l = std::max(big_l, torus::annulus_crossings(step, t.k, l, j_lo, j_max));
  const double bound = big_l * u.coefficient_sum;

  CommandOutput out;
  Csv csv("l,sup,frequencies,reduced,bound,within_bound");
  bool all_within = true;
  for (int l = 0; l <= l_max; ++l) {
    const bool ok = prof.sups[l] <= bound * (1 + 1e-12);
    all_within = all_within && ok;
    csv.row(l, prof.sups[l], prof.frequencies[l], static_cast<bool>(prof.reduced[l]), bound, ok);
  }
  out.summary = {{"direction", p.at("direction")}, {"j_max", j_max},
                 {"coverage_level", u.coverage_level}, {"coefficient_sum", u.coefficient_sum},
                 {"annulus_count", big_l},          {"block_bound", bound},
                 {"all_within_bound", all_within},  {"sups", prof.sups},
                 {"growth_exponent", prof.growth_exponent}, {"fit_from", prof.fit_from},
                 {"classification", prof.classification}};
  out.files.push_back({"anosov_blocks.csv", csv.os.str()});
  out.verdicts["anosov-blocks/" + label(cfg) + "/" + p.at("direction").get<std::string>()] = prof.classification;
  return out;
}

CommandOutput cmd_prop_l(const ExperimentConfig& cfg) {
  const torus::IntMatrix m = build_matrix(cfg.doc.at("system"));
  const json& p = cfg.params();
  const int j_lo = p.at("j_min").get<int>(), j_hi = p.at("j_max").get<int>(), l_max = p.at("l_max").get<int>();
  CommandOutput out;
  Csv csv("p,l,count");
  int worst = 0;
  for (const json& pv : p.at("p")) {
    const torus::IntVec v = pv.get<torus::IntVec>();
    for (int l = 0; l <= l_max; ++l) {
      const int n = torus::annulus_crossings(m, v, l, j_lo, j_hi);
      worst = std::max(worst, n);
      csv.row(pv.dump(), l, n);
    }
  }
  // Frequency vectors contain commas; quote them.
  std::string text = csv.os.str();
  std::ostringstream quoted;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      quoted << line << "\n";
      header = false;
      continue;
    }
    const auto close = line.find(']');
    quoted << '"' << line.substr(0, close + 1) << '"' << line.substr(close + 1) << "\n";
  }
  out.summary = {{"max_count", worst}, {"j_min", j_lo}, {"j_max", j_hi}, {"l_max", l_max}};
  out.files.push_back({"prop_l.csv", quoted.str()});
  out.verdicts["prop-l/" + label(cfg)] = worst;
  return out;
}

CommandOutput cmd_advect(const ExperimentConfig& cfg) {
  const torus::IntMatrix m = build_matrix(cfg.doc.at("system"));
  const torus::TrigPolynomial r = build_trig(cfg.doc.at("observable"), m.n);
  const json& p = cfg.params();
  const torus::TrigPolynomial rho0 = build_trig(p.at("rho0"), m.n);
  const int j = p.at("j").get<int>();
  CommandOutput out;
  out.summary["test_functions"] = json::array();
  Csv csv("test_function,j,q_re,q_im");
  for (std::size_t f = 0; f < p.at("test_functions").size(); ++f) {
    const torus::TrigPolynomial phi = build_trig(p.at("test_functions")[f], m.n);
    const torus::AdvectResult a = torus::advect(m, r, rho0, phi, j);
    for (std::size_t i = 0; i < a.q.size(); ++i) csv.row(f, i, a.q[i].real(), a.q[i].imag());
    json rec{{"index", f}, {"stabilized_at", a.stabilized_at}};
    rec["limit"] = a.limit ? cj(*a.limit) : json(nullptr);
    rec["u_omega"] = a.u_omega ? cj(*a.u_omega) : json(nullptr);
    out.summary["test_functions"].push_back(rec);
  }
  out.summary["j"] = j;
  out.files.push_back({"advect.csv", csv.os.str()});
  return out;
}

CommandOutput cmd_deform(const ExperimentConfig& cfg) {
  const torus::IntMatrix m = build_matrix(cfg.doc.at("system"));
  const torus::HyperbolicMatrix h = torus::hyperbolic_split(m);
  const json& p = cfg.params();
  const torus::VectorField w{build_trig(p.at("w1"), m.n), build_trig(p.at("w2"), m.n)};
  const auto e = p.at("direction").get<std::vector<double>>();
  if (e.size() != 2) throw ConfigError("params.direction must have two components");
  const std::vector<double> hs = numbers(p.at("scales"));
  CommandOutput out;
  out.summary["points"] = json::array();
  Csv csv("point,h,second_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < p.at("points").size(); ++i) {
    const auto xv = p.at("points")[i].get<std::vector<double>>();
    if (xv.size() != 2) throw ConfigError("params.points entries must have two coordinates");
    const std::array<double, 2> x{xv[0], xv[1]};
    const auto alpha = torus::infinitesimal_deformation(h, w, x);
    const auto d2 = torus::deformation_second_differences(h, w, x, {e[0], e[1]}, hs);
    for (std::size_t k = 0; k < hs.size(); ++k) {
      csv.row(i, hs[k], d2[k]);
      worst = std::max(worst, d2[k]);
    }
    out.summary["points"].push_back({{"x", xv}, {"alpha", json::array({alpha[0], alpha[1]})}, {"second_differences", d2}});
  }
  out.summary["max_second_difference"] = worst;
  out.summary["lambda_s"] = h.lambda_s;
  out.summary["lambda_u"] = h.lambda_u;
  out.files.push_back({"deform.csv", csv.os.str()});
  return out;
}

CommandOutput cmd_decay_fit(const ExperimentConfig& cfg) {
  const torus::IntMatrix m = build_matrix(cfg.doc.at("system"));
  const torus::TrigPolynomial r = build_trig(cfg.doc.at("observable"), m.n);
  const torus::TrigPolynomial phi = build_trig(cfg.params().at("phi"), m.n);
  const torus::DecayFit fit = torus::correlation_decay_fit(m, r, phi, cfg.params().at("j_max").get<int>());
  CommandOutput out;
  out.summary = {{"c1", fit.c1}, {"c2", fit.c2}, {"block_constant", fit.block_constant}};
  Csv csv("j,corr_re,corr_im");
  for (std::size_t j = 0; j < fit.correlations.size(); ++j)
    csv.row(j, fit.correlations[j].real(), fit.correlations[j].imag());
  out.files.push_back({"decay_fit.csv", csv.os.str()});
  return out;
}

}  // namespace

CommandOutput run_command(const ExperimentConfig& cfg) {
  static const std::map<std::string, CommandOutput (*)(const ExperimentConfig&)> table{
      {"spectrum", cmd_spectrum},     {"primitive", cmd_primitive},         {"variance", cmd_variance},
      {"coboundary", cmd_coboundary}, {"obstructions", cmd_obstructions},   {"clt-modulus", cmd_clt},
      {"zygmund", cmd_zygmund},       {"bv-test", cmd_bv},                  {"anosov-blocks", cmd_anosov_blocks},
      {"prop-l", cmd_prop_l},         {"advect", cmd_advect},               {"deform", cmd_deform},
      {"decay-fit", cmd_decay_fit}};
  const auto it = table.find(cfg.command());
  if (it == table.end()) throw ConfigError("unknown subcommand '" + cfg.command() + "'");
  CommandOutput out = it->second(cfg);
  out.summary["command"] = cfg.command();
  return out;
}

std::vector<std::string> validate_config(const json& raw, const std::string& command, json* normalized) {
  std::vector<std::string> errors;
  json doc = normalize(raw, command, errors);
  if (normalized) *normalized = doc;
  if (!doc.contains("command") || !is_run_command(doc.at("command").get<std::string>())) return errors;
  const std::string cmd = doc.at("command");
  auto guard = [&](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.push_back(std::string(where) + ": " + e.what());
    }
  };
  if (!is_torus_command(cmd)) {
    std::optional<PiecewiseMap> map;
    guard("system.map", [&] { map = build_map(doc.at("system")); });
    std::optional<AnalysisOptions> opts;
    guard("analysis", [&] { opts = build_analysis(doc.at("analysis")); });
    if (map && opts && cmd != "spectrum" && cmd != "obstructions") {
      guard("observable", [&] {
        const PiecewiseFunction phi = build_observable(doc.at("observable"), map->lower(), map->upper());
        const System sys(*map, *opts);
        check_orthogonality(sys, phi, 1e-10);
      });
    }
    return errors;
  }
  std::optional<torus::IntMatrix> m;
  guard("system.matrix", [&] { m = build_matrix(doc.at("system")); });
  if (!m) return errors;
  if (cmd == "deform") guard("system.matrix", [&] { torus::hyperbolic_split(*m); });
  if (cmd == "anosov-blocks" || cmd == "advect" || cmd == "decay-fit") {
    guard("observable", [&] {
      const torus::TrigPolynomial r = torus::normalized(build_trig(doc.at("observable"), m->n));
      for (const torus::FourierTerm& t : r)
        if (std::all_of(t.k.begin(), t.k.end(), [](long long x) { return x == 0; }))
          throw PreconditionError("observable has nonzero mean; the zero Fourier coefficient must vanish");
    });
  }
  if (cmd == "anosov-blocks" && doc.at("params").at("direction") == "omega")
    guard("system.matrix", [&] { m->inverse(); });
  return errors;
}

}  // namespace birkhoff::cli
