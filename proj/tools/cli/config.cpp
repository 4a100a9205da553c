#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "birkhoff/errors.hpp"

namespace birkhoff::cli {

namespace {

json dyadic_list(int from, int to, int step = 1) {
  json out = json::array();
  for (int k = from; k <= to; k += step) out.push_back(std::ldexp(1.0, -k));
  return out;
}

json fourier_cos(std::vector<long long> k) {
  return json{{"kind", "cos"}, {"k", k}, {"amplitude", 1.0}};
}

// Parameter defaults per command; the config may override any of them but
// may not introduce other keys.
json command_defaults(const std::string& command) {
  if (command == "spectrum") return {{"refine_check", false}};
  if (command == "primitive") return {{"grid", 257}, {"tol", 1e-8}, {"route", "exact"}};
  if (command == "variance")
    return {{"tail_tol", 1e-10}, {"monte_carlo", false}, {"mc_points", 100000}, {"mc_horizon", 1000}};
  if (command == "coboundary")
    return {{"sigma2_tol", 1e-6}, {"grid", 257}, {"delta", std::ldexp(1.0, -16)}, {"residual_tol", 1e-4}};
  if (command == "obstructions") return {{"m_max", 6}, {"flag_tol", 1e-8}};
  if (command == "clt-modulus")
    return {{"component", 0}, {"scales", json::array({std::ldexp(1.0, -15), std::ldexp(1.0, -20), std::ldexp(1.0, -25)})},
            {"samples", 2000}};
  if (command == "zygmund") return {{"x", 0.5}, {"scales", dyadic_list(8, 24)}, {"zygmund_tol", 0.05}};
  if (command == "bv-test") return {{"level", 12}, {"tol", 1e-10}};
  if (command == "anosov-blocks")
    return {{"direction", "alpha"}, {"l_max", 20}, {"j_max", 0}, {"grid_density", 16}, {"fit_from", 1}};
  if (command == "prop-l")
    return {{"p", json::array({json::array({1, 0})})}, {"j_min", -30}, {"j_max", 30}, {"l_max", 40}};
  if (command == "advect")
    return {{"rho0", json::array()},
            {"test_functions", json::array({json::array({json{{"kind", "const"}, {"value", 1.0}}}),
                                            json::array({fourier_cos({0, 1})})})},
            {"j", 50}};
  if (command == "deform")
    return {{"w1", json::array({json{{"kind", "const"}, {"value", 1.0}}})},
            {"w2", json::array()},
            {"points", json::array({json::array({0.3, 0.7})})},
            {"direction", json::array({1.0, 0.0})},
            {"scales", dyadic_list(4, 20, 2)}};
  if (command == "decay-fit") return {{"phi", json::array({fourier_cos({1, 1})})}, {"j_max", 30}};
  return json::object();
}

json analysis_defaults() {
  return {{"bins", 1024}, {"gap_tol", 0.05}, {"n_avg", 64}, {"support_floor", 1e-6}, {"dense_limit", 512}};
}

bool same_kind(const json& def, const json& val) {
  if (def.is_number()) {
    if (def.is_number_float()) return val.is_number();
    return val.is_number_integer();
  }
  return def.type() == val.type();
}

const char* kind_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_boolean()) return "boolean";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

// Merges raw over defaults, reporting unknown keys and type mismatches.
json merge_section(const json& defaults, const json* raw, const std::string& where, std::vector<std::string>& errors) {
  json out = defaults;
  if (!raw) return out;
  if (!raw->is_object()) {
    errors.push_back(where + ": expected an object");
    return out;
  }
  for (const auto& [key, val] : raw->items()) {
    if (!defaults.contains(key)) {
      errors.push_back(where + "." + key + ": unknown parameter");
      continue;
    }
    if (!same_kind(defaults.at(key), val)) {
      errors.push_back(where + "." + key + ": expected " + kind_name(defaults.at(key)) + ", got " + kind_name(val));
      continue;
    }
    out[key] = defaults.at(key).is_number_float() ? json(val.get<double>()) : val;
  }
  return out;
}

const json* find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double num(const json& t, const char* key, double fallback) {
  const json* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(std::string("term field '") + key + "' must be a number");
  return v->get<double>();
}

// Interval observable terms with explicit defaults.
json normalize_interval_terms(const json& raw, const std::string& where, std::vector<std::string>& errors) {
  json out = json::array();
  if (!raw.is_array()) {
    errors.push_back(where + ": expected an array of terms");
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const json& t = raw[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    try {
      const json* kind = find(t, "kind");
      if (!kind || !kind->is_string()) throw ConfigError("missing string field 'kind'");
      const std::string k = kind->get<std::string>();
      if (k == "cos" || k == "sin") {
        out.push_back({{"kind", k}, {"amplitude", num(t, "amplitude", 1.0)}, {"q", num(t, "q", 1.0)},
                       {"phase", num(t, "phase", 0.0)}});
      } else if (k == "poly") {
        const json* c = find(t, "coeffs");
        if (!c || !c->is_array()) throw ConfigError("poly needs an array 'coeffs'");
        std::vector<double> coeffs;
        for (const json& x : *c) {
          if (!x.is_number()) throw ConfigError("poly coefficients must be numbers");
          coeffs.push_back(x.get<double>());
        }
        out.push_back({{"kind", k}, {"coeffs", coeffs}});
      } else if (k == "indicator") {
        out.push_back({{"kind", k}, {"lo", num(t, "lo", 0.0)}, {"hi", num(t, "hi", 1.0)}, {"value", num(t, "value", 1.0)}});
      } else if (k == "const") {
        out.push_back({{"kind", k}, {"value", num(t, "value", 0.0)}});
      } else {
        throw ConfigError("unknown term kind '" + k + "' (cos, sin, poly, indicator, const)");
      }
    } catch (const ConfigError& e) {
      errors.push_back(at + ": " + e.what());
    }
  }
  return out;
}

std::vector<long long> int_vector(const json& v, const char* what) {
  if (!v.is_array() || v.empty()) throw ConfigError(std::string(what) + " must be a non-empty integer array");
  std::vector<long long> out;
  for (const json& x : v) {
    if (!x.is_number_integer()) throw ConfigError(std::string(what) + " must contain integers");
    out.push_back(x.get<long long>());
  }
  return out;
}

json normalize_fourier_terms(const json& raw, const std::string& where, std::vector<std::string>& errors) {
  json out = json::array();
  if (!raw.is_array()) {
    errors.push_back(where + ": expected an array of terms");
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const json& t = raw[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    try {
      const json* kind = find(t, "kind");
      if (!kind || !kind->is_string()) throw ConfigError("missing string field 'kind'");
      const std::string k = kind->get<std::string>();
      if (k == "cos" || k == "sin") {
        const json* kv = find(t, "k");
        if (!kv) throw ConfigError("missing frequency 'k'");
        out.push_back({{"kind", k}, {"k", int_vector(*kv, "k")}, {"amplitude", num(t, "amplitude", 1.0)}});
      } else if (k == "exp") {
        const json* kv = find(t, "k");
        if (!kv) throw ConfigError("missing frequency 'k'");
        out.push_back({{"kind", k}, {"k", int_vector(*kv, "k")}, {"re", num(t, "re", 1.0)}, {"im", num(t, "im", 0.0)}});
      } else if (k == "const") {
        out.push_back({{"kind", k}, {"value", num(t, "value", 0.0)}});
      } else {
        throw ConfigError("unknown term kind '" + k + "' (cos, sin, exp, const)");
      }
    } catch (const ConfigError& e) {
      errors.push_back(at + ": " + e.what());
    }
  }
  return out;
}

json normalize_system(const json* raw, bool torus, std::vector<std::string>& errors) {
  if (!raw || !raw->is_object()) {
    errors.push_back(std::string("system: missing object (") + (torus ? "'matrix'" : "'map'") + ")");
    return torus ? json{{"matrix", json::array({json::array({2, 1}), json::array({1, 1})})}} : json{{"map", "doubling"}};
  }
  if (torus) {
    const json* m = find(*raw, "matrix");
    if (!m) {
      errors.push_back("system.matrix: required for this command (e.g. [[2,1],[1,1]] or \"cat\")");
      return json{{"matrix", json::array()}};
    }
    if (m->is_string()) {
      if (*m == "cat") return json{{"matrix", json::array({json::array({2, 1}), json::array({1, 1})})}};
      if (*m == "doubling-circle") return json{{"matrix", json::array({json::array({2})})}};
      errors.push_back("system.matrix: unknown named matrix (cat, doubling-circle)");
      return json{{"matrix", json::array()}};
    }
    return json{{"matrix", *m}};
  }
  const json* m = find(*raw, "map");
  if (!m) {
    errors.push_back("system.map: required for this command (a built-in name or an inline definition)");
    return json{{"map", "doubling"}};
  }
  if (m->is_string()) return json{{"map", *m}};
  if (!m->is_object()) {
    errors.push_back("system.map: expected a name or an object {a, b, branches}");
    return json{{"map", "doubling"}};
  }
  json out{{"a", num(*m, "a", 0.0)}, {"b", num(*m, "b", 1.0)}, {"branches", json::array()}, {"name", "custom"}};
  if (const json* n = find(*m, "name"); n && n->is_string()) out["name"] = *n;
  const json* br = find(*m, "branches");
  if (!br || !br->is_array() || br->empty()) {
    errors.push_back("system.map.branches: expected a non-empty array");
  } else {
    for (const json& b : *br) {
      try {
        out["branches"].push_back({{"lo", num(b, "lo", 0.0)},
                                   {"hi", num(b, "hi", 1.0)},
                                   {"slope", num(b, "slope", 0.0)},
                                   {"offset", num(b, "offset", 0.0)},
                                   {"amplitude", num(b, "amplitude", 0.0)},
                                   {"frequency", num(b, "frequency", 0.0)}});
      } catch (const ConfigError& e) {
        errors.push_back(std::string("system.map.branches: ") + e.what());
      }
    }
  }
  return json{{"map", out}};
}

}  // namespace

const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> names{"spectrum",    "primitive", "variance",      "coboundary", "obstructions",
                                              "clt-modulus", "zygmund",   "bv-test",       "anosov-blocks", "prop-l",
                                              "advect",      "deform",    "decay-fit"};
  return names;
}

bool is_run_command(const std::string& name) {
  const auto& c = run_commands();
  return std::find(c.begin(), c.end(), name) != c.end();
}

bool is_torus_command(const std::string& name) {
  return name == "anosov-blocks" || name == "prop-l" || name == "advect" || name == "deform" || name == "decay-fit";
}

std::string ExperimentConfig::command() const { return doc.at("command").get<std::string>(); }

json normalize(const json& raw, const std::string& command_arg, std::vector<std::string>& errors) {
  if (!raw.is_object()) {
    errors.push_back("config: expected a JSON object");
    return json::object();
  }
  static const std::vector<std::string> known{"command", "system",  "analysis", "observable",
                                              "params",  "seed",    "threads",  "output"};
  for (const auto& [key, val] : raw.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) errors.push_back(key + ": unknown top-level key");

  std::string command = command_arg;
  if (const json* c = find(raw, "command")) {
    if (!c->is_string()) {
      errors.push_back("command: expected a string");
    } else if (command.empty()) {
      command = c->get<std::string>();
    } else if (c->get<std::string>() != command) {
      errors.push_back("command: config names '" + c->get<std::string>() + "' but '" + command + "' was requested");
    }
  }
  if (command.empty()) {
    errors.push_back("command: not given (pass a subcommand or set \"command\")");
  } else if (!is_run_command(command)) {
    errors.push_back("command: unknown subcommand '" + command + "'");
  }
  const bool torus = is_torus_command(command);

  json out;
  out["command"] = command;
  out["system"] = normalize_system(find(raw, "system"), torus, errors);
  if (!torus) out["analysis"] = merge_section(analysis_defaults(), find(raw, "analysis"), "analysis", errors);
  else if (find(raw, "analysis")) errors.push_back("analysis: not used by torus commands");

  const bool needs_observable = command != "spectrum" && command != "prop-l" && command != "deform";
  if (const json* obs = find(raw, "observable")) {
    out["observable"] = torus ? normalize_fourier_terms(*obs, "observable", errors)
                              : normalize_interval_terms(*obs, "observable", errors);
  } else if (needs_observable) {
    errors.push_back("observable: required for '" + command + "'");
    out["observable"] = json::array();
  } else {
    out["observable"] = json::array();
  }

  json params = merge_section(command_defaults(command), find(raw, "params"), "params", errors);
  for (const char* key : {"rho0", "phi", "w1", "w2"})
    if (params.contains(key)) params[key] = normalize_fourier_terms(params[key], std::string("params.") + key, errors);
  if (params.contains("test_functions")) {
    json tf = json::array();
    if (!params["test_functions"].is_array()) errors.push_back("params.test_functions: expected an array");
    else
      for (std::size_t i = 0; i < params["test_functions"].size(); ++i)
        tf.push_back(normalize_fourier_terms(params["test_functions"][i],
                                             "params.test_functions[" + std::to_string(i) + "]", errors));
    params["test_functions"] = tf;
  }
  out["params"] = params;

  out["seed"] = 12345;
  if (const json* s = find(raw, "seed")) {
    if (s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0)) out["seed"] = s->get<std::uint64_t>();
    else errors.push_back("seed: expected a nonnegative integer");
  }
  out["threads"] = 0;
  if (const json* t = find(raw, "threads")) {
    if (t->is_number_integer() && t->get<int>() >= 0) out["threads"] = *t;
    else errors.push_back("threads: expected a nonnegative integer");
  }
  out["output"] = "out";
  if (const json* o = find(raw, "output")) {
    if (o->is_string()) out["output"] = *o;
    else errors.push_back("output: expected a string");
  }
  return out;
}

ExperimentConfig load_config(const json& raw, const std::string& command) {
  std::vector<std::string> errors;
  json doc = normalize(raw, command, errors);
  if (!errors.empty()) {
    std::ostringstream os;
    os << errors.size() << " configuration error(s):";
    for (const std::string& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  return ExperimentConfig{doc};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
}

PiecewiseMap build_map(const json& system) {
  const json& m = system.at("map");
  if (m.is_string()) {
    try {
      return builtin_map(m.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("system.map: ") + e.what());
    }
  }
  std::vector<Branch> branches;
  for (const json& b : m.at("branches"))
    branches.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("slope").get<double>(),
                        b.at("offset").get<double>(), b.at("amplitude").get<double>(), b.at("frequency").get<double>()});
  return PiecewiseMap(m.at("a").get<double>(), m.at("b").get<double>(), std::move(branches), m.at("name").get<std::string>());
}

AnalysisOptions build_analysis(const json& analysis) {
  AnalysisOptions o;
  o.bins = analysis.at("bins").get<int>();
  o.gap_tol = analysis.at("gap_tol").get<double>();
  o.n_avg = analysis.at("n_avg").get<int>();
  o.support_floor = analysis.at("support_floor").get<double>();
  o.dense_limit = analysis.at("dense_limit").get<int>();
  if (o.bins < 8) throw ConfigError("analysis.bins must be at least 8");
  if (o.n_avg < 1) throw ConfigError("analysis.n_avg must be positive");
  return o;
}

PiecewiseFunction build_observable(const json& terms, double a, double b) {
  PiecewiseFunction f = PiecewiseFunction::zero(a, b);
  for (const json& t : terms) {
    const std::string k = t.at("kind").get<std::string>();
    if (k == "cos")
      f = f + PiecewiseFunction::uniform(a, b, TermSum::cosine(t.at("amplitude"), t.at("q"), t.at("phase")));
    else if (k == "sin")
      f = f + PiecewiseFunction::uniform(a, b, TermSum::sine(t.at("amplitude"), t.at("q"), t.at("phase")));
    else if (k == "poly")
      f = f + PiecewiseFunction::uniform(a, b, TermSum::polynomial(t.at("coeffs").get<std::vector<double>>()));
    else if (k == "indicator")
      f = f + PiecewiseFunction::indicator(a, b, t.at("lo"), t.at("hi")) * cplx(t.at("value").get<double>());
    else if (k == "const")
      f = f + PiecewiseFunction::constant(a, b, t.at("value").get<double>());
  }
  return f.simplified();
}

torus::IntMatrix build_matrix(const json& system) {
  const json& m = system.at("matrix");
  std::vector<std::vector<long long>> rows;
  try {
    for (const json& r : m) rows.push_back(r.get<std::vector<long long>>());
  } catch (const json::exception&) {
    throw ConfigError("system.matrix: expected a square integer matrix");
  }
  try {
    return torus::IntMatrix::from_rows(rows);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("system.matrix: ") + e.what());
  }
}

torus::TrigPolynomial build_trig(const json& terms, int dim) {
  torus::TrigPolynomial r;
  for (const json& t : terms) {
    const std::string k = t.at("kind").get<std::string>();
    if (k == "cos") r = r + torus::trig_cos(t.at("k").get<torus::IntVec>(), t.at("amplitude"));
    else if (k == "sin") r = r + torus::trig_sin(t.at("k").get<torus::IntVec>(), t.at("amplitude"));
    else if (k == "exp") r = r + torus::TrigPolynomial{{t.at("k").get<torus::IntVec>(), cplx(t.at("re"), t.at("im"))}};
    else if (k == "const") r = r + torus::TrigPolynomial{{torus::IntVec(dim, 0), t.at("value").get<double>()}};
  }
  for (const torus::FourierTerm& t : r)
    if (static_cast<int>(t.k.size()) != dim)
      throw ConfigError("frequency dimension " + std::to_string(t.k.size()) + " does not match the matrix size " +
                        std::to_string(dim));
  return r;
}

}  // namespace birkhoff::cli
