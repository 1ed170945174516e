#pragma once
// JSON experiment configs. Unknown keys are rejected; every error names its key path.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqm/errors.hpp"
#include "sqm/exponent_calculus.hpp"
#include "sqm/model_symbols.hpp"
#include "sqm/quasimode_builder.hpp"
#include "sqm/verification_harness.hpp"

namespace sqm {

using json = nlohmann::ordered_json;

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct OracleSettings {
  bool enabled = false;
  int grid = 24;
  std::vector<double> h_values = SweepConfig::geometric_h(2, 6);
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelOperatorSpec spec;
  Interval interval{-1.0, 1.0};
  bool normalize = true;
  Rational beta{1, 8};
  double xi2 = 1.0;
  CutoffSpec cutoff;
  std::vector<double> h_values = SweepConfig::geometric_h(4, 12);
  std::vector<int> term_counts{0, 1, 2, 3, 4};
  Path path = Path::Conjugated;
  int grid = 256;
  double half_width = 8.0;
  int jobs = 1;
  std::optional<Thresholds> thresholds;  // defaults depend on beta
  double norm_upper = 10.0;
  double norm_lower = 1e-3;
  OracleSettings oracle;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::optional<VerdictKind> expect;

  Thresholds resolved_thresholds() const {
    return thresholds ? *thresholds : Thresholds::for_beta(beta.to_double());
  }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(path + (path.empty() ? "" : ".") + it.key() + ": unknown key");
}

template <class T>
T get(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + (path.empty() ? "" : ".") + key + ": " + e.what());
  }
}

inline cplx parse_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(path + ": expected a complex number as [re, im]");
}

inline CoefficientFunction parse_coeffs(const json& obj, const std::string& path, const char* key,
                                        CoefficientFunction fallback) {
  if (!obj.contains(key)) return fallback;
  const json& arr = obj.at(key);
  std::string p = path + "." + key;
  if (!arr.is_array() || arr.empty()) throw ConfigError(p + ": expected a non-empty list of [re, im] pairs");
  std::vector<cplx> c;
  for (std::size_t i = 0; i < arr.size(); ++i) c.push_back(parse_complex(arr[i], p + "[" + std::to_string(i) + "]"));
  try {
    return CoefficientFunction(std::move(c));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(p + ": " + e.what());
  }
}

inline json coeffs_json(const CoefficientFunction& f) {
  json a = json::array();
  for (auto& v : f.coeffs()) a.push_back({v.real(), v.imag()});
  return a;
}

inline Path parse_path(const std::string& s, const std::string& p) {
  if (s == "conjugated") return Path::Conjugated;
  if (s == "full") return Path::Full;
  if (s == "both") return Path::Both;
  throw ConfigError(p + ": expected conjugated, full or both");
}

inline std::vector<double> parse_h(const json& obj, const std::string& path) {
  if (obj.contains("h_values") && obj.contains("h_exponents"))
    throw ConfigError(path + ": give either h_values or h_exponents, not both");
  if (obj.contains("h_exponents")) {
    auto e = get<std::vector<int>>(obj, path, "h_exponents", {});
    if (e.size() != 2 || e[0] > e[1]) throw ConfigError(path + ".h_exponents: expected [lo, hi] with lo <= hi");
    return SweepConfig::geometric_h(e[0], e[1]);
  }
  return get<std::vector<double>>(obj, path, "h_values", {});
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  ExperimentConfig c;
  reject_unknown(j, "", {"name", "spec", "recipe", "sweep", "thresholds", "norm_bounds", "oracle",
                         "normalize_origin", "output_dir", "seed", "expect"});
  c.name = get<std::string>(j, "", "name", c.name);
  c.normalize = get<bool>(j, "", "normalize_origin", c.normalize);
  c.output_dir = get<std::string>(j, "", "output_dir", c.output_dir);
  c.seed = get<std::uint64_t>(j, "", "seed", c.seed);
  if (j.contains("expect")) {
    try {
      c.expect = parse_verdict(get<std::string>(j, "", "expect", ""));
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("expect: ") + e.what());
    }
  }

  if (!j.contains("spec")) throw ConfigError("spec: missing");
  const json& s = j.at("spec");
  reject_unknown(s, "spec", {"case", "j", "k", "q_coeffs", "b0_coeffs", "b1_coeffs", "a1_coeffs", "shift", "interval"});
  std::string kase = get<std::string>(s, "spec", "case", "tangential");
  if (kase == "tangential") c.spec.kase = Case::Tangential;
  else if (kase == "transversal") c.spec.kase = Case::Transversal;
  else throw ConfigError("spec.case: expected tangential or transversal");
  c.spec.j = get<int>(s, "spec", "j", kase == "transversal" ? 1 : 2);
  c.spec.k = get<int>(s, "spec", "k", 0);
  c.spec.q = parse_coeffs(s, "spec", "q_coeffs", CoefficientFunction::constant(1.0));
  c.spec.b.b0 = parse_coeffs(s, "spec", "b0_coeffs", {});
  c.spec.b.b1 = parse_coeffs(s, "spec", "b1_coeffs", {});
  c.spec.a1 = parse_coeffs(s, "spec", "a1_coeffs", {});
  if (s.contains("shift")) c.spec.shift = parse_complex(s.at("shift"), "spec.shift");
  if (s.contains("interval")) {
    auto iv = get<std::vector<double>>(s, "spec", "interval", {});
    if (iv.size() != 2 || !(iv[0] < iv[1])) throw ConfigError("spec.interval: expected [lo, hi] with lo < hi");
    c.interval = {iv[0], iv[1]};
  }
  try {
    validate(c.spec);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }

  if (j.contains("recipe")) {
    const json& r = j.at("recipe");
    reject_unknown(r, "recipe", {"beta", "xi2", "cutoff"});
    if (r.contains("beta")) {
      const json& b = r.at("beta");
      try {
        if (b.is_string()) c.beta = Rational::parse(b.get<std::string>());
        else if (b.is_array() && b.size() == 2) c.beta = Rational(b[0].get<std::int64_t>(), b[1].get<std::int64_t>());
        else throw ConfigError("recipe.beta: expected \"p/q\" or [p, q]");
      } catch (const std::exception& e) {
        throw ConfigError(std::string("recipe.beta: ") + e.what());
      }
    }
    c.xi2 = get<double>(r, "recipe", "xi2", c.xi2);
    if (r.contains("cutoff")) {
      const json& k = r.at("cutoff");
      reject_unknown(k, "recipe.cutoff",
                     {"radius_t", "radius_y", "center_t", "center_y", "plateau", "envelope_t", "envelope_y"});
      auto& cu = c.cutoff;
      cu.radius_t = get<double>(k, "recipe.cutoff", "radius_t", cu.radius_t);
      cu.radius_y = get<double>(k, "recipe.cutoff", "radius_y", cu.radius_y);
      cu.center_t = get<double>(k, "recipe.cutoff", "center_t", cu.center_t);
      cu.center_y = get<double>(k, "recipe.cutoff", "center_y", cu.center_y);
      cu.plateau = get<double>(k, "recipe.cutoff", "plateau", cu.plateau);
      cu.envelope_t = get<double>(k, "recipe.cutoff", "envelope_t", cu.envelope_t);
      cu.envelope_y = get<double>(k, "recipe.cutoff", "envelope_y", cu.envelope_y);
      if (!(cu.radius_t > 0 && cu.radius_y > 0)) throw ConfigError("recipe.cutoff: radii must be positive");
      if (!(cu.plateau >= 0 && cu.plateau < 1)) throw ConfigError("recipe.cutoff.plateau: expected [0, 1)");
    }
  }

  if (j.contains("sweep")) {
    const json& w = j.at("sweep");
    reject_unknown(w, "sweep", {"h_values", "h_exponents", "term_counts", "path", "grid", "half_width", "jobs"});
    auto h = parse_h(w, "sweep");
    if (!h.empty()) c.h_values = h;
    c.term_counts = get<std::vector<int>>(w, "sweep", "term_counts", c.term_counts);
    c.path = parse_path(get<std::string>(w, "sweep", "path", "conjugated"), "sweep.path");
    c.grid = get<int>(w, "sweep", "grid", c.grid);
    c.half_width = get<double>(w, "sweep", "half_width", c.half_width);
    c.jobs = get<int>(w, "sweep", "jobs", c.jobs);
  }

  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    reject_unknown(t, "thresholds", {"gain", "saturation", "oracle_slack", "bounded_order"});
    Thresholds th = Thresholds::for_beta(c.beta.to_double());
    th.gain = get<double>(t, "thresholds", "gain", th.gain);
    th.saturation = get<double>(t, "thresholds", "saturation", th.saturation);
    th.oracle_slack = get<double>(t, "thresholds", "oracle_slack", th.oracle_slack);
    th.bounded_order = get<double>(t, "thresholds", "bounded_order", th.bounded_order);
    c.thresholds = th;
  }

  if (j.contains("norm_bounds")) {
    const json& n = j.at("norm_bounds");
    reject_unknown(n, "norm_bounds", {"upper", "lower"});
    c.norm_upper = get<double>(n, "norm_bounds", "upper", c.norm_upper);
    c.norm_lower = get<double>(n, "norm_bounds", "lower", c.norm_lower);
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    reject_unknown(o, "oracle", {"enabled", "grid", "h_values", "h_exponents"});
    c.oracle.enabled = get<bool>(o, "oracle", "enabled", c.oracle.enabled);
    c.oracle.grid = get<int>(o, "oracle", "grid", c.oracle.grid);
    auto h = parse_h(o, "oracle");
    if (!h.empty()) c.oracle.h_values = h;
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

/// Fully materialized config; parse_config(to_json(c)) reproduces c.
inline json to_json(const ExperimentConfig& c) {
  using detail::coeffs_json;
  json j;
  j["name"] = c.name;
  j["spec"] = {{"case", to_string(c.spec.kase)},
               {"j", c.spec.j},
               {"k", c.spec.k},
               {"q_coeffs", coeffs_json(c.spec.q)},
               {"b0_coeffs", coeffs_json(c.spec.b.b0)},
               {"b1_coeffs", coeffs_json(c.spec.b.b1)},
               {"a1_coeffs", coeffs_json(c.spec.a1)},
               {"shift", {c.spec.shift.real(), c.spec.shift.imag()}},
               {"interval", {c.interval.lo, c.interval.hi}}};
  const auto& cu = c.cutoff;
  j["recipe"] = {{"beta", c.beta.str()},
                 {"xi2", c.xi2},
                 {"cutoff",
                  {{"radius_t", cu.radius_t},
                   {"radius_y", cu.radius_y},
                   {"center_t", cu.center_t},
                   {"center_y", cu.center_y},
                   {"plateau", cu.plateau},
                   {"envelope_t", cu.envelope_t},
                   {"envelope_y", cu.envelope_y}}}};
  j["sweep"] = {{"h_values", c.h_values}, {"term_counts", c.term_counts}, {"path", to_string(c.path)},
                {"grid", c.grid},         {"half_width", c.half_width},   {"jobs", c.jobs}};
  auto th = c.resolved_thresholds();
  j["thresholds"] = {{"gain", th.gain},
                     {"saturation", th.saturation},
                     {"oracle_slack", th.oracle_slack},
                     {"bounded_order", th.bounded_order}};
  j["norm_bounds"] = {{"upper", c.norm_upper}, {"lower", c.norm_lower}};
  j["oracle"] = {{"enabled", c.oracle.enabled}, {"grid", c.oracle.grid}, {"h_values", c.oracle.h_values}};
  j["normalize_origin"] = c.normalize;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  if (c.expect) j["expect"] = to_string(*c.expect);
  return j;
}

}  // namespace sqm
