#include "speclab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "speclab/errors.hpp"

namespace speclab {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) bad(where, "unknown key \"" + it.key() + "\"");
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& req_member(const json& j, const std::string& where,
                       const char* key) {
  const json* v = find(j, key);
  if (v == nullptr) bad(where, std::string("missing required key \"") + key + "\"");
  return *v;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where, "expected a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) bad(where, "expected an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) bad(where, "expected a string");
  return v.get<std::string>();
}

const json& as_object(const json& v, const std::string& where) {
  if (!v.is_object()) bad(where, "expected an object");
  return v;
}

double req_number(const json& j, const std::string& where, const char* key) {
  return as_number(req_member(j, where, key), where + "." + key);
}

double opt_number(const json& j, const std::string& where, const char* key,
                  double fallback) {
  const json* v = find(j, key);
  return v == nullptr ? fallback : as_number(*v, where + "." + key);
}

std::int64_t opt_integer(const json& j, const std::string& where,
                         const char* key, std::int64_t fallback) {
  const json* v = find(j, key);
  return v == nullptr ? fallback : as_integer(*v, where + "." + key);
}

std::size_t opt_size(const json& j, const std::string& where, const char* key,
                     std::size_t fallback) {
  const json* v = find(j, key);
  if (v == nullptr) return fallback;
  const std::int64_t n = as_integer(*v, where + "." + key);
  if (n < 0) bad(where + "." + key, "expected a nonnegative integer");
  return static_cast<std::size_t>(n);
}

std::string req_string(const json& j, const std::string& where,
                       const char* key) {
  return as_string(req_member(j, where, key), where + "." + key);
}

std::string opt_string(const json& j, const std::string& where,
                       const char* key, const std::string& fallback) {
  const json* v = find(j, key);
  return v == nullptr ? fallback : as_string(*v, where + "." + key);
}

std::vector<double> as_number_array(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::size_t> as_size_array(const json& v,
                                       const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of integers");
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string slot = where + "[" + std::to_string(i) + "]";
    const std::int64_t n = as_integer(v[i], slot);
    if (n <= 0) bad(slot, "expected a positive integer");
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

// Like as_size_array but zero entries are allowed (band indices).
std::vector<std::size_t> as_size_array0(const json& v,
                                        const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of integers");
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string slot = where + "[" + std::to_string(i) + "]";
    const std::int64_t n = as_integer(v[i], slot);
    if (n < 0) bad(slot, "expected a nonnegative integer");
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

// ---- block parsers ---------------------------------------------------------

AngleRuleConfig parse_angles(const json& j, const std::string& where) {
  as_object(j, where);
  AngleRuleConfig out;
  const std::string kind = req_string(j, where, "kind");
  if (kind == "inv_sqrt_2n") {
    check_keys(j, where, {"kind"});
    out.kind = AngleRuleConfig::Kind::inv_sqrt_2n;
  } else if (kind == "power") {
    check_keys(j, where, {"kind", "alpha"});
    out.kind = AngleRuleConfig::Kind::power;
    out.alpha = opt_number(j, where, "alpha", out.alpha);
    if (!(out.alpha > 0.0)) bad(where + ".alpha", "expected a positive exponent");
  } else if (kind == "constant") {
    check_keys(j, where, {"kind", "value"});
    out.kind = AngleRuleConfig::Kind::constant;
    out.value = req_number(j, where, "value");
  } else {
    bad(where + ".kind", "expected one of inv_sqrt_2n, power, constant");
  }
  return out;
}

PotentialSpec parse_potential(const json& j, const std::string& where) {
  as_object(j, where);
  const std::string kind = req_string(j, where, "kind");
  if (kind == "zero") {
    check_keys(j, where, {"kind"});
    return PotentialSpec::zero();
  }
  if (kind == "gaussian_bump") {
    check_keys(j, where, {"kind", "v0", "width"});
    return PotentialSpec::gaussian_bump(req_number(j, where, "v0"),
                                        opt_number(j, where, "width", 1.0));
  }
  if (kind == "gaussian_well") {
    check_keys(j, where, {"kind", "v0", "width"});
    return PotentialSpec::gaussian_well(req_number(j, where, "v0"),
                                        opt_number(j, where, "width", 1.0));
  }
  if (kind == "coulomb") {
    check_keys(j, where, {"kind", "kappa_c"});
    return PotentialSpec::coulomb(req_number(j, where, "kappa_c"));
  }
  if (kind == "smeared_coulomb") {
    check_keys(j, where, {"kind", "kappa_c", "r_cut"});
    return PotentialSpec::smeared_coulomb(req_number(j, where, "kappa_c"),
                                          req_number(j, where, "r_cut"));
  }
  bad(where + ".kind",
      "expected one of zero, gaussian_bump, gaussian_well, coulomb, "
      "smeared_coulomb");
}

DiracBasisConfig parse_basis(const json& j, const std::string& where) {
  as_object(j, where);
  check_keys(j, where,
             {"r_max", "breakpoints", "grading_ratio", "order",
              "points_per_panel"});
  DiracBasisConfig out;
  out.r_max = opt_number(j, where, "r_max", out.r_max);
  out.breakpoints = opt_size(j, where, "breakpoints", out.breakpoints);
  out.grading_ratio = opt_number(j, where, "grading_ratio", out.grading_ratio);
  out.order = static_cast<int>(opt_integer(j, where, "order", out.order));
  out.points_per_panel = static_cast<int>(
      opt_integer(j, where, "points_per_panel", out.points_per_panel));
  if (!(out.r_max > 0.0)) bad(where + ".r_max", "expected a positive length");
  if (out.breakpoints < 2) bad(where + ".breakpoints", "expected at least 2");
  if (!(out.grading_ratio >= 1.0)) {
    bad(where + ".grading_ratio", "expected a ratio >= 1");
  }
  if (out.order < 2 || out.order > 12) {
    bad(where + ".order", "expected an order between 2 and 12");
  }
  if (out.points_per_panel < 0) {
    bad(where + ".points_per_panel", "expected 0 (automatic) or positive");
  }
  return out;
}

SchemeConfig parse_scheme(const json& j, const std::string& where) {
  as_object(j, where);
  SchemeConfig out;
  const std::string kind = req_string(j, where, "kind");
  using K = SchemeSpec::Kind;
  if (kind == "naive") {
    check_keys(j, where, {"kind", "mixing"});
    out.kind = K::naive;
    if (const json* m = find(j, "mixing")) {
      out.mixing = parse_angles(*m, where + ".mixing");
    }
  } else if (kind == "upper_lower") {
    check_keys(j, where, {"kind"});
    out.kind = K::upper_lower;
  } else if (kind == "dual") {
    check_keys(j, where, {"kind", "epsilon"});
    out.kind = K::dual;
    out.epsilon = opt_number(j, where, "epsilon", out.epsilon);
  } else if (kind == "free_split") {
    check_keys(j, where, {"kind"});
    out.kind = K::free_split;
  } else if (kind == "kinetic_balance") {
    check_keys(j, where, {"kind"});
    out.kind = K::kinetic_balance;
  } else if (kind == "atomic_balance") {
    check_keys(j, where, {"kind"});
    out.kind = K::atomic_balance;
  } else if (kind == "dual_kinetic_balance") {
    check_keys(j, where, {"kind", "epsilon"});
    out.kind = K::dual_kinetic_balance;
    out.epsilon = opt_number(j, where, "epsilon", out.epsilon);
  } else {
    bad(where + ".kind",
        "expected one of naive, upper_lower, dual, free_split, "
        "kinetic_balance, atomic_balance, dual_kinetic_balance");
  }
  if (!(out.epsilon > 0.0 && out.epsilon <= 1.0)) {
    bad(where + ".epsilon", "expected 0 < epsilon <= 1");
  }
  return out;
}

ModelConfig parse_model(const json& j, std::vector<int>* radii_out) {
  const std::string where = "model";
  as_object(j, where);
  ModelConfig out;
  const std::string kind = req_string(j, where, "kind");
  if (kind == "toy") {
    out.kind = ModelConfig::Kind::toy;
    check_keys(j, where, {"kind", "variant", "angles"});
    const std::string variant = opt_string(j, where, "variant", "bounded_below");
    if (variant == "bounded_below") {
      out.toy.variant = ToyVariant::bounded_below;
    } else if (variant == "unbounded_both") {
      out.toy.variant = ToyVariant::unbounded_both;
    } else {
      bad(where + ".variant", "expected bounded_below or unbounded_both");
    }
    if (const json* a = find(j, "angles")) {
      out.toy.angles = parse_angles(*a, where + ".angles");
    }
  } else if (kind == "dirac") {
    out.kind = ModelConfig::Kind::dirac;
    check_keys(j, where, {"kind", "kappa", "potential", "basis"});
    out.dirac.kappa =
        static_cast<int>(opt_integer(j, where, "kappa", out.dirac.kappa));
    if (out.dirac.kappa == 0) bad(where + ".kappa", "expected a nonzero channel index");
    if (const json* p = find(j, "potential")) {
      out.dirac.potential = parse_potential(*p, where + ".potential");
    }
    if (const json* b = find(j, "basis")) {
      out.dirac.basis = parse_basis(*b, where + ".basis");
    }
  } else if (kind == "periodic") {
    out.kind = ModelConfig::Kind::periodic;
    check_keys(j, where,
               {"kind", "defect_amplitude", "defect_width", "potential_coeffs",
                "cutoff", "n_xi", "max_translate", "kept_bands", "below_bands",
                "above_bands", "radii"});
    PeriodicModelConfig& p = out.periodic;
    p.model = PeriodicModel::mathieu_default();
    p.model.defect.amplitude =
        opt_number(j, where, "defect_amplitude", p.model.defect.amplitude);
    p.model.defect.width =
        opt_number(j, where, "defect_width", p.model.defect.width);
    if (!(p.model.defect.width > 0.0)) {
      bad(where + ".defect_width", "expected a positive width");
    }
    if (const json* c = find(j, "potential_coeffs")) {
      const auto coeffs = as_number_array(*c, where + ".potential_coeffs");
      if (coeffs.empty() || coeffs.size() % 2 == 0) {
        bad(where + ".potential_coeffs",
            "expected an odd-length array centered on the constant term");
      }
      p.model.vper_coeffs.assign(coeffs.begin(), coeffs.end());
    }
    p.model.planewave_cutoff = static_cast<int>(
        opt_integer(j, where, "cutoff", p.model.planewave_cutoff));
    if (p.model.planewave_cutoff < 2) {
      bad(where + ".cutoff", "expected a plane-wave cutoff >= 2");
    }
    p.n_xi = opt_size(j, where, "n_xi", p.n_xi);
    p.max_translate = static_cast<int>(
        opt_integer(j, where, "max_translate", p.max_translate));
    if (p.max_translate < 2) {
      bad(where + ".max_translate", "expected a translate radius >= 2");
    }
    p.kept_bands = opt_size(j, where, "kept_bands", p.kept_bands);
    if (const json* b = find(j, "below_bands")) {
      p.below_bands = as_size_array0(*b, where + ".below_bands");
    }
    if (const json* b = find(j, "above_bands")) {
      p.above_bands = as_size_array0(*b, where + ".above_bands");
    }
    if (p.below_bands.empty() || p.above_bands.empty()) {
      bad(where, "band groups on both sides of the gap must be nonempty");
    }
    if (const json* r = find(j, "radii")) {
      const auto radii = as_size_array(*r, where + ".radii");
      radii_out->clear();
      for (std::size_t v : radii) radii_out->push_back(static_cast<int>(v));
    }
  } else {
    bad(where + ".kind", "expected one of toy, dirac, periodic");
  }
  return out;
}

DetectorParams parse_detector(const json& j) {
  const std::string where = "detector";
  as_object(j, where);
  check_keys(j, where,
             {"cluster_fraction", "drift_fraction", "true_fraction",
              "window_margin_fraction"});
  DetectorParams out;
  out.cluster_fraction =
      opt_number(j, where, "cluster_fraction", out.cluster_fraction);
  out.drift_fraction =
      opt_number(j, where, "drift_fraction", out.drift_fraction);
  out.true_fraction = opt_number(j, where, "true_fraction", out.true_fraction);
  out.window_margin_fraction = opt_number(j, where, "window_margin_fraction",
                                          out.window_margin_fraction);
  const auto check = [&](double v, const char* key) {
    if (!(v > 0.0 && v < 1.0)) {
      bad(where + "." + key, "expected a fraction strictly between 0 and 1");
    }
  };
  check(out.cluster_fraction, "cluster_fraction");
  check(out.drift_fraction, "drift_fraction");
  check(out.true_fraction, "true_fraction");
  check(out.window_margin_fraction, "window_margin_fraction");
  return out;
}

ReferenceConfig parse_references(const json& j) {
  const std::string where = "references";
  as_object(j, where);
  ReferenceConfig out;
  const std::string kind = req_string(j, where, "kind");
  if (kind == "none") {
    check_keys(j, where, {"kind"});
    out.kind = ReferenceConfig::Kind::none;
  } else if (kind == "closed_form_levels") {
    check_keys(j, where, {"kind", "count", "tolerance"});
    out.kind = ReferenceConfig::Kind::closed_form_levels;
    out.count = static_cast<int>(opt_integer(j, where, "count", out.count));
    if (out.count < 1) bad(where + ".count", "expected at least one level");
  } else if (kind == "converged_scheme") {
    check_keys(j, where, {"kind", "scheme", "refine_factor", "tolerance"});
    out.kind = ReferenceConfig::Kind::converged_scheme;
    out.scheme = parse_scheme(req_member(j, where, "scheme"), where + ".scheme");
    out.refine_factor =
        opt_number(j, where, "refine_factor", out.refine_factor);
    if (!(out.refine_factor >= 1.0)) {
      bad(where + ".refine_factor", "expected a factor >= 1");
    }
  } else if (kind == "supercell") {
    check_keys(j, where, {"kind", "cells", "cell_cutoff", "tolerance"});
    out.kind = ReferenceConfig::Kind::supercell;
    out.cells = opt_size(j, where, "cells", out.cells);
    out.cell_cutoff = static_cast<int>(
        opt_integer(j, where, "cell_cutoff", out.cell_cutoff));
    if (out.cells < 4 || out.cells % 2 != 0) {
      bad(where + ".cells", "expected an even cell count >= 4");
    }
    if (out.cell_cutoff < 2) {
      bad(where + ".cell_cutoff", "expected a per-cell cutoff >= 2");
    }
  } else {
    bad(where + ".kind",
        "expected one of none, closed_form_levels, converged_scheme, "
        "supercell");
  }
  out.tolerance = opt_number(j, where, "tolerance", out.tolerance);
  if (out.tolerance < 0.0) bad(where + ".tolerance", "expected >= 0");
  return out;
}

ProbeConfig parse_probe(const json& j) {
  const std::string where = "probe";
  as_object(j, where);
  ProbeConfig out;
  const std::string kind = req_string(j, where, "kind");
  if (kind == "balance_samples") {
    check_keys(j, where, {"kind", "scheme", "samples"});
    out.kind = ProbeConfig::Kind::balance_samples;
  } else if (kind == "hardy_sweep") {
    check_keys(j, where, {"kind", "samples", "kappas", "m_param"});
    out.kind = ProbeConfig::Kind::hardy_sweep;
    if (const json* k = find(j, "kappas")) {
      out.kappas = as_number_array(*k, where + ".kappas");
      if (out.kappas.empty()) bad(where + ".kappas", "expected at least one value");
    }
    out.m_param = opt_number(j, where, "m_param", out.m_param);
    if (out.m_param < 0.0) {
      bad(where + ".m_param", "expected 0 (automatic) or a positive mass");
    }
  } else if (kind == "bump_sweep") {
    check_keys(j, where, {"kind", "scheme", "bump_n", "bump_delta"});
    out.kind = ProbeConfig::Kind::bump_sweep;
    if (const json* n = find(j, "bump_n")) {
      out.bump_n = as_number_array(*n, where + ".bump_n");
      if (out.bump_n.empty()) bad(where + ".bump_n", "expected at least one value");
      for (double v : out.bump_n) {
        if (!(v > 0.0)) bad(where + ".bump_n", "expected positive scales");
      }
    }
    out.bump_delta = opt_number(j, where, "bump_delta", out.bump_delta);
    if (!(out.bump_delta > 1.0)) {
      bad(where + ".bump_delta", "expected a scale separation > 1");
    }
  } else {
    bad(where + ".kind",
        "expected one of balance_samples, hardy_sweep, bump_sweep");
  }
  if (const json* s = find(j, "scheme")) {
    out.scheme = parse_scheme(*s, where + ".scheme");
  }
  out.samples = opt_size(j, where, "samples", out.samples);
  if (out.samples < 1) bad(where + ".samples", "expected at least one sample");
  return out;
}

OutputConfig parse_output(const json& j) {
  const std::string where = "output";
  as_object(j, where);
  check_keys(j, where,
             {"directory", "spectra_file", "report_file", "probe_file"});
  OutputConfig out;
  out.directory = opt_string(j, where, "directory", out.directory);
  out.spectra_file = opt_string(j, where, "spectra_file", out.spectra_file);
  out.report_file = opt_string(j, where, "report_file", out.report_file);
  out.probe_file = opt_string(j, where, "probe_file", out.probe_file);
  return out;
}

ExperimentConfig parse_root(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("top-level config must be a JSON object");
  }
  check_keys(j, "config",
             {"model", "scheme", "sizes", "detector", "references", "probe",
              "output", "seed", "threads"});
  ExperimentConfig cfg;
  std::vector<int> radii;
  cfg.model = parse_model(req_member(j, "config", "model"), &radii);
  if (const json* s = find(j, "scheme")) cfg.scheme = parse_scheme(*s, "scheme");
  if (const json* s = find(j, "sizes")) cfg.sizes = as_size_array(*s, "sizes");
  if (!radii.empty()) {
    if (!cfg.sizes.empty()) {
      bad("config", "give either \"sizes\" or model.radii, not both");
    }
    const PeriodicModelConfig& p = cfg.model.periodic;
    const std::size_t per = p.below_bands.size() + p.above_bands.size();
    for (int r : radii) {
      if (r < 2 || r > p.max_translate) {
        bad("model.radii", "radius " + std::to_string(r) +
                               " outside [2, max_translate]");
      }
      cfg.sizes.push_back(per * static_cast<std::size_t>(2 * r + 1));
    }
  }
  if (const json* d = find(j, "detector")) cfg.detector = parse_detector(*d);
  if (const json* r = find(j, "references")) {
    cfg.references = parse_references(*r);
  }
  if (const json* p = find(j, "probe")) cfg.probe = parse_probe(*p);
  if (const json* o = find(j, "output")) cfg.output = parse_output(*o);
  const std::int64_t seed = opt_integer(j, "config", "seed", 0);
  if (seed < 0) bad("config.seed", "expected a nonnegative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const std::int64_t threads = opt_integer(j, "config", "threads", 1);
  if (threads < 1 || threads > 1024) {
    bad("config.threads", "expected between 1 and 1024");
  }
  cfg.threads = static_cast<unsigned>(threads);
  return cfg;
}

}  // namespace

// ---- rule/scheme materialization -------------------------------------------

std::function<double(std::size_t)> AngleRuleConfig::make() const {
  switch (kind) {
    case Kind::inv_sqrt_2n:
      return theta_inv_sqrt_2n();
    case Kind::power:
      return theta_power(alpha);
    case Kind::constant:
      return theta_constant(value);
  }
  throw ConfigError("unknown angle rule kind");
}

std::string AngleRuleConfig::label() const {
  switch (kind) {
    case Kind::inv_sqrt_2n:
      return "theta=1/sqrt(2n)";
    case Kind::power:
      return "theta=n^-" + fmt(alpha);
    case Kind::constant:
      return "theta=" + fmt(value);
  }
  return "theta";
}

SchemeSpec SchemeConfig::make() const {
  using K = SchemeSpec::Kind;
  switch (kind) {
    case K::naive: {
      SchemeSpec s = SchemeSpec::naive();
      if (mixing.has_value()) s.mixing_angles = mixing->make();
      return s;
    }
    case K::upper_lower:
      return SchemeSpec::upper_lower();
    case K::dual:
      return SchemeSpec::dual(epsilon);
    case K::free_split:
      return SchemeSpec::free_split();
    case K::kinetic_balance:
      return SchemeSpec::kinetic_balance();
    case K::atomic_balance:
      return SchemeSpec::atomic_balance();
    case K::dual_kinetic_balance:
      return SchemeSpec::dual_kinetic_balance(epsilon);
  }
  throw ConfigError("unknown scheme kind");
}

std::string SchemeConfig::label() const {
  using K = SchemeSpec::Kind;
  switch (kind) {
    case K::naive:
      return "naive";
    case K::upper_lower:
      return "upper-lower";
    case K::dual:
      return "dual(eps=" + fmt(epsilon) + ")";
    case K::free_split:
      return "free-split";
    case K::kinetic_balance:
      return "kinetic-balance";
    case K::atomic_balance:
      return "atomic-balance";
    case K::dual_kinetic_balance:
      return "dual-kinetic-balance(eps=" + fmt(epsilon) + ")";
  }
  return "scheme";
}

// ---- entry points ----------------------------------------------------------

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_root(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config structure error: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("could not read config file \"" + path + "\"");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_experiment_config(buf.str());
}

// ---- serialization ---------------------------------------------------------

std::string spectra_csv(const RunSequence& runs) {
  std::string out = "size,index,value\n";
  for (std::size_t si = 0; si < runs.sizes.size(); ++si) {
    const auto& spectrum = runs.spectra[si];
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
      out += std::to_string(runs.sizes[si]);
      out += ',';
      out += std::to_string(k);
      out += ',';
      out += fmt17(spectrum[k]);
      out += '\n';
    }
  }
  return out;
}

std::string report_json(const RunSequence& runs, const PollutionReport& report,
                        const PredictedSpurious& predicted,
                        const SpectrumModel& model, bool pass) {
  json j;
  j["model"] = runs.model_id;
  j["scheme"] = runs.scheme_id;
  j["sizes"] = runs.sizes;
  j["gap"] = {{"lo", model.gap_lo}, {"hi", model.gap_hi}};
  j["window"] = {{"lo", runs.window_lo}, {"hi", runs.window_hi}};
  j["references"] = json::array();
  for (const ReferenceEig& r : model.reference_eigs) {
    j["references"].push_back(
        {{"value", r.value}, {"tolerance", r.tolerance}});
  }
  j["candidates"] = json::array();
  for (const CandidatePoint& c : report.candidates) {
    j["candidates"].push_back({{"location", c.location},
                               {"persistence", c.persistence_score},
                               {"drift", c.drift},
                               {"verdict", to_string(c.verdict)}});
  }
  j["predicted"] = json::array();
  for (std::size_t i = 0; i < predicted.intervals.size(); ++i) {
    j["predicted"].push_back({{"lo", predicted.intervals[i].first},
                              {"hi", predicted.intervals[i].second},
                              {"provenance", predicted.provenance[i]}});
  }
  j["counts"] = {{"spurious", report.spurious().size()},
                 {"true", report.true_hits().size()},
                 {"unresolved", report.unresolved().size()}};
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

std::string probe_csv(const std::string& header,
                      const std::vector<std::array<double, 3>>& rows) {
  std::string out = header;
  out += '\n';
  for (const auto& row : rows) {
    out += fmt17(row[0]);
    out += ',';
    out += fmt17(row[1]);
    out += ',';
    out += fmt17(row[2]);
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("could not open \"" + tmp + "\" for writing");
    f.write(content.data(),
            static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw Error("failed while writing \"" + tmp + "\"");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("could not move \"" + tmp + "\" into place at \"" + path +
                "\"");
  }
}

}  // namespace speclab
