#include <cmath>
#include <fstream>
#include <sstream>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

#ifndef MMCQED_VERSION
#define MMCQED_VERSION "0.0.0"
#endif

namespace mmcqed {

using nlohmann::json;

std::string code_version() { return MMCQED_VERSION; }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Campaign::hash() const { return fnv1a_hex(config.dump()); }

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where + key, "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) fail(where + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where + key, "not finite");
  return x;
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

template <typename T>
T integer_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(where + key, "expected an integer");
  return v.get<T>();
}

bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(where + key, "expected true or false");
  return j.at(key).get<bool>();
}

std::string string_or(const json& j, const std::string& key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(where + key, "expected a string");
  return j.at(key).get<std::string>();
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) fail(where.empty() ? "document" : where.substr(0, where.size() - 1), "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) fail(where + k, "unknown field");
  }
}

std::vector<double> grid_from_json(const json& j, const std::string& where) {
  if (j.is_array()) {
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
      v.push_back(j[i].get<double>());
    }
    return v;
  }
  if (j.is_object()) {
    only_keys(j, {"start", "stop", "count", "step"}, where + ".");
    const double a = number(j, "start", where + "."), b = number(j, "stop", where + ".");
    std::size_t n = 0;
    if (j.contains("count")) {
      n = integer_or<std::size_t>(j, "count", 0, where + ".");
    } else {
      const double step = number(j, "step", where + ".");
      if (!(step > 0.0)) fail(where + ".step", "must be > 0");
      n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    }
    if (n < 1) fail(where + ".count", "must be >= 1");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
  }
  fail(where, "expected a list of values or {start, stop, count|step}");
}

// "modes[1].g_mhz" -> "/modes/1/g_mhz"
json::json_pointer sweep_pointer(const std::string& path) {
  std::string out = "/";
  for (char c : path) {
    if (c == '.' || c == '[') {
      out += '/';
    } else if (c != ']') {
      out += c;
    }
  }
  return json::json_pointer(out);
}

}  // namespace

SystemConfig system_from_json(const json& s) {
  const std::string w = "system.";
  only_keys(s, {"modes", "qubit", "drive", "cutoffs", "frame", "effective_order"}, w);
  SystemConfig c;
  const json& modes = require(s, "modes", w);
  if (!modes.is_array() || modes.empty()) fail(w + "modes", "expected a non-empty list");
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const std::string mw = w + "modes[" + std::to_string(m) + "].";
    only_keys(modes[m], {"detuning_mhz", "kappa_mhz", "g_mhz"}, mw);
    ModeSpec spec;
    spec.detuning = units::from_mhz(number(modes[m], "detuning_mhz", mw));
    spec.decay = units::from_mhz(number(modes[m], "kappa_mhz", mw));
    spec.coupling = units::from_mhz(number(modes[m], "g_mhz", mw));
    if (!(spec.decay > 0.0)) fail(mw + "kappa_mhz", "kappa must be > 0");
    if (spec.coupling < 0.0) fail(mw + "g_mhz", "g must be >= 0");
    c.modes.push_back(spec);
  }
  const json qubit = s.contains("qubit") ? s.at("qubit") : json::object();
  only_keys(qubit, {"detuning_mhz", "gamma_mhz"}, w + "qubit.");
  c.qubit_detuning = units::from_mhz(number_or(qubit, "detuning_mhz", 0.0, w + "qubit."));
  c.qubit_decay = units::from_mhz(number(qubit, "gamma_mhz", w + "qubit."));
  if (c.qubit_decay < 0.0) fail(w + "qubit.gamma_mhz", "gamma must be >= 0");

  const json& drive = require(s, "drive", w);
  const std::string dw = w + "drive.";
  const std::string type = string_or(drive, "type", "", dw);
  if (type == "qubit") {
    only_keys(drive, {"type", "rabi_mhz"}, dw);
    c.drive = QubitDrive{units::from_mhz(number(drive, "rabi_mhz", dw))};
    c.frame = Frame::RotatingQubitDrive;
  } else if (type == "cavity") {
    only_keys(drive, {"type", "mode", "eta_mhz", "all_modes"}, dw);
    c.drive = CavityDrive{integer_or<int>(drive, "mode", 0, dw), units::from_mhz(number(drive, "eta_mhz", dw))};
    c.drive_all_modes = bool_or(drive, "all_modes", false, dw);
    c.frame = Frame::RotatingCavityDrive;
  } else {
    fail(dw + "type", "expected \"qubit\" or \"cavity\"");
  }
  const json& cut = require(s, "cutoffs", w);
  if (!cut.is_array()) fail(w + "cutoffs", "expected a list of integers");
  for (std::size_t i = 0; i < cut.size(); ++i) {
    if (!cut[i].is_number_integer()) fail(w + "cutoffs[" + std::to_string(i) + "]", "expected an integer");
    c.cutoffs.push_back(cut[i].get<int>());
  }
  if (s.contains("frame")) {
    try {
      c.frame = parse_frame(string_or(s, "frame", "", w));
    } catch (const ConfigError& e) {
      fail(w + "frame", e.what());
    }
  }
  c.effective_order = integer_or<int>(s, "effective_order", 1, w);
  c.validate();
  return c;
}

json system_to_json(const SystemConfig& c) {
  json s;
  s["modes"] = json::array();
  for (const auto& m : c.modes) {
    s["modes"].push_back({{"detuning_mhz", units::to_mhz(m.detuning)},
                          {"kappa_mhz", units::to_mhz(m.decay)},
                          {"g_mhz", units::to_mhz(m.coupling)}});
  }
  s["qubit"] = {{"detuning_mhz", units::to_mhz(c.qubit_detuning)}, {"gamma_mhz", units::to_mhz(c.qubit_decay)}};
  if (const auto* q = std::get_if<QubitDrive>(&c.drive)) {
    s["drive"] = {{"type", "qubit"}, {"rabi_mhz", units::to_mhz(q->rabi)}};
  } else {
    const auto& d = std::get<CavityDrive>(c.drive);
    s["drive"] = {{"type", "cavity"}, {"mode", d.mode}, {"eta_mhz", units::to_mhz(d.amplitude)}, {"all_modes", c.drive_all_modes}};
  }
  s["cutoffs"] = c.cutoffs;
  s["frame"] = to_string(c.frame);
  s["effective_order"] = c.effective_order;
  return s;
}

namespace {

SolverSettings solver_from_json(const json& j, json& echo) {
  const std::string w = "solver.";
  only_keys(j, {"max_superoperator_dim", "direct_solve_limit", "steady_residual_tol", "steady_rate_tol",
                "steady_window", "steady_max_time", "rtol", "atol", "trace_drift_tol", "min_step", "max_step",
                "positivity_tol", "stationarity_tol"},
            w);
  SolverSettings s;
  s.max_superoperator_dim = integer_or<std::size_t>(j, "max_superoperator_dim", s.max_superoperator_dim, w);
  s.direct_solve_limit = integer_or<std::size_t>(j, "direct_solve_limit", s.direct_solve_limit, w);
  s.steady_residual_tol = number_or(j, "steady_residual_tol", s.steady_residual_tol, w);
  s.steady_rate_tol = number_or(j, "steady_rate_tol", s.steady_rate_tol, w);
  s.steady_window = number_or(j, "steady_window", s.steady_window, w);
  s.steady_max_time = number_or(j, "steady_max_time", s.steady_max_time, w);
  s.rtol = number_or(j, "rtol", s.rtol, w);
  s.atol = number_or(j, "atol", s.atol, w);
  s.trace_drift_tol = number_or(j, "trace_drift_tol", s.trace_drift_tol, w);
  s.min_step = number_or(j, "min_step", s.min_step, w);
  s.max_step = number_or(j, "max_step", s.max_step, w);
  s.positivity_tol = number_or(j, "positivity_tol", s.positivity_tol, w);
  s.stationarity_tol = number_or(j, "stationarity_tol", s.stationarity_tol, w);
  if (!(s.rtol > 0.0) || !(s.atol > 0.0)) fail(w + "rtol", "tolerances must be > 0");
  echo = {{"max_superoperator_dim", s.max_superoperator_dim}, {"direct_solve_limit", s.direct_solve_limit},
          {"steady_residual_tol", s.steady_residual_tol}, {"steady_rate_tol", s.steady_rate_tol},
          {"steady_window", s.steady_window}, {"steady_max_time", s.steady_max_time}, {"rtol", s.rtol},
          {"atol", s.atol}, {"trace_drift_tol", s.trace_drift_tol}, {"min_step", s.min_step},
          {"max_step", s.max_step}, {"positivity_tol", s.positivity_tol}, {"stationarity_tol", s.stationarity_tol}};
  return s;
}

McwfSettings mcwf_from_json(const json& j, json& echo) {
  const std::string w = "mcwf.";
  only_keys(j, {"max_step_us", "bisection_depth", "dense_limit", "rk4_courant", "block_size"}, w);
  McwfSettings s;
  s.max_step = number_or(j, "max_step_us", s.max_step, w);
  s.bisection_depth = integer_or<int>(j, "bisection_depth", s.bisection_depth, w);
  s.dense_limit = integer_or<std::size_t>(j, "dense_limit", s.dense_limit, w);
  s.rk4_courant = number_or(j, "rk4_courant", s.rk4_courant, w);
  s.block_size = integer_or<std::size_t>(j, "block_size", s.block_size, w);
  if (!(s.max_step > 0.0)) fail(w + "max_step_us", "must be > 0");
  if (s.bisection_depth < 0 || s.bisection_depth > 30) fail(w + "bisection_depth", "must be in [0, 30]");
  if (s.block_size < 1) fail(w + "block_size", "must be >= 1");
  echo = {{"max_step_us", s.max_step}, {"bisection_depth", s.bisection_depth}, {"dense_limit", s.dense_limit},
          {"rk4_courant", s.rk4_courant}, {"block_size", s.block_size}};
  return s;
}

}  // namespace

Campaign campaign_from_json(const json& doc) {
  only_keys(doc, {"schema_version", "name", "description", "system", "reference", "linear", "sweep", "outputs",
                  "solver", "mcwf", "walks", "seed", "mcwf_window", "convergence", "workers"},
            "");
  const json& ver = require(doc, "schema_version", "");
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion) {
    fail("schema_version", "expected " + std::to_string(kSchemaVersion));
  }
  Campaign c;
  c.name = string_or(doc, "name", "", "");
  if (c.name.empty()) fail("name", "missing required field");
  for (char ch : c.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) {
      fail("name", "only letters, digits, '-' and '_' are allowed");
    }
  }
  json r;
  r["schema_version"] = kSchemaVersion;
  r["name"] = c.name;
  if (doc.contains("description")) r["description"] = string_or(doc, "description", "", "");

  c.has_system = doc.contains("system");
  const bool has_linear = doc.contains("linear");
  if (c.has_system == has_linear) fail("system", "exactly one of \"system\" and \"linear\" is required");
  if (c.has_system) r["system"] = system_to_json(system_from_json(doc.at("system")));
  if (doc.contains("reference")) {
    if (!c.has_system) fail("reference", "only valid together with \"system\"");
    c.has_reference = true;
    try {
      r["reference"] = system_to_json(system_from_json(doc.at("reference")));
    } catch (const ConfigError& e) {
      fail("reference", e.what());
    }
  }
  if (has_linear) {
    const json& l = doc.at("linear");
    const std::string w = "linear.";
    only_keys(l, {"fsr_mhz", "g0_mhz", "harmonics", "first_mode_mhz", "kappa_mhz", "gamma_mhz", "qubit_mhz",
                  "probe_mhz", "min_peak_height"},
              w);
    LinearRequest lr;
    lr.fsr = number(l, "fsr_mhz", w);
    lr.g0 = number(l, "g0_mhz", w);
    lr.first_mode = number_or(l, "first_mode_mhz", 0.0, w);
    lr.kappa = number_or(l, "kappa_mhz", lr.kappa, w);
    lr.gamma = number_or(l, "gamma_mhz", lr.gamma, w);
    lr.min_peak_height = number_or(l, "min_peak_height", lr.min_peak_height, w);
    lr.harmonics.clear();
    for (const auto& h : require(l, "harmonics", w)) {
      if (!h.is_number_integer() || h.get<int>() < 0) fail(w + "harmonics", "expected non-negative integers");
      lr.harmonics.push_back(h.get<int>());
    }
    if (lr.harmonics.empty()) fail(w + "harmonics", "at least one mode is required");
    if (!(lr.kappa > 0.0)) fail(w + "kappa_mhz", "kappa must be > 0");
    if (lr.gamma < 0.0) fail(w + "gamma_mhz", "gamma must be >= 0");
    if (lr.g0 < 0.0) fail(w + "g0_mhz", "g0 must be >= 0");
    lr.qubit_grid = grid_from_json(require(l, "qubit_mhz", w), w + "qubit_mhz");
    lr.probe_grid = grid_from_json(require(l, "probe_mhz", w), w + "probe_mhz");
    if (lr.probe_grid.size() < 3) fail(w + "probe_mhz", "need at least 3 probe points");
    c.linear = lr;
    r["linear"] = {{"fsr_mhz", lr.fsr}, {"g0_mhz", lr.g0}, {"harmonics", lr.harmonics},
                   {"first_mode_mhz", lr.first_mode}, {"kappa_mhz", lr.kappa}, {"gamma_mhz", lr.gamma},
                   {"qubit_mhz", lr.qubit_grid}, {"probe_mhz", lr.probe_grid},
                   {"min_peak_height", lr.min_peak_height}};
  }

  r["sweep"] = json::array();
  if (doc.contains("sweep")) {
    const json& sw = doc.at("sweep");
    if (!sw.is_array()) fail("sweep", "expected a list of axes");
    if (!sw.empty() && !c.has_system) fail("sweep", "sweeps need a \"system\" block");
    for (std::size_t i = 0; i < sw.size(); ++i) {
      const std::string w = "sweep[" + std::to_string(i) + "].";
      only_keys(sw[i], {"path", "values"}, w);
      SweepAxis axis;
      axis.path = string_or(sw[i], "path", "", w);
      const auto ptr = sweep_pointer(axis.path);
      if (axis.path.empty() || !r["system"].contains(ptr) || !r["system"][ptr].is_number()) {
        fail(w + "path", "'" + axis.path + "' does not name a numeric system field");
      }
      axis.values = grid_from_json(require(sw[i], "values", w), w + "values");
      if (axis.values.empty()) fail(w + "values", "empty axis");
      r["sweep"].push_back({{"path", axis.path}, {"values", axis.values}});
      c.sweep.push_back(std::move(axis));
    }
  }

  const json out = doc.contains("outputs") ? doc.at("outputs") : json::object();
  only_keys(out, {"steady", "steady_method", "spectra"}, "outputs.");
  c.steady = bool_or(out, "steady", c.has_system, "outputs.");
  c.steady_method = string_or(out, "steady_method", "direct", "outputs.");
  if (c.steady_method != "direct" && c.steady_method != "mcwf" && c.steady_method != "both") {
    fail("outputs.steady_method", "expected direct, mcwf or both");
  }
  json rout = {{"steady", c.steady}, {"steady_method", c.steady_method}};
  if (out.contains("spectra")) {
    if (!c.has_system) fail("outputs.spectra", "spectra need a \"system\" block");
    const json& sp = out.at("spectra");
    const std::string w = "outputs.spectra.";
    only_keys(sp, {"modes", "qubit", "fluctuation", "method", "dt_us", "tau_max_us", "tau_cap_us",
                   "fit_half_width_kappa", "qubit_fit_half_width_mhz", "save", "walks", "settle_time_us"},
              w);
    SpectrumRequest& s = c.spectra;
    s.enabled = true;
    if (sp.contains("modes")) {
      for (const auto& m : sp.at("modes")) {
        if (!m.is_number_integer()) fail(w + "modes", "expected mode indices");
        const int idx = m.get<int>();
        if (idx < 0 || idx >= static_cast<int>(r["system"]["modes"].size())) {
          fail(w + "modes", "index " + std::to_string(idx) + " does not name a mode");
        }
        s.modes.push_back(idx);
      }
    }
    s.qubit = bool_or(sp, "qubit", false, w);
    s.fluctuation = bool_or(sp, "fluctuation", true, w);
    s.method = string_or(sp, "method", "regression", w);
    if (s.method != "regression" && s.method != "mcwf") fail(w + "method", "expected regression or mcwf");
    s.dt = number_or(sp, "dt_us", s.dt, w);
    s.tau_max = number_or(sp, "tau_max_us", s.tau_max, w);
    s.tau_cap = number_or(sp, "tau_cap_us", s.tau_cap, w);
    s.fit_half_width_kappa = number_or(sp, "fit_half_width_kappa", s.fit_half_width_kappa, w);
    s.qubit_fit_half_width = number_or(sp, "qubit_fit_half_width_mhz", s.qubit_fit_half_width, w);
    s.save = bool_or(sp, "save", true, w);
    s.walks = integer_or<std::size_t>(sp, "walks", s.walks, w);
    s.settle_time = number_or(sp, "settle_time_us", s.settle_time, w);
    if (!(s.dt > 0.0) || !(s.tau_max > 0.0) || s.tau_cap < s.tau_max) fail(w + "dt_us", "need dt > 0 and 0 < tau_max <= tau_cap");
    if (s.modes.empty() && !s.qubit) fail(w + "modes", "request at least one mode or the qubit");
    rout["spectra"] = {{"modes", s.modes}, {"qubit", s.qubit}, {"fluctuation", s.fluctuation}, {"method", s.method},
                       {"dt_us", s.dt}, {"tau_max_us", s.tau_max}, {"tau_cap_us", s.tau_cap},
                       {"fit_half_width_kappa", s.fit_half_width_kappa},
                       {"qubit_fit_half_width_mhz", s.qubit_fit_half_width}, {"save", s.save}, {"walks", s.walks},
                       {"settle_time_us", s.settle_time}};
  }
  r["outputs"] = rout;

  json echo;
  c.solver = solver_from_json(doc.contains("solver") ? doc.at("solver") : json::object(), echo);
  r["solver"] = echo;
  c.mcwf = mcwf_from_json(doc.contains("mcwf") ? doc.at("mcwf") : json::object(), echo);
  r["mcwf"] = echo;
  c.walks = integer_or<std::size_t>(doc, "walks", c.walks, "");
  if (c.walks < 1) fail("walks", "must be >= 1");
  c.seed = integer_or<std::uint64_t>(doc, "seed", c.seed, "");
  r["walks"] = c.walks;
  r["seed"] = c.seed;
  const json win = doc.contains("mcwf_window") ? doc.at("mcwf_window") : json::object();
  only_keys(win, {"t_end_us", "burn_in_us", "dt_us"}, "mcwf_window.");
  c.mcwf_t_end = number_or(win, "t_end_us", c.mcwf_t_end, "mcwf_window.");
  c.mcwf_burn_in = number_or(win, "burn_in_us", c.mcwf_burn_in, "mcwf_window.");
  c.mcwf_dt = number_or(win, "dt_us", c.mcwf_dt, "mcwf_window.");
  if (!(c.mcwf_dt > 0.0) || !(c.mcwf_burn_in < c.mcwf_t_end) || c.mcwf_burn_in < 0.0) {
    fail("mcwf_window", "need dt > 0 and 0 <= burn_in < t_end");
  }
  r["mcwf_window"] = {{"t_end_us", c.mcwf_t_end}, {"burn_in_us", c.mcwf_burn_in}, {"dt_us", c.mcwf_dt}};
  const json conv = doc.contains("convergence") ? doc.at("convergence") : json::object();
  only_keys(conv, {"check", "rtol", "waived", "reason"}, "convergence.");
  c.convergence.waived = bool_or(conv, "waived", false, "convergence.");
  // unless waived, every steady point is rerun at cutoffs + 2
  c.convergence.check = bool_or(conv, "check", !c.convergence.waived, "convergence.");
  c.convergence.rtol = number_or(conv, "rtol", 1e-3, "convergence.");
  c.convergence.reason = string_or(conv, "reason", "", "convergence.");
  r["convergence"] = {{"check", c.convergence.check}, {"rtol", c.convergence.rtol},
                      {"waived", c.convergence.waived}, {"reason", c.convergence.reason}};
  c.workers = integer_or<unsigned>(doc, "workers", 0u, "");
  // worker count does not change results, so it is kept out of the hashed config
  c.config = std::move(r);
  return c;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON syntax error");
  }
}

bool ValidationReport::ok() const {
  for (const auto& i : issues) {
    if (!i.warning) return false;
  }
  return true;
}

std::string ValidationReport::text() const {
  std::ostringstream out;
  for (const auto& i : issues) out << (i.warning ? "warning: " : "error: ") << i.field << ": " << i.message << "\n";
  if (ok()) out << "OK\n";
  return out.str();
}

ValidationReport validate_config(const json& doc) {
  ValidationReport rep;
  Campaign c;
  try {
    c = campaign_from_json(doc);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    rep.issues.push_back({colon == std::string::npos ? "document" : msg.substr(0, colon),
                          colon == std::string::npos ? msg : msg.substr(colon + 2), false});
    return rep;
  }
  auto heuristics = [&](const json& sys, const std::string& where) {
    const SystemConfig s = system_from_json(sys);
    if (s.qubit_decay == 0.0) {
      rep.issues.push_back({where + ".qubit.gamma_mhz", "gamma = 0: the steady state may not be unique", true});
    }
    if (const auto* d = std::get_if<CavityDrive>(&s.drive)) {
      const double xi = 2.0 * d->amplitude / s.modes[static_cast<std::size_t>(d->mode)].decay;
      const int n = s.cutoffs[static_cast<std::size_t>(d->mode)];
      if (xi * xi > n / 4.0) {
        std::ostringstream msg;
        msg << "displacement xi = 2 eta / kappa = " << xi << " violates xi^2 < N/4 for cutoff " << n
            << "; the displaced-frame treatment is not valid at this truncation";
        rep.issues.push_back({where + ".drive.eta_mhz", msg.str(), true});
      }
    }
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
      // photon flux out of a mode cannot exceed the qubit's scattering rate ~ gamma / 2
      double expect = s.qubit_decay / (2.0 * s.modes[m].decay);
      if (const auto* d = std::get_if<CavityDrive>(&s.drive); d && static_cast<std::size_t>(d->mode) == m) {
        const double xi = 2.0 * d->amplitude / s.modes[m].decay;
        expect = std::max(expect, xi * xi);
      }
      if (s.modes[m].coupling > 0.0 && expect > 0.5 * s.cutoffs[m]) {
        std::ostringstream msg;
        msg << "photon number may reach ~" << expect << " against cutoff " << s.cutoffs[m]
            << "; run a convergence check at cutoff + 2";
        rep.issues.push_back({where + ".cutoffs[" + std::to_string(m) + "]", msg.str(), true});
      }
    }
  };
  if (c.has_system) heuristics(c.config["system"], "system");
  if (c.has_reference) heuristics(c.config["reference"], "reference");
  if (c.convergence.waived && c.convergence.reason.empty()) {
    rep.issues.push_back({"convergence.reason", "waiver without a stated reason", true});
  }
  return rep;
}

ValidationReport validate_config_file(const std::filesystem::path& path) {
  try {
    return validate_config(load_json(path));
  } catch (const ConfigError& e) {
    ValidationReport rep;
    rep.issues.push_back({"file", e.what(), false});
    return rep;
  }
}

json apply_options(json doc, const RunOptions& o) {
  if (o.fast) {
    doc["walks"] = 200;
    json& s = doc["solver"];
    if (!s.is_object()) s = json::object();
    s["rtol"] = 1e-7;
    s["atol"] = 1e-10;
    s["trace_drift_tol"] = 1e-6;
    if (doc.contains("outputs") && doc["outputs"].contains("spectra")) {
      json& sp = doc["outputs"]["spectra"];
      sp["walks"] = std::min<std::size_t>(sp.value("walks", std::size_t{4000}), 800);
    }
  }
  if (o.walks) doc["walks"] = *o.walks;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.check_convergence || o.waive_convergence) {
    json& conv = doc["convergence"];
    if (!conv.is_object()) conv = json::object();
    if (o.check_convergence) conv["check"] = true;
    if (o.waive_convergence) {
      conv["waived"] = true;
      if (!conv.contains("reason")) conv["reason"] = "waived on the command line";
    }
  }
  return doc;
}

}  // namespace mmcqed
