#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"
#include "mmcqed/linear.hpp"
#include "mmcqed/parallel.hpp"

namespace mmcqed {

using nlohmann::json;

std::size_t Table::index(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column) return i;
  }
  throw AnalysisError("table " + name + ": no column '" + column + "'");
}

std::vector<double> Table::numbers(const std::string& column, const std::string& filter_column,
                                   const std::string& filter_value) const {
  const std::size_t c = index(column);
  const std::size_t f = filter_column.empty() ? 0 : index(filter_column);
  std::vector<double> out;
  for (const auto& row : rows) {
    if (!filter_column.empty()) {
      const auto* s = std::get_if<std::string>(&row[f]);
      if (!s || *s != filter_value) continue;
    }
    const auto* v = std::get_if<double>(&row[c]);
    out.push_back(v ? *v : std::nan(""));
  }
  return out;
}

namespace {

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *d);
    return buf;
  }
  const std::string& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string Table::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << "\n";
  }
  return out.str();
}

const Table& ResultStore::table(const std::string& name) const {
  const auto it = tables.find(name);
  if (it == tables.end()) throw AnalysisError("result store: no table '" + name + "'");
  return it->second;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

json::json_pointer pointer(const std::string& path) {
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

struct Task {
  std::string system;  // "main" or "reference"
  std::size_t point = 0;
  std::vector<double> values;
};

struct FailureRow {
  std::string system;
  std::size_t point;
  std::string stage;
  std::string message;
};

struct TaskResult {
  std::vector<std::vector<Cell>> steady;
  std::vector<std::vector<Cell>> spectra;
  std::vector<std::vector<Cell>> peaks;
  std::vector<Table> spectrum_tables;
  std::vector<FailureRow> failures;
  bool failed = false;
};

struct SteadyValues {
  std::vector<double> n, n_err;
  double sz = kNaN, sz_err = kNaN, sp = kNaN, sp_err = kNaN;
};

SteadyValues steady_direct(const SystemConfig& cfg, const SolverSettings& solver) {
  const Liouvillian l = build_liouvillian(cfg, solver);
  const DensityMatrix rho = steady_state(l, solver);
  const HilbertSpace sp = cfg.space();
  SteadyValues v;
  for (int m = 0; m < sp.mode_count(); ++m) {
    v.n.push_back(expectation(rho, number(sp, m)).real());
    v.n_err.push_back(0.0);
  }
  v.sz = expectation(rho, qubit_op(sp, QubitOp::SigmaZ)).real();
  v.sp = std::abs(expectation(rho, qubit_op(sp, QubitOp::SigmaPlus)));
  v.sz_err = v.sp_err = 0.0;
  return v;
}

SteadyValues steady_mcwf(const SystemConfig& cfg, const Campaign& c, std::uint64_t seed, unsigned workers) {
  const HilbertSpace sp = cfg.space();
  std::vector<Operator> obs;
  for (int m = 0; m < sp.mode_count(); ++m) obs.push_back(number(sp, m));
  obs.push_back(qubit_op(sp, QubitOp::SigmaZ));
  obs.push_back(qubit_op(sp, QubitOp::SigmaPlus));
  McwfSettings ms = c.mcwf;
  ms.workers = workers;
  const auto e = mcwf_ensemble(cfg, uniform_grid(c.mcwf_t_end, c.mcwf_dt), obs, c.walks, seed, ms, c.mcwf_burn_in);
  SteadyValues v;
  const auto modes = static_cast<std::size_t>(sp.mode_count());
  for (std::size_t m = 0; m < modes; ++m) {
    v.n.push_back(e.time_average[m].real());
    v.n_err.push_back(e.time_average_error[m]);
  }
  v.sz = e.time_average[modes].real();
  v.sz_err = e.time_average_error[modes];
  v.sp = std::abs(e.time_average[modes + 1]);
  v.sp_err = e.time_average_error[modes + 1];
  return v;
}

void require_rotating(const SystemConfig& cfg) {
  if (cfg.frame != Frame::RotatingCavityDrive && cfg.frame != Frame::RotatingQubitDrive) {
    throw ConfigError("campaign observables are defined in the rotating frames only");
  }
}

std::string source_name(int mode) { return mode < 0 ? "qubit" : "mode" + std::to_string(mode); }

class Runner {
 public:
  Runner(const Campaign& c) : c_(c), hash_(c.hash()) {
    for (std::size_t m = 0; m < c.config["system"]["modes"].size(); ++m) max_modes_ = m + 1;
    if (c.has_reference) max_modes_ = std::max(max_modes_, c.config["reference"]["modes"].size());
  }

  std::vector<Task> tasks() const {
    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : c_.sweep) {
      std::vector<std::vector<double>> next;
      for (const auto& p : points) {
        for (double v : axis.values) {
          auto q = p;
          q.push_back(v);
          next.push_back(std::move(q));
        }
      }
      points = std::move(next);
    }
    std::vector<Task> out;
    for (const char* sys : {"main", "reference"}) {
      if (std::string(sys) == "reference" && !c_.has_reference) continue;
      for (std::size_t i = 0; i < points.size(); ++i) out.push_back({sys, i, points[i]});
    }
    return out;
  }

  std::vector<std::string> key_columns() const {
    std::vector<std::string> cols{"config_hash", "code_version", "system", "point"};
    for (const auto& a : c_.sweep) cols.push_back(a.path);
    return cols;
  }

  std::vector<std::string> steady_columns() const {
    auto cols = key_columns();
    cols.push_back("method");
    for (std::size_t m = 0; m < max_modes_; ++m) {
      cols.push_back("n_" + std::to_string(m));
      cols.push_back("n_" + std::to_string(m) + "_err");
    }
    for (const char* s : {"sigma_z", "sigma_z_err", "sigma_plus_abs", "sigma_plus_abs_err", "converged",
                          "convergence_delta", "status"}) {
      cols.push_back(s);
    }
    return cols;
  }

  static std::vector<std::string> spectra_extra() {
    return {"source", "method", "tau_window_us", "g0", "psd_integral", "imaginary_residual", "expected_center_mhz",
            "center_mhz", "center_err_mhz", "fwhm_mhz", "fwhm_err_mhz", "amplitude", "baseline", "fit_residual",
            "n_walks", "status"};
  }

  TaskResult run(const Task& t, unsigned inner_workers) const {
    TaskResult r;
    std::vector<Cell> key{hash_, code_version(), t.system, static_cast<double>(t.point)};
    for (double v : t.values) key.emplace_back(v);
    SystemConfig cfg;
    try {
      json sys = c_.config[t.system == "main" ? "system" : "reference"];
      for (std::size_t a = 0; a < c_.sweep.size(); ++a) {
        const auto ptr = pointer(c_.sweep[a].path);
        if (sys.contains(ptr)) sys[ptr] = t.values[a];
      }
      cfg = system_from_json(sys);
      require_rotating(cfg);
    } catch (const std::exception& e) {
      r.failures.push_back({t.system, t.point, "config", e.what()});
      r.failed = true;
      return r;
    }
    const std::uint64_t point_seed =
        splitmix64(c_.seed ^ splitmix64((t.system == "main" ? 0u : 1u) + 2 * static_cast<std::uint64_t>(t.point)));

    if (c_.steady) {
      std::vector<std::string> methods;
      if (c_.steady_method != "mcwf") methods.push_back("direct");
      if (c_.steady_method != "direct") methods.push_back("mcwf");
      for (const auto& method : methods) {
        std::vector<Cell> row = key;
        row.emplace_back(method);
        try {
          const SteadyValues v = method == "direct" ? steady_direct(cfg, c_.solver)
                                                    : steady_mcwf(cfg, c_, point_seed, inner_workers);
          double converged = kNaN, delta = kNaN;
          std::string status = "ok";
          if (c_.convergence.check && method == "direct") {
            SystemConfig bigger = cfg;
            for (int& n : bigger.cutoffs) n += 2;
            const SteadyValues w = steady_direct(bigger, c_.solver);
            delta = std::abs(w.sz - v.sz) / std::max(1.0, std::abs(w.sz));
            for (std::size_t m = 0; m < v.n.size(); ++m) {
              delta = std::max(delta, std::abs(w.n[m] - v.n[m]) / std::max(1.0, std::abs(w.n[m])));
            }
            converged = delta <= c_.convergence.rtol ? 1.0 : 0.0;
            if (converged == 0.0 && !c_.convergence.waived) {
              status = "nonconverged";
              r.failed = true;
              r.failures.push_back({t.system, t.point, "convergence",
                                    "cutoffs + 2 changes observables by " + std::to_string(delta)});
            }
          }
          for (std::size_t m = 0; m < max_modes_; ++m) {
            row.emplace_back(m < v.n.size() ? v.n[m] : kNaN);
            row.emplace_back(m < v.n.size() ? v.n_err[m] : kNaN);
          }
          for (double x : {v.sz, v.sz_err, v.sp, v.sp_err, converged, delta}) row.emplace_back(x);
          row.emplace_back(status);
        } catch (const std::exception& e) {
          row.resize(key.size() + 1);
          for (std::size_t m = 0; m < 2 * max_modes_ + 6; ++m) row.emplace_back(kNaN);
          row.emplace_back(std::string("failed"));
          r.failures.push_back({t.system, t.point, "steady/" + method, e.what()});
          r.failed = true;
        }
        r.steady.push_back(std::move(row));
      }
    }

    if (c_.spectra.enabled) run_spectra(t, cfg, key, point_seed, inner_workers, r);
    return r;
  }

 private:
  void run_spectra(const Task& t, const SystemConfig& cfg, const std::vector<Cell>& key, std::uint64_t seed,
                   unsigned inner_workers, TaskResult& r) const {
    const SpectrumRequest& req = c_.spectra;
    const HilbertSpace sp = cfg.space();
    std::vector<int> sources;
    for (int m : req.modes) {
      if (m < sp.mode_count()) sources.push_back(m);
    }
    if (req.qubit) sources.push_back(-1);
    if (sources.empty()) return;

    std::optional<Liouvillian> l;
    std::optional<DensityMatrix> rho;
    try {
      l.emplace(build_liouvillian(cfg, c_.solver));
      rho.emplace(steady_state(*l, c_.solver));
    } catch (const std::exception& e) {
      r.failures.push_back({t.system, t.point, "spectra/steady", e.what()});
      r.failed = true;
      return;
    }
    for (std::size_t si = 0; si < sources.size(); ++si) {
      const int src = sources[si];
      const std::string name = source_name(src);
      const Operator a0 = src < 0 ? qubit_op(sp, QubitOp::SigmaMinus) : annihilator(sp, src);
      const Operator a = req.fluctuation ? fluctuation_operator(*rho, a0) : a0;
      std::vector<Cell> row = key;
      row.emplace_back(name);
      row.emplace_back(req.method);
      try {
        double window = req.tau_max;
        std::optional<Spectrum> spec;
        CorrelationSeries corr;
        for (;;) {
          const auto grid = uniform_grid(window, req.dt);
          if (req.method == "regression") {
            corr = correlation_regression(*l, *rho, a, grid, c_.solver);
          } else {
            McwfSettings ms = c_.mcwf;
            ms.workers = inner_workers;
            corr = correlation_mcwf(cfg, a, grid, req.walks, splitmix64(seed + 17 * (si + 1)), req.settle_time, ms);
          }
          try {
            spec = emission_spectrum(corr);
            break;
          } catch (const AnalysisError&) {
            if (req.method == "mcwf" || window * 2.0 > req.tau_cap) throw;
            window *= 2.0;
          }
        }
        std::vector<std::pair<double, double>> fits;  // expected center, half width
        if (src >= 0) {
          const ModeSpec& m = cfg.modes[static_cast<std::size_t>(src)];
          fits.emplace_back(units::to_mhz(m.detuning), req.fit_half_width_kappa * units::to_mhz(m.decay));
        } else {
          fits.emplace_back(0.0, req.qubit_fit_half_width);
          if (const auto* q = std::get_if<QubitDrive>(&cfg.drive); q && q->rabi > 0.0) {
            const double om = units::to_mhz(q->rabi);
            fits.emplace_back(-om, req.qubit_fit_half_width);
            fits.emplace_back(om, req.qubit_fit_half_width);
          }
        }
        for (const auto& [center, half] : fits) {
          std::vector<Cell> fr = row;
          for (double x : {window, spec->g0, spec->integral, spec->imaginary_residual, center}) fr.emplace_back(x);
          try {
            const LorentzianFit f = fit_linewidth(*spec, center, half);
            for (double x : {f.center, f.center_error, f.fwhm, f.fwhm_error, f.amplitude, f.baseline, f.residual_norm}) {
              fr.emplace_back(x);
            }
            fr.emplace_back(req.method == "mcwf" ? static_cast<double>(req.walks) : kNaN);
            fr.emplace_back(std::string("ok"));
          } catch (const AnalysisError& e) {
            for (int k = 0; k < 8; ++k) fr.emplace_back(kNaN);
            fr.emplace_back(std::string("failed"));
            r.failures.push_back({t.system, t.point, "fit/" + name, e.what()});
            r.failed = true;
          }
          r.spectra.push_back(std::move(fr));
        }
        for (double p : spectral_peaks(*spec, 0.05)) {
          std::vector<Cell> pr = key;
          pr.emplace_back(name);
          pr.emplace_back(p);
          r.peaks.push_back(std::move(pr));
        }
        if (req.save) {
          Table st;
          st.name = "spectra/" + t.system + "_p" + std::to_string(t.point) + "_" + name;
          st.columns = {"freq_mhz", "psd"};
          for (std::size_t k = 0; k < spec->frequency.size(); ++k) {
            st.rows.push_back({spec->frequency[k], spec->psd[k]});
          }
          r.spectrum_tables.push_back(std::move(st));
        }
      } catch (const std::exception& e) {
        for (int k = 0; k < 14; ++k) row.emplace_back(kNaN);
        row.emplace_back(std::string("failed"));
        r.spectra.push_back(std::move(row));
        r.failures.push_back({t.system, t.point, "spectrum/" + name, e.what()});
        r.failed = true;
      }
    }
  }

  const Campaign& c_;
  std::string hash_;
  std::size_t max_modes_ = 0;
};

void run_linear(const Campaign& c, ResultStore& store) {
  const LinearRequest& lr = *c.linear;
  const std::string hash = c.hash();
  std::vector<LinearMode> modes;
  std::vector<double> freqs, couplings;
  for (std::size_t i = 0; i < lr.harmonics.size(); ++i) {
    LinearMode m;
    m.frequency = lr.first_mode + lr.fsr * static_cast<double>(i);
    m.decay = lr.kappa;
    m.coupling = coupling_strength(lr.g0, lr.harmonics[i]);
    modes.push_back(m);
    freqs.push_back(m.frequency);
    couplings.push_back(m.coupling);
  }
  const TransmissionMap map = transmission_map(modes, lr.qubit_grid, lr.gamma, lr.probe_grid);

  Table tm;
  tm.name = "transmission";
  tm.columns = {"qubit_mhz"};
  for (double p : lr.probe_grid) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", p);
    tm.columns.push_back(buf);
  }
  for (std::size_t q = 0; q < map.qubit_freqs.size(); ++q) {
    std::vector<Cell> row{map.qubit_freqs[q]};
    for (const Complex& t : map.t[q]) row.emplace_back(std::abs(t));
    tm.rows.push_back(std::move(row));
  }
  store.tables[tm.name] = std::move(tm);

  const PeakData peaks = extract_peaks(map, lr.min_peak_height);
  Table pk;
  pk.name = "peaks";
  pk.columns = {"config_hash", "code_version", "qubit_mhz", "peak_mhz"};
  for (std::size_t q = 0; q < peaks.qubit_freqs.size(); ++q) {
    for (double p : peaks.peaks[q]) pk.rows.push_back({hash, code_version(), peaks.qubit_freqs[q], p});
  }
  store.tables[pk.name] = std::move(pk);

  Table mf;
  mf.name = "manifold";
  mf.columns = {"qubit_mhz"};
  for (std::size_t k = 0; k <= modes.size(); ++k) mf.columns.push_back("e_" + std::to_string(k));
  for (double wq : lr.qubit_grid) {
    std::vector<Cell> row{wq};
    for (double e : first_manifold(couplings, freqs, wq).eigenvalues) row.emplace_back(e);
    mf.rows.push_back(std::move(row));
  }
  store.tables[mf.name] = std::move(mf);

  Table sp;
  sp.name = "splittings";
  sp.columns = {"config_hash", "code_version", "harmonic", "mode_mhz", "qubit_mhz", "splitting_mhz",
                "expected_mhz", "relative_error", "status"};
  double first_guess = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t q = 0; q < peaks.qubit_freqs.size(); ++q) {
      if (std::abs(peaks.qubit_freqs[q] - freqs[i]) < std::abs(peaks.qubit_freqs[best] - freqs[i])) best = q;
    }
    double below = -INFINITY, above = INFINITY;
    for (double p : peaks.peaks[best]) {
      if (p <= freqs[i]) below = std::max(below, p);
      if (p > freqs[i]) above = std::min(above, p);
    }
    const double expected = 2.0 * couplings[i];
    std::vector<Cell> row{hash, code_version(), static_cast<double>(lr.harmonics[i]), freqs[i], peaks.qubit_freqs[best]};
    if (std::isfinite(below) && std::isfinite(above)) {
      const double split = above - below;
      if (first_guess == 0.0) first_guess = 0.5 * split / std::sqrt(lr.harmonics[i] + 1.0);
      for (double x : {split, expected, (split - expected) / expected}) row.emplace_back(x);
      row.emplace_back(std::string("ok"));
    } else {
      for (double x : {kNaN, expected, kNaN}) row.emplace_back(x);
      row.emplace_back(std::string("failed"));
      ++store.failed_points;
    }
    sp.rows.push_back(std::move(row));
  }
  store.tables[sp.name] = std::move(sp);

  Table gf;
  gf.name = "g0_fit";
  gf.columns = {"config_hash", "code_version", "g0_mhz", "g0_err_mhz", "residual_norm", "points", "initial_guess_mhz",
                "status"};
  try {
    const G0Fit fit = fit_g0(peaks, freqs, lr.harmonics, first_guess > 0.0 ? first_guess : 1.0);
    gf.rows.push_back({hash, code_version(), fit.g0, fit.g0_error, fit.residual_norm, static_cast<double>(fit.points),
                       first_guess, std::string("ok")});
  } catch (const std::exception& e) {
    gf.rows.push_back({hash, code_version(), kNaN, kNaN, kNaN, kNaN, first_guess, std::string("failed")});
    ++store.failed_points;
    store.metadata["errors"].push_back(e.what());
  }
  store.tables[gf.name] = std::move(gf);
}

}  // namespace

ResultStore run_campaign(const Campaign& c) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultStore store;
  store.campaign = c.name;
  store.config_hash = c.hash();
  store.config = c.config;
  store.metadata = {{"campaign", c.name},        {"config_hash", store.config_hash}, {"code_version", code_version()},
                    {"schema_version", kSchemaVersion}, {"seed", c.seed},                {"walks", c.walks},
                    {"convergence", c.config["convergence"]}, {"errors", json::array()}};

  if (c.linear) {
    run_linear(c, store);
  } else {
    const Runner runner(c);
    const auto tasks = runner.tasks();
    std::vector<TaskResult> results(tasks.size());
    const unsigned workers = c.workers ? c.workers : default_workers();
    const unsigned inner = tasks.size() > 1 && workers > 1 ? 1u : workers;
    parallel_for(tasks.size(), tasks.size() > 1 ? workers : 1u,
                 [&](std::size_t i) { results[i] = runner.run(tasks[i], inner); });

    Table steady{"steady", runner.steady_columns(), {}};
    Table spectra{"spectra", runner.key_columns(), {}};
    for (const auto& col : Runner::spectra_extra()) spectra.columns.push_back(col);
    Table peaks{"spectral_peaks", runner.key_columns(), {}};
    peaks.columns.push_back("source");
    peaks.columns.push_back("peak_mhz");
    Table failures{"failures", {"config_hash", "system", "point", "stage", "message"}, {}};
    for (const auto& r : results) {
      for (const auto& row : r.steady) steady.rows.push_back(row);
      for (const auto& row : r.spectra) spectra.rows.push_back(row);
      for (const auto& row : r.peaks) peaks.rows.push_back(row);
      for (const auto& t : r.spectrum_tables) store.tables[t.name] = t;
      for (const auto& f : r.failures) {
        failures.rows.push_back({store.config_hash, f.system, static_cast<double>(f.point), f.stage, f.message});
      }
      if (r.failed) ++store.failed_points;
    }
    if (c.steady) store.tables["steady"] = std::move(steady);
    if (c.spectra.enabled) {
      store.tables["spectra"] = std::move(spectra);
      store.tables["spectral_peaks"] = std::move(peaks);
    }
    store.tables["failures"] = std::move(failures);
    store.metadata["points"] = tasks.size();
  }
  store.metadata["failed_points"] = store.failed_points;
  store.metadata["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json names = json::array();
  for (const auto& [name, t] : store.tables) names.push_back(name);
  store.metadata["tables"] = names;
  return store;
}

}  // namespace mmcqed
