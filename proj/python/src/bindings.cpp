#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"
#include "mmcqed/linear.hpp"

namespace py = pybind11;
using namespace mmcqed;
using nlohmann::json;

namespace {

// Configs cross the boundary as JSON text; the Python side does json.dumps/loads.
json parse(const std::string& text) { return json::parse(text); }

Operator observable(const HilbertSpace& space, const std::string& name) {
  if (name.rfind("n_", 0) == 0) return number(space, std::stoi(name.substr(2)));
  if (name.rfind("a_", 0) == 0) return annihilator(space, std::stoi(name.substr(2)));
  return qubit_op(space, parse_qubit_op(name));
}

py::dict table_dict(const Table& t) {
  py::dict columns;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    py::list values;
    for (const auto& row : t.rows) {
      std::visit([&](const auto& v) { values.append(v); }, row[c]);
    }
    columns[py::str(t.columns[c])] = values;
  }
  return columns;
}

py::dict store_dict(const ResultStore& s) {
  py::dict tables;
  for (const auto& [name, t] : s.tables) tables[py::str(name)] = table_dict(t);
  py::dict out;
  out["campaign"] = s.campaign;
  out["config_hash"] = s.config_hash;
  out["config"] = s.config.dump();
  out["metadata"] = s.metadata.dump();
  out["failed_points"] = s.failed_points;
  out["tables"] = tables;
  return out;
}

}  // namespace

PYBIND11_MODULE(_mmcqed, m) {
  m.doc() = "Driven multimode Jaynes-Cummings simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SpaceMismatch>(m, "SpaceMismatch", PyExc_ValueError);
  auto solver = py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<NonUniqueSteadyState>(m, "NonUniqueSteadyState", solver.ptr());
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_RuntimeError);

  m.def("code_version", &code_version);
  m.def("preset_names", &preset_names);
  m.def("preset", [](const std::string& name) { return preset(name).dump(); });
  m.def("config_hash", [](const std::string& doc) { return campaign_from_json(parse(doc)).hash(); });
  m.def("validate", [](const std::string& doc) {
    std::vector<std::tuple<std::string, std::string, bool>> out;
    for (const auto& i : validate_config(parse(doc)).issues) out.emplace_back(i.field, i.message, i.warning);
    return out;
  });
  m.def("coupling_strength", &coupling_strength, py::arg("g0"), py::arg("harmonic"));
  m.def("manifold_dimension", &manifold_dimension, py::arg("modes"), py::arg("excitations"));
  m.def("spearman", &spearman);

  m.def(
      "steady_state",
      [](const std::string& system, const std::vector<std::string>& observables) {
        const SystemConfig c = system_from_json(parse(system));
        DensityMatrix rho;
        {
          py::gil_scoped_release release;
          rho = steady_state(build_liouvillian(c));
        }
        std::vector<Complex> values;
        for (const auto& name : observables) values.push_back(expectation(rho, observable(c.space(), name)));
        return py::make_tuple(rho.matrix(), values);
      },
      py::arg("system"), py::arg("observables"));

  m.def(
      "mcwf_steady",
      [](const std::string& system, const std::vector<std::string>& observables, std::size_t walks,
         std::uint64_t seed, double t_end, double dt, double burn_in) {
        const SystemConfig c = system_from_json(parse(system));
        std::vector<Operator> ops;
        for (const auto& name : observables) ops.push_back(observable(c.space(), name));
        py::gil_scoped_release release;
        const auto e = mcwf_ensemble(c, uniform_grid(t_end, dt), ops, walks, seed, {}, burn_in);
        return std::make_pair(e.time_average, e.time_average_error);
      },
      py::arg("system"), py::arg("observables"), py::arg("walks"), py::arg("seed"), py::arg("t_end"),
      py::arg("dt"), py::arg("burn_in"));

  m.def(
      "emission_spectrum",
      [](const std::string& system, const std::string& source, double tau_max, double dt) {
        const SystemConfig c = system_from_json(parse(system));
        py::gil_scoped_release release;
        const Liouvillian l = build_liouvillian(c);
        const DensityMatrix rho = steady_state(l);
        const Operator a = fluctuation_operator(rho, observable(c.space(), source));
        const Spectrum s = emission_spectrum(correlation_regression(l, rho, a, uniform_grid(tau_max, dt)));
        return std::make_pair(s.frequency, s.psd);
      },
      py::arg("system"), py::arg("source"), py::arg("tau_max"), py::arg("dt"));

  m.def(
      "fit_linewidth",
      [](const std::vector<double>& frequency, const std::vector<double>& psd, double center, double half_width) {
        Spectrum s;
        s.frequency = frequency;
        s.psd = psd;
        const LorentzianFit f = fit_linewidth(s, center, half_width);
        py::dict out;
        out["center"] = f.center;
        out["center_error"] = f.center_error;
        out["fwhm"] = f.fwhm;
        out["fwhm_error"] = f.fwhm_error;
        out["amplitude"] = f.amplitude;
        out["baseline"] = f.baseline;
        return out;
      },
      py::arg("frequency"), py::arg("psd"), py::arg("center"), py::arg("half_width"));

  m.def(
      "first_manifold",
      [](const std::vector<double>& couplings, const std::vector<double>& mode_freqs, double qubit) {
        const ManifoldEigen e = first_manifold(couplings, mode_freqs, qubit);
        return std::make_pair(e.eigenvalues, e.weights);
      },
      py::arg("couplings"), py::arg("mode_freqs"), py::arg("qubit_freq"));

  m.def(
      "transmission",
      [](const std::vector<std::tuple<double, double, double>>& modes, const std::vector<double>& qubit_freqs,
         double qubit_decay, const std::vector<double>& probe) {
        std::vector<LinearMode> lm;
        for (const auto& [f, k, g] : modes) lm.push_back({f, k, g});
        py::gil_scoped_release release;
        return transmission_map(lm, qubit_freqs, qubit_decay, probe).t;
      },
      py::arg("modes"), py::arg("qubit_freqs"), py::arg("qubit_decay"), py::arg("probe"));

  m.def(
      "fit_g0",
      [](const std::vector<double>& qubit_freqs, const std::vector<std::vector<double>>& peaks,
         const std::vector<double>& mode_freqs, const std::vector<int>& harmonics, double guess) {
        const G0Fit f = fit_g0({qubit_freqs, peaks}, mode_freqs, harmonics, guess);
        return py::make_tuple(f.g0, f.g0_error, f.points);
      },
      py::arg("qubit_freqs"), py::arg("peaks"), py::arg("mode_freqs"), py::arg("harmonics"), py::arg("guess"));

  m.def(
      "run_campaign",
      [](const std::string& doc) {
        const Campaign c = campaign_from_json(parse(doc));
        ResultStore s;
        {
          py::gil_scoped_release release;
          s = run_campaign(c);
        }
        return store_dict(s);
      },
      py::arg("doc"));

  m.def(
      "run_and_store",
      [](const std::string& doc, const std::filesystem::path& out_dir, const std::string& policy) {
        const Campaign c = campaign_from_json(parse(doc));
        const auto p = policy == "overwrite" ? OverwritePolicy::Overwrite
                       : policy == "reuse"   ? OverwritePolicy::Reuse
                                             : OverwritePolicy::Refuse;
        if (p == OverwritePolicy::Reuse && store_exists(c.name, c.hash(), out_dir)) {
          return out_dir / (c.name + "-" + c.hash());
        }
        py::gil_scoped_release release;
        return write_store(run_campaign(c), out_dir, p);
      },
      py::arg("doc"), py::arg("out_dir"), py::arg("policy") = "refuse");

  m.def("emit_plotdata", &emit_plotdata, py::arg("run_dir"), py::arg("which") = "all");
}
