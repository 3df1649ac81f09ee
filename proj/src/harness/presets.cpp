#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

namespace mmcqed {

using nlohmann::json;

namespace {

json mode(double detuning, double kappa, double g) {
  return {{"detuning_mhz", detuning}, {"kappa_mhz", kappa}, {"g_mhz", g}};
}

json qubit_driven(json modes, double gamma, double rabi, std::vector<int> cutoffs) {
  return {{"modes", std::move(modes)},
          {"qubit", {{"detuning_mhz", 0.0}, {"gamma_mhz", gamma}}},
          {"drive", {{"type", "qubit"}, {"rabi_mhz", rabi}}},
          {"cutoffs", std::move(cutoffs)}};
}

json rabi_axis(double start, double stop, double step) {
  return json::array({{{"path", "drive.rabi_mhz"}, {"values", {{"start", start}, {"stop", stop}, {"step", step}}}}});
}

const char* kTruncationWaiver =
    "two-mode photon distributions are broad (near thermal marginals); cutoffs + 2 changes N by "
    "more than 1e-3 at every tractable cutoff, see README";

json symmetric_pair(double gamma, double rabi) {
  return qubit_driven({mode(100.0, 1.0, 15.0), mode(-100.0, 1.0, 15.0)}, gamma, rabi, {6, 6});
}

json single_mode(double gamma, double rabi) { return qubit_driven({mode(100.0, 1.0, 15.0)}, gamma, rabi, {12}); }

json spectra_block(std::vector<int> modes) {
  return {{"modes", std::move(modes)}, {"dt_us", 2e-3}, {"tau_max_us", 1.0}, {"tau_cap_us", 32.0}};
}

json base(const std::string& name, const std::string& description) {
  return {{"schema_version", kSchemaVersion}, {"name", name}, {"description", description}, {"seed", 1},
          {"walks", 1000}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"figS4", "figS5", "figS6", "figS7", "fig2-map", "mollow"};
}

json preset(const std::string& name) {
  if (name == "figS4") {
    json d = base(name, "Steady-state photon number, inversion and polarization of the symmetric two-mode "
                        "system over 24 Rabi rates, with the single-mode comparison as reference");
    d["system"] = symmetric_pair(15.0, 106.0);
    d["reference"] = single_mode(15.0, 106.0);
    d["sweep"] = rabi_axis(60.0, 244.0, 8.0);
    d["outputs"] = {{"steady", true}};
    d["convergence"] = {{"check", false}, {"waived", true}, {"reason", kTruncationWaiver}};
    return d;
  }
  if (name == "figS5") {
    json d = base(name, "Harmonic pair 2 D1 = D2 = 160 MHz: co-enhancement of the second mode near 80 MHz");
    d["system"] = qubit_driven({mode(80.0, 1.0, 25.0), mode(160.0, 1.0, 25.0)}, 15.0, 80.0, {6, 4});
    d["sweep"] = rabi_axis(40.0, 224.0, 8.0);
    d["outputs"] = {{"steady", true}};
    d["convergence"] = {{"check", false}, {"waived", true}, {"reason", kTruncationWaiver}};
    return d;
  }
  if (name == "figS6") {
    json d = base(name, "Mode fluorescence spectra and linewidths around the photon-number peak, two modes "
                        "against the single-mode reference");
    d["system"] = symmetric_pair(15.0, 106.0);
    d["reference"] = single_mode(15.0, 106.0);
    d["sweep"] = rabi_axis(90.0, 122.0, 4.0);
    d["outputs"] = {{"steady", true}, {"spectra", spectra_block({0, 1})}};
    d["convergence"] = {{"check", false}, {"waived", true}, {"reason", kTruncationWaiver}};
    return d;
  }
  if (name == "figS7") {
    json d = base(name, "Photon number and right-mode linewidth against Rabi rate for gamma = 5 MHz");
    d["system"] = symmetric_pair(5.0, 106.0);
    d["sweep"] = rabi_axis(80.0, 136.0, 4.0);
    d["outputs"] = {{"steady", true}, {"spectra", spectra_block({0})}};
    d["convergence"] = {{"check", false}, {"waived", true}, {"reason", kTruncationWaiver}};
    return d;
  }
  if (name == "fig2-map") {
    json d = base(name, "Weak-probe transmission over three modes spaced by 92 MHz as the qubit is tuned");
    d["linear"] = {{"fsr_mhz", 92.0},
                   {"g0_mhz", 3.75},
                   {"harmonics", {0, 1, 2}},
                   {"first_mode_mhz", 0.0},
                   {"kappa_mhz", 1.0},
                   {"gamma_mhz", 1.0},
                   {"qubit_mhz", {{"start", -46.0}, {"stop", 230.0}, {"step", 1.0}}},
                   {"probe_mhz", {{"start", -40.0}, {"stop", 224.0}, {"step", 0.1}}}};
    return d;
  }
  if (name == "mollow") {
    json d = base(name, "Driven qubit alone: Mollow triplet sidebands at +-Omega");
    // a decoupled spectator mode keeps the Hilbert space non-empty
    d["system"] = qubit_driven({mode(0.0, 1.0, 0.0)}, 1.0, 50.0, {1});
    d["sweep"] = json::array({{{"path", "drive.rabi_mhz"}, {"values", {30.0, 50.0, 70.0}}}});
    d["outputs"] = {{"steady", true},
                    {"spectra", {{"qubit", true}, {"dt_us", 2e-3}, {"tau_max_us", 2.0}, {"tau_cap_us", 32.0}}}};
    return d;
  }
  throw ConfigError("preset: unknown preset '" + name + "'");
}

}  // namespace mmcqed
