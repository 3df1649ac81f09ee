#pragma once

// Campaigns: JSON configs, presets, sweep execution, result tables on disk and
// plot data. Config values are in MHz (angular / 2 pi) and microseconds.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmcqed/dynamics.hpp"
#include "mmcqed/mcwf.hpp"
#include "mmcqed/spectra.hpp"

namespace mmcqed {

inline constexpr int kSchemaVersion = 1;
std::string code_version();

struct SweepAxis {
  std::string path;  // e.g. "drive.rabi_mhz", "modes[1].g_mhz", "qubit.gamma_mhz"
  std::vector<double> values;
};

struct SpectrumRequest {
  bool enabled = false;
  std::vector<int> modes;
  bool qubit = false;
  bool fluctuation = true;
  std::string method = "regression";  // or "mcwf"
  double dt = 2e-3;                   // μs
  double tau_max = 1.0;               // first window, doubled until the correlation decays
  double tau_cap = 32.0;
  /// Fit window half width in units of the mode's kappa.
  double fit_half_width_kappa = 5.0;
  /// Fit window half width for the qubit spectrum, MHz.
  double qubit_fit_half_width = 5.0;
  bool save = true;
  std::size_t walks = 4000;
  double settle_time = 5.0;
};

struct LinearRequest {
  double fsr = 92.0;
  double g0 = 3.75;
  std::vector<int> harmonics{0, 1, 2};
  double first_mode = 0.0;
  double kappa = 1.0;
  double gamma = 1.0;
  std::vector<double> qubit_grid;
  std::vector<double> probe_grid;
  double min_peak_height = 0.05;
};

struct ConvergencePolicy {
  bool check = false;
  double rtol = 1e-3;
  bool waived = false;
  std::string reason;
};

struct Campaign {
  std::string name;
  /// Canonical resolved config (defaults filled in); hashed and echoed.
  nlohmann::json config;
  std::vector<SweepAxis> sweep;
  bool has_system = false;
  bool has_reference = false;
  bool steady = true;
  std::string steady_method = "direct";  // direct | mcwf | both
  SpectrumRequest spectra;
  std::optional<LinearRequest> linear;
  SolverSettings solver;
  McwfSettings mcwf;
  std::size_t walks = 1000;
  std::uint64_t seed = 1;
  double mcwf_t_end = 20.0;
  double mcwf_burn_in = 5.0;
  double mcwf_dt = 0.01;
  ConvergencePolicy convergence;
  unsigned workers = 0;

  std::string hash() const;
};

/// A parse/validation problem tied to a config field.
struct ConfigIssue {
  std::string field;
  std::string message;
  bool warning = false;
};

struct ValidationReport {
  std::vector<ConfigIssue> issues;
  bool ok() const;
  std::string text() const;
};

/// Build a SystemConfig from a "system" JSON block. Throws ConfigError naming the field.
SystemConfig system_from_json(const nlohmann::json& system);
nlohmann::json system_to_json(const SystemConfig& config);

/// Parse and validate a campaign document. Throws ConfigError.
Campaign campaign_from_json(const nlohmann::json& doc);
/// Schema, unit and heuristic checks. Never throws for content problems.
ValidationReport validate_config(const nlohmann::json& doc);
ValidationReport validate_config_file(const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
nlohmann::json preset(const std::string& name);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> walks;
  /// CI mode: 200 walks, looser tolerances, shorter windows.
  bool fast = false;
  bool waive_convergence = false;
  bool check_convergence = false;
};

/// Apply CLI overrides to a campaign document (before parsing).
nlohmann::json apply_options(nlohmann::json doc, const RunOptions& options);

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t index(const std::string& column) const;
  /// Numeric column; rows where `filter_column` != `filter_value` are skipped when given.
  std::vector<double> numbers(const std::string& column, const std::string& filter_column = "",
                              const std::string& filter_value = "") const;
  std::string csv() const;
};

struct ResultStore {
  std::string campaign;
  std::string config_hash;
  nlohmann::json config;
  nlohmann::json metadata;
  std::map<std::string, Table> tables;
  std::size_t failed_points = 0;

  const Table& table(const std::string& name) const;
};

ResultStore run_campaign(const Campaign& campaign);

enum class OverwritePolicy { Refuse, Overwrite, Reuse };

/// Writes <out_dir>/<name>-<hash>/{config.json, metadata.json, *.csv}. With
/// Refuse an existing directory is an error; with Reuse it is left untouched.
/// Returns the run directory.
std::filesystem::path write_store(const ResultStore& store, const std::filesystem::path& out_dir,
                                  OverwritePolicy policy);
bool store_exists(const std::string& name, const std::string& hash, const std::filesystem::path& out_dir);

/// Per-figure CSV and SVG under <run_dir>/plots. which: all | photon_number |
/// spectra | linewidth | transmission. Returns the files written.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& run_dir,
                                                 const std::string& which = "all");

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace mmcqed
