// mmcqed: validate configs, run campaigns, emit plot data.
//
// Exit codes: 0 ok, 1 some campaign points failed, 2 invocation or config error.

#include <iostream>

#include <CLI11.hpp>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kPointFailures = 1;
constexpr int kInvocation = 2;

json load_document(const std::string& config, const std::string& preset) {
  if (!config.empty() && !preset.empty()) throw mmcqed::ConfigError("give either --config or --preset, not both");
  if (!preset.empty()) return mmcqed::preset(preset);
  if (config.empty()) throw mmcqed::ConfigError("one of --config or --preset is required");
  return mmcqed::load_json(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimode cavity QED simulations"};
  app.require_subcommand(1);

  std::string config, preset, out_dir = "results", which = "all", run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> walks;
  bool fast = false, overwrite = false, reuse = false, waive = false, check = false;

  auto* validate = app.add_subcommand("validate", "Check a config file or preset");
  validate->add_option("--config", config, "Campaign JSON file");
  validate->add_option("--preset", preset, "Built-in preset name");

  auto* run = app.add_subcommand("run", "Run a campaign and write a result store");
  run->add_option("--config", config, "Campaign JSON file");
  run->add_option("--preset", preset, "Built-in preset name");
  run->add_option("--seed", seed, "Base seed override");
  run->add_option("--walks", walks, "Trajectories per point");
  run->add_option("--out-dir", out_dir, "Parent directory for result stores")->capture_default_str();
  run->add_flag("--fast", fast, "CI mode: 200 walks, looser tolerances");
  run->add_flag("--overwrite", overwrite, "Replace an existing store with the same config hash");
  run->add_flag("--reuse", reuse, "Keep an existing store with the same config hash");
  run->add_flag("--waive-convergence", waive, "Skip the cutoff convergence requirement");
  run->add_flag("--check-convergence", check, "Rerun each point at cutoffs + 2");
  run->add_option("--plots", which, "Also emit plots (all, photon_number, spectra, linewidth, transmission)");

  auto* plots = app.add_subcommand("emit-plots", "Write plot CSV and SVG files for a result store");
  plots->add_option("run_dir", run_dir, "Result store directory")->required();
  plots->add_option("--which", which, "all, photon_number, spectra, linewidth or transmission")->capture_default_str();

  app.add_subcommand("list-presets", "Print the built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvocation;
  }

  try {
    if (app.got_subcommand("list-presets")) {
      for (const auto& name : mmcqed::preset_names()) {
        std::cout << name << "\t" << mmcqed::preset(name).value("description", "") << "\n";
      }
      return kOk;
    }
    if (app.got_subcommand("validate")) {
      mmcqed::ValidationReport report;
      if (!config.empty() && preset.empty()) {
        report = mmcqed::validate_config_file(config);
      } else {
        report = mmcqed::validate_config(load_document(config, preset));
      }
      std::cout << report.text();
      return report.ok() ? kOk : kInvocation;
    }
    if (app.got_subcommand("emit-plots")) {
      for (const auto& f : mmcqed::emit_plotdata(run_dir, which)) std::cout << f.string() << "\n";
      return kOk;
    }

    if (overwrite && reuse) throw mmcqed::ConfigError("--overwrite and --reuse are exclusive");
    mmcqed::RunOptions options;
    options.seed = seed;
    options.walks = walks;
    options.fast = fast;
    options.waive_convergence = waive;
    options.check_convergence = check;
    const json doc = mmcqed::apply_options(load_document(config, preset), options);
    const mmcqed::ValidationReport report = mmcqed::validate_config(doc);
    if (!report.ok()) {
      std::cerr << report.text();
      return kInvocation;
    }
    for (const auto& issue : report.issues) std::cerr << "warning: " << issue.field << ": " << issue.message << "\n";
    const mmcqed::Campaign campaign = mmcqed::campaign_from_json(doc);
    const auto policy = overwrite ? mmcqed::OverwritePolicy::Overwrite
                        : reuse   ? mmcqed::OverwritePolicy::Reuse
                                  : mmcqed::OverwritePolicy::Refuse;
    if (mmcqed::store_exists(campaign.name, campaign.hash(), out_dir)) {
      if (policy == mmcqed::OverwritePolicy::Reuse) {
        std::cout << (fs::path(out_dir) / (campaign.name + "-" + campaign.hash())).string() << " (reused)\n";
        return kOk;
      }
      if (policy == mmcqed::OverwritePolicy::Refuse) {
        throw mmcqed::ConfigError("a store for config hash " + campaign.hash() +
                                  " already exists in " + out_dir + "; pass --overwrite or --reuse");
      }
    }
    std::cerr << "running " << campaign.name << " (hash " << campaign.hash() << ")\n";
    const mmcqed::ResultStore store = mmcqed::run_campaign(campaign);
    const fs::path dir = mmcqed::write_store(store, out_dir, policy);
    std::cout << dir.string() << "\n";
    if (run->count("--plots")) mmcqed::emit_plotdata(dir, which);
    if (store.failed_points > 0) {
      std::cerr << store.failed_points << " point(s) failed, see " << (dir / "failures.csv").string() << "\n";
      return kPointFailures;
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvocation;
  }
}
