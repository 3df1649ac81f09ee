#include <fstream>
#include <sstream>

#include <doctest.h>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

using namespace mmcqed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny(double rabi) {
  return {{"schema_version", 1},
          {"name", "tiny"},
          {"system",
           {{"modes", {{{"detuning_mhz", 3.0}, {"kappa_mhz", 1.0}, {"g_mhz", 2.0}}}},
            {"qubit", {{"detuning_mhz", 0.0}, {"gamma_mhz", 1.5}}},
            {"drive", {{"type", "qubit"}, {"rabi_mhz", rabi}}},
            {"cutoffs", {6}}}}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmcqed_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool has_issue(const ValidationReport& r, const std::string& field, bool warning) {
  for (const auto& i : r.issues) {
    if (i.field.find(field) != std::string::npos && i.warning == warning) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("every preset validates") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK(validate_config(preset(name)).ok());
  }
  CHECK_THROWS_AS(preset("nope"), ConfigError);
  CHECK(campaign_from_json(preset("figS4")).sweep.at(0).values.size() == 24);
  CHECK(campaign_from_json(preset("figS7")).config["system"]["qubit"]["gamma_mhz"] == 5.0);
}

TEST_CASE("validation names the offending field") {
  json doc = tiny(4.0);
  doc["system"]["modes"][0]["kappa_mhz"] = 0.0;
  const ValidationReport r = validate_config(doc);
  CHECK_FALSE(r.ok());
  CHECK(has_issue(r, "kappa_mhz", false));

  doc = tiny(4.0);
  doc["system"]["modes"][0]["colour"] = "red";
  CHECK(has_issue(validate_config(doc), "colour", false));

  doc = tiny(4.0);
  doc["sweep"] = json::array({{{"path", "drive.frequency"}, {"values", {1.0}}}});
  CHECK(has_issue(validate_config(doc), "sweep[0].path", false));

  doc = tiny(4.0);
  doc["system"]["drive"] = {{"type", "cavity"}, {"mode", 0}, {"eta_mhz", 2.0}};
  doc["system"]["modes"][0]["detuning_mhz"] = 0.0;
  doc["system"]["frame"] = "rotating_cavity_drive";
  const ValidationReport w = validate_config(doc);
  CHECK(w.ok());
  CHECK(has_issue(w, "drive.eta_mhz", true));
}

TEST_CASE("config files report syntax positions") {
  const fs::path dir = scratch("syntax");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\n  \"name\": \"x\",\n  oops\n}\n";
  const ValidationReport r = validate_config_file(dir / "bad.json");
  CHECK_FALSE(r.ok());
  CHECK(r.text().find("bad.json:3:") != std::string::npos);
  CHECK_FALSE(validate_config_file(dir / "missing.json").ok());
}

TEST_CASE("hash is stable and reproduced by the echoed config") {
  const Campaign a = campaign_from_json(tiny(4.0));
  json with_workers = tiny(4.0);
  with_workers["workers"] = 3;
  CHECK(campaign_from_json(with_workers).hash() == a.hash());
  CHECK(campaign_from_json(tiny(4.5)).hash() != a.hash());
  CHECK(campaign_from_json(a.config).hash() == a.hash());
  CHECK(a.hash().size() == 16);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("empty sweep is a single point") {
  const ResultStore s = run_campaign(campaign_from_json(tiny(4.0)));
  const Table& t = s.table("steady");
  REQUIRE(t.rows.size() == 1);
  CHECK(std::get<std::string>(t.rows[0][t.index("config_hash")]) == s.config_hash);
  CHECK(std::get<std::string>(t.rows[0][t.index("code_version")]) == code_version());
  CHECK(t.numbers("converged").at(0) == 1.0);
  CHECK(s.failed_points == 0);
}

TEST_CASE("sweep rows carry their axis values") {
  json doc = tiny(4.0);
  doc["sweep"] = json::array({{{"path", "drive.rabi_mhz"}, {"values", {{"start", 2.0}, {"stop", 6.0}, {"count", 3}}}}});
  doc["outputs"] = {{"steady_method", "both"}};
  doc["walks"] = 16;
  doc["mcwf_window"] = {{"t_end_us", 2.0}, {"burn_in_us", 1.0}, {"dt_us", 0.05}};
  const ResultStore s = run_campaign(campaign_from_json(doc));
  const Table& t = s.table("steady");
  CHECK(t.rows.size() == 6);
  CHECK(t.numbers("drive.rabi_mhz", "method", "direct") == std::vector<double>{2.0, 4.0, 6.0});
  for (double e : t.numbers("n_0_err", "method", "mcwf")) CHECK(e > 0.0);
}

TEST_CASE("failed points are recorded and the campaign continues") {
  json doc = tiny(4.0);
  doc["sweep"] = json::array({{{"path", "modes[0].kappa_mhz"}, {"values", {1.0, 0.0, 2.0}}}});
  const ResultStore s = run_campaign(campaign_from_json(doc));
  CHECK(s.failed_points == 1);
  const Table& f = s.table("failures");
  REQUIRE(f.rows.size() == 1);
  CHECK(std::get<double>(f.rows[0][f.index("point")]) == 1.0);
  CHECK(s.table("steady").rows.size() == 2);
}

TEST_CASE("result store on disk") {
  const fs::path out = scratch("store");
  json doc = tiny(4.0);
  doc["outputs"] = {{"spectra", {{"modes", {0}}, {"tau_max_us", 4.0}}}};
  const Campaign c = campaign_from_json(doc);
  const ResultStore s = run_campaign(c);
  CHECK(s.table("spectra").rows.size() == 1);
  const fs::path dir = write_store(s, out, OverwritePolicy::Refuse);
  CHECK(dir == out / ("tiny-" + c.hash()));
  CHECK(store_exists("tiny", c.hash(), out));
  CHECK(campaign_from_json(load_json(dir / "config.json")).hash() == c.hash());
  CHECK(load_json(dir / "metadata.json")["config_hash"] == c.hash());
  CHECK_THROWS_AS(write_store(s, out, OverwritePolicy::Refuse), ConfigError);

  const std::string before = slurp(dir / "steady.csv");
  CHECK(write_store(s, out, OverwritePolicy::Reuse) == dir);
  const ResultStore again = run_campaign(c);
  write_store(again, out, OverwritePolicy::Overwrite);
  CHECK(slurp(dir / "steady.csv") == before);
  CHECK(slurp(dir / "spectra.csv") == s.table("spectra").csv());

  const auto files = emit_plotdata(dir);
  CHECK(files.size() >= 4);
  for (const auto& f : files) CHECK(fs::file_size(f) > 0);
  CHECK_THROWS_AS(emit_plotdata(dir, "transmission"), AnalysisError);
  CHECK_THROWS_AS(emit_plotdata(dir, "bogus"), ConfigError);

  const fs::path empty = out / "empty";
  fs::create_directories(empty);
  CHECK_THROWS_AS(emit_plotdata(empty), AnalysisError);
}

TEST_CASE("transmission map campaign") {
  json doc = preset("fig2-map");
  doc["linear"]["qubit_mhz"] = {{"start", -10.0}, {"stop", 10.0}, {"step", 1.0}};
  doc["linear"]["probe_mhz"] = {{"start", -20.0}, {"stop", 200.0}, {"step", 0.1}};
  const ResultStore s = run_campaign(campaign_from_json(doc));
  CHECK(s.table("transmission").rows.size() == 21);
  const auto split = s.table("splittings").numbers("relative_error");
  CHECK(std::abs(split.at(0)) < 0.01);
  CHECK(s.table("g0_fit").numbers("g0_mhz").at(0) == doctest::Approx(3.75).epsilon(0.01));

  const fs::path out = scratch("map");
  const fs::path dir = write_store(s, out, OverwritePolicy::Refuse);
  const auto files = emit_plotdata(dir, "transmission");
  REQUIRE(files.size() == 2);
  CHECK(slurp(files[1]).find("<svg") == 0);
}

TEST_CASE("csv quoting") {
  Table t{"t", {"a", "b"}, {{1.5, std::string("x,\"y\"")}, {std::nan(""), std::string("plain")}}};
  CHECK(t.csv() == "a,b\n1.5,\"x,\"\"y\"\"\"\n,plain\n");
}

TEST_CASE("command line overrides") {
  RunOptions o;
  o.fast = true;
  o.seed = 99;
  const Campaign c = campaign_from_json(apply_options(preset("figS6"), o));
  CHECK(c.walks == 200);
  CHECK(c.seed == 99);
  CHECK(c.spectra.walks <= 800);
  RunOptions w;
  w.waive_convergence = true;
  const Campaign waived = campaign_from_json(apply_options(tiny(4.0), w));
  CHECK(waived.convergence.waived);
  CHECK_FALSE(waived.convergence.check);
}
