#include <fstream>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

namespace mmcqed {

namespace fs = std::filesystem;

namespace {

fs::path run_dir(const std::string& name, const std::string& hash, const fs::path& out_dir) {
  return out_dir / (name + "-" + hash);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

bool store_exists(const std::string& name, const std::string& hash, const fs::path& out_dir) {
  return fs::exists(run_dir(name, hash, out_dir) / "metadata.json");
}

fs::path write_store(const ResultStore& store, const fs::path& out_dir, OverwritePolicy policy) {
  const fs::path dir = run_dir(store.campaign, store.config_hash, out_dir);
  if (fs::exists(dir)) {
    if (policy == OverwritePolicy::Reuse) return dir;
    if (policy == OverwritePolicy::Refuse) {
      throw ConfigError("output directory " + dir.string() + " exists (use --overwrite or --reuse)");
    }
    fs::remove_all(dir);
  }
  // write into a sibling and rename, so a crash never leaves a half store under the final name
  const fs::path tmp = dir.string() + ".partial";
  fs::remove_all(tmp);
  write_text(tmp / "config.json", store.config.dump(2) + "\n");
  for (const auto& [name, table] : store.tables) write_text(tmp / (name + ".csv"), table.csv());
  write_text(tmp / "metadata.json", store.metadata.dump(2) + "\n");
  fs::rename(tmp, dir);
  return dir;
}

}  // namespace mmcqed
