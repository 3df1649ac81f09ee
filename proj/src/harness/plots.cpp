#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmcqed/errors.hpp"
#include "mmcqed/harness.hpp"

namespace mmcqed {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Table read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<std::vector<std::string>> records(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      records.back().push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      records.back().push_back(std::move(field));
      field.clear();
      records.emplace_back();
    } else {
      field += c;
    }
  }
  if (records.back().empty()) records.pop_back();

  Table t;
  t.name = path.stem().string();
  if (records.empty()) return t;
  t.columns = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<Cell> row;
    for (const auto& f : records[r]) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty()) {
        row.emplace_back(kNaN);
      } else if (end && *end == '\0') {
        row.emplace_back(v);
      } else {
        row.emplace_back(f);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string text_of(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", std::get<double>(c));
  return buf;
}

double number_of(const Cell& c) {
  const auto* d = std::get_if<double>(&c);
  return d ? *d : kNaN;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::pair<double, double> range_of(const std::vector<Series>& s, bool use_x) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& ser : s) {
    for (double v : use_x ? ser.x : ser.y) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  const double w = 640, h = 420, l = 70, r = 160, t = 40, b = 50;
  const auto [x0, x1] = range_of(series, true);
  auto [y0, y1] = range_of(series, false);
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return l + (x - x0) / (x1 - x0) * (w - l - r); };
  auto py = [&](double y) { return h - b - (y - y0) / (y1 - y0) * (h - t - b); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << w - l - r << "\" height=\"" << h - t - b
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    s << "<text x=\"" << px(xv) << "\" y=\"" << h - b + 16 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    s << "<text x=\"" << l - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  s << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text transform=\"translate(16," << (t + h - b) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
    << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    const char* color = ser.dashed ? "black" : kPalette[k % 8];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (ser.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (std::isfinite(ser.x[i]) && std::isfinite(ser.y[i])) s << fmt(px(ser.x[i])) << "," << fmt(py(ser.y[i])) << " ";
    }
    s << "\"/>\n";
    const double ly = t + 16 + 18 * static_cast<double>(k);
    s << "<line x1=\"" << w - r + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << w - r + 34 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << color << "\"" << (ser.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    s << "<text x=\"" << w - r + 40 << "\" y=\"" << ly << "\">" << ser.label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string series_csv(const std::string& xname, const std::vector<Series>& series) {
  std::ostringstream s;
  s << "series," << xname << ",y\n";
  for (const auto& ser : series) {
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      s << ser.label << "," << fmt(ser.x[i]) << "," << std::to_string(ser.y[i]) << "\n";
    }
  }
  return s.str();
}

struct Run {
  fs::path dir;
  json config;
  std::string axis;  // first sweep path, or empty
};

double first_kappa(const json& config) {
  if (config.contains("system")) return config["system"]["modes"][0].value("kappa_mhz", 1.0);
  if (config.contains("linear")) return config["linear"].value("kappa_mhz", 1.0);
  return 1.0;
}

std::vector<fs::path> plot_photon_number(const Run& run) {
  if (!fs::exists(run.dir / "steady.csv")) return {};
  const Table t = read_csv(run.dir / "steady.csv");
  std::vector<Series> series;
  const std::size_t xs = run.axis.empty() ? t.index("point") : t.index(run.axis);
  for (const std::string sys : {"main", "reference"}) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const std::string& col = t.columns[c];
      if (col.rfind("n_", 0) != 0 || col.size() < 3 || col.find("_err") != std::string::npos) continue;
      Series s;
      s.label = sys + " N" + std::to_string(std::stoi(col.substr(2)) + 1);
      for (const auto& row : t.rows) {
        if (text_of(row[t.index("system")]) != sys || text_of(row[t.index("method")]) != "direct") continue;
        if (!std::isfinite(number_of(row[c]))) continue;
        s.x.push_back(number_of(row[xs]));
        s.y.push_back(number_of(row[c]));
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
  }
  if (series.empty()) return {};
  const fs::path csv = run.dir / "plots" / "photon_number.csv";
  const fs::path svg = run.dir / "plots" / "photon_number.svg";
  write_file(csv, series_csv(run.axis.empty() ? "point" : run.axis, series));
  write_file(svg, line_plot("Steady-state photon number", run.axis.empty() ? "point" : run.axis, "N", series));
  return {csv, svg};
}

std::vector<fs::path> plot_linewidth(const Run& run) {
  if (!fs::exists(run.dir / "spectra.csv")) return {};
  const Table t = read_csv(run.dir / "spectra.csv");
  const std::size_t xs = run.axis.empty() ? t.index("point") : t.index(run.axis);
  std::map<std::string, Series> by;
  for (const auto& row : t.rows) {
    const std::string src = text_of(row[t.index("source")]);
    if (src == "qubit") continue;
    const std::string label = text_of(row[t.index("system")]) + " " + src;
    auto& s = by[label];
    s.label = label;
    s.x.push_back(number_of(row[xs]));
    s.y.push_back(number_of(row[t.index("fwhm_mhz")]));
  }
  if (by.empty()) return {};
  std::vector<Series> series;
  for (auto& [k, s] : by) series.push_back(std::move(s));
  const auto [x0, x1] = range_of(series, true);
  const double kappa = first_kappa(run.config);
  series.push_back({"kappa", {x0, x1}, {kappa, kappa}, true});
  const fs::path csv = run.dir / "plots" / "linewidth.csv";
  const fs::path svg = run.dir / "plots" / "linewidth.svg";
  write_file(csv, series_csv(run.axis.empty() ? "point" : run.axis, series));
  write_file(svg, line_plot("Fitted linewidth", run.axis.empty() ? "point" : run.axis, "FWHM (MHz)", series));
  return {csv, svg};
}

std::vector<fs::path> plot_spectra(const Run& run) {
  const fs::path dir = run.dir / "spectra";
  if (!fs::exists(dir)) return {};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  // one figure per source, overlaying all sweep points
  std::map<std::string, std::vector<Series>> groups;
  std::map<std::string, double> centers;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const std::string source = stem.substr(stem.rfind('_') + 1);
    const Table t = read_csv(f);
    const auto x = t.numbers("freq_mhz"), y = t.numbers("psd");
    if (x.empty()) continue;
    const std::size_t peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double window = source == "qubit" ? 1.5 * (std::abs(x[peak]) + 20.0) : 10.0 * first_kappa(run.config);
    const double center = source == "qubit" ? 0.0 : x[peak];
    Series s;
    s.label = stem.substr(0, stem.rfind('_'));
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - center) <= window) {
        s.x.push_back(x[i]);
        s.y.push_back(y[i] / y[peak]);
      }
    }
    groups[source].push_back(std::move(s));
    centers[source] = center;
  }
  std::vector<fs::path> out;
  const double kappa = first_kappa(run.config);
  for (auto& [source, series] : groups) {
    if (source != "qubit") {
      // bare-cavity Lorentzian of the natural linewidth
      Series ref{"natural linewidth", {}, {}, true};
      const auto [x0, x1] = range_of(series, true);
      for (int i = 0; i <= 400; ++i) {
        const double x = x0 + (x1 - x0) * i / 400.0, d = 2.0 * (x - centers[source]) / kappa;
        ref.x.push_back(x);
        ref.y.push_back(1.0 / (1.0 + d * d));
      }
      series.push_back(std::move(ref));
    }
    const fs::path csv = run.dir / "plots" / ("spectra_" + source + ".csv");
    const fs::path svg = run.dir / "plots" / ("spectra_" + source + ".svg");
    write_file(csv, series_csv("freq_mhz", series));
    write_file(svg, line_plot("Normalized emission spectra, " + source, "frequency from drive (MHz)", "S / max", series));
    out.push_back(csv);
    out.push_back(svg);
  }
  return out;
}

std::vector<fs::path> plot_transmission(const Run& run) {
  if (!fs::exists(run.dir / "transmission.csv")) return {};
  const Table t = read_csv(run.dir / "transmission.csv");
  std::vector<double> probe;
  for (std::size_t c = 1; c < t.columns.size(); ++c) probe.push_back(std::stod(t.columns[c]));
  if (probe.empty() || t.rows.empty()) return {};
  double vmax = 0.0;
  for (const auto& row : t.rows) {
    for (std::size_t c = 1; c < row.size(); ++c) vmax = std::max(vmax, number_of(row[c]));
  }
  if (vmax <= 0.0) vmax = 1.0;

  // max-pool onto at most 600 probe bins so narrow lines survive, then merge equal runs
  const std::size_t bins = std::min<std::size_t>(600, probe.size());
  const double w = 760, h = 520, l = 70, r = 30, top = 40, b = 50;
  const double cw = (w - l - r) / static_cast<double>(bins), ch = (h - top - b) / static_cast<double>(t.rows.size());
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\" shape-rendering=\"crispEdges\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">|t| over probe and qubit "
    << "frequency</text>\n";
  for (std::size_t q = 0; q < t.rows.size(); ++q) {
    const double y = top + (static_cast<double>(t.rows.size() - 1 - q)) * ch;
    int run_level = -1;
    std::size_t run_start = 0;
    auto flush = [&](std::size_t end) {
      if (run_level > 0) {
        const int g = 255 - run_level * 255 / 31;
        s << "<rect x=\"" << fmt(l + run_start * cw) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt((end - run_start) * cw)
          << "\" height=\"" << fmt(ch) << "\" fill=\"rgb(" << g << "," << g << ",255)\"/>\n";
      }
    };
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t c0 = k * probe.size() / bins, c1 = std::max(c0 + 1, (k + 1) * probe.size() / bins);
      double v = 0.0;
      for (std::size_t c = c0; c < c1; ++c) v = std::max(v, number_of(t.rows[q][c + 1]));
      const int level = static_cast<int>(std::lround(31.0 * std::clamp(v / vmax, 0.0, 1.0)));
      if (level != run_level) {
        flush(k);
        run_level = level;
        run_start = k;
      }
    }
    flush(bins);
  }
  const double q0 = number_of(t.rows.front()[0]), q1 = number_of(t.rows.back()[0]);
  s << "<rect x=\"" << l << "\" y=\"" << top << "\" width=\"" << w - l - r << "\" height=\"" << h - top - b
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double pv = probe.front() + (probe.back() - probe.front()) * i / 4.0;
    const double qv = q0 + (q1 - q0) * i / 4.0;
    s << "<text x=\"" << fmt(l + (w - l - r) * i / 4.0) << "\" y=\"" << h - b + 16 << "\" text-anchor=\"middle\">"
      << fmt(pv) << "</text>\n";
    s << "<text x=\"" << l - 6 << "\" y=\"" << fmt(h - b - (h - top - b) * i / 4.0 + 4) << "\" text-anchor=\"end\">"
      << fmt(qv) << "</text>\n";
  }
  s << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">probe (MHz)</text>\n";
  s << "<text transform=\"translate(16," << (top + h - b) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">qubit (MHz)</text>\n";
  s << "</svg>\n";

  const fs::path csv = run.dir / "plots" / "transmission.csv";
  const fs::path svg = run.dir / "plots" / "transmission.svg";
  write_file(csv, t.csv());
  write_file(svg, s.str());
  return {csv, svg};
}

}  // namespace

std::vector<fs::path> emit_plotdata(const fs::path& run_dir, const std::string& which) {
  static const std::vector<std::string> kinds{"all", "photon_number", "spectra", "linewidth", "transmission"};
  if (std::find(kinds.begin(), kinds.end(), which) == kinds.end()) {
    throw ConfigError("emit-plots: unknown figure kind '" + which + "'");
  }
  if (!fs::exists(run_dir / "metadata.json")) {
    throw AnalysisError("emit-plots: " + run_dir.string() + " is not a result store");
  }
  Run run{run_dir, load_json(run_dir / "config.json"), ""};
  if (run.config.contains("sweep") && !run.config["sweep"].empty()) run.axis = run.config["sweep"][0]["path"];

  std::vector<fs::path> out;
  auto add = [&](const std::vector<fs::path>& files) { out.insert(out.end(), files.begin(), files.end()); };
  if (which == "all" || which == "photon_number") add(plot_photon_number(run));
  if (which == "all" || which == "linewidth") add(plot_linewidth(run));
  if (which == "all" || which == "spectra") add(plot_spectra(run));
  if (which == "all" || which == "transmission") add(plot_transmission(run));
  if (out.empty()) throw AnalysisError("emit-plots: no '" + which + "' outputs in " + run_dir.string());
  return out;
}

}  // namespace mmcqed
