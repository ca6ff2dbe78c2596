#ifndef PLANPROBE_REPORT_HPP
#define PLANPROBE_REPORT_HPP

// Result tables (CSV, JSON), SVG heatmaps and run manifests.
//
// Numbers are printed with 17 significant digits so every double round-trips
// exactly. Everything except the run manifest's timing is a pure function of
// the sweep result, so re-runs produce identical bytes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "planprobe/dataset_builder.hpp"
#include "planprobe/error.hpp"
#include "planprobe/sweep.hpp"
#include "planprobe/version.hpp"

namespace planprobe {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::string_view kCsvHeader = "task,model,layer,hidden_size,seed,split,metric,value,degenerate";

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// One row per (cell, split, metric): the selection metric on validation and
/// every metric on test. Failed cells have no rows.
inline std::string cells_csv(const SweepResult& r) {
  std::string out(kCsvHeader);
  out += '\n';
  auto row = [&](const CellResult& c, const char* split, const MetricReport& m) {
    out += detail::csv_field(r.task_id) + ',' + detail::csv_field(r.model_name) + ',' + std::to_string(c.layer) + ',' +
           std::to_string(c.hidden_size) + ',' + std::to_string(c.seed) + ',' + split + ',' + m.name + ',' +
           format_number(m.value) + ',' + (m.degenerate ? "true" : "false") + '\n';
  };
  for (const auto& c : r.cells) {
    if (c.failed) continue;
    row(c, "val", c.validation);
    for (const auto& m : c.test) row(c, "test", m);
  }
  return out;
}

inline nlohmann::json metric_json(const MetricReport& m) {
  return {{"name", m.name}, {"value", m.value}, {"degenerate", m.degenerate}, {"n", m.n}};
}

inline MetricReport metric_from_json(const nlohmann::json& j) {
  return {j.at("name").get<std::string>(), j.at("value").get<double>(), j.value("degenerate", false),
          j.value("n", std::size_t{0})};
}

/// Everything a downstream consumer needs: grid, per-cell metrics, selection,
/// curves and provenance hashes.
inline nlohmann::json result_json(const SweepResult& r, const std::string& config_hash,
                                  const std::map<std::string, std::string>& data_hashes) {
  nlohmann::json cells = nlohmann::json::array();
  nlohmann::json failed = nlohmann::json::array();
  for (const auto& c : r.cells) {
    if (c.failed) {
      failed.push_back({{"layer", c.layer}, {"hidden_size", c.hidden_size}, {"seed", c.seed}, {"error", c.error}});
      continue;
    }
    nlohmann::json test = nlohmann::json::array();
    for (const auto& m : c.test) test.push_back(metric_json(m));
    cells.push_back({{"layer", c.layer},
                     {"hidden_size", c.hidden_size},
                     {"seed", c.seed},
                     {"best_epoch", c.best_epoch},
                     {"validation", metric_json(c.validation)},
                     {"test", test}});
  }
  nlohmann::json j{{"toolkit_version", kToolkitVersion},
                   {"config_hash", config_hash},
                   {"data_hashes", data_hashes},
                   {"task", r.task_id},
                   {"model", r.model_name},
                   {"metric", r.metric},
                   {"num_classes", r.num_classes},
                   {"grid",
                    {{"layers", r.grid.layers}, {"hidden_sizes", r.grid.hidden_sizes}, {"seeds", r.grid.seeds}}},
                   {"train",
                    {{"epochs", r.settings.epochs},
                     {"learning_rate", r.settings.learning_rate},
                     {"batch_size", r.settings.batch_size},
                     {"standardize", r.settings.standardize}}},
                   {"cells", cells},
                   {"failed_cells", failed}};
  if (r.best) {
    nlohmann::json best_test = nlohmann::json::array();
    for (const auto& m : r.best_test) best_test.push_back(metric_json(m));
    j["best_cell"] = {{"layer", r.best->layer},
                      {"hidden_size", r.best->hidden_size},
                      {"validation", r.best->validation}};
    j["best_test"] = best_test;
  } else {
    j["best_cell"] = nullptr;
  }
  const auto lc = layerwise_curve(r);
  j["layerwise_curve"] = {{"layers", lc.layers},
                          {"hidden_sizes", lc.hidden_sizes},
                          {"test", lc.test},
                          {"normalized", lc.normalized},
                          {"degenerate", lc.degenerate}};
  const auto hc = hidden_size_curve(r);
  j["hidden_size_curve"] = {{"hidden_sizes", hc.hidden_sizes}, {"value", hc.value}};
  return j;
}

/// Rebuilds the result table from result.json (models are not included).
inline SweepResult sweep_result_from_json(const nlohmann::json& j) {
  SweepResult r;
  r.task_id = j.at("task").get<std::string>();
  r.model_name = j.value("model", "");
  r.metric = j.at("metric").get<std::string>();
  r.num_classes = j.at("num_classes").get<int>();
  r.grid.layers = j.at("grid").at("layers").get<std::vector<int>>();
  r.grid.hidden_sizes = j.at("grid").at("hidden_sizes").get<std::vector<int>>();
  r.grid.seeds = j.at("grid").at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("train")) {
    const auto& t = j.at("train");
    r.settings.epochs = t.value("epochs", 400);
    r.settings.learning_rate = t.value("learning_rate", 1e-3);
    r.settings.batch_size = t.value("batch_size", 64);
    r.settings.standardize = t.value("standardize", true);
  }
  for (const auto& c : j.at("cells")) {
    CellResult cell;
    cell.layer = c.at("layer").get<int>();
    cell.hidden_size = c.at("hidden_size").get<int>();
    cell.seed = c.at("seed").get<std::uint64_t>();
    cell.best_epoch = c.value("best_epoch", 0);
    cell.validation = metric_from_json(c.at("validation"));
    for (const auto& m : c.at("test")) cell.test.push_back(metric_from_json(m));
    r.cells.push_back(std::move(cell));
  }
  for (const auto& c : j.value("failed_cells", nlohmann::json::array())) {
    CellResult cell;
    cell.layer = c.at("layer").get<int>();
    cell.hidden_size = c.at("hidden_size").get<int>();
    cell.seed = c.at("seed").get<std::uint64_t>();
    cell.failed = true;
    cell.error = c.value("error", "");
    r.cells.push_back(std::move(cell));
  }
  if (!j.at("best_cell").is_null()) {
    const auto& b = j.at("best_cell");
    r.best = BestCell{b.at("layer").get<int>(), b.at("hidden_size").get<int>(), b.at("validation").get<double>()};
    for (const auto& m : j.at("best_test")) r.best_test.push_back(metric_from_json(m));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Heatmap

struct HeatmapTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  /// rows x columns.
  std::vector<std::vector<double>> values;
};

enum class HeatmapScale { kRaw, kRow };

inline constexpr std::string_view kHeatmapGenerator = "planprobe-heatmap/1";

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Linear ramp from dark (0) to light (1); values are clamped to [0, 1].
inline std::string ramp_color(double v) {
  if (!std::isfinite(v)) v = 0.0;
  v = std::clamp(v, 0.0, 1.0);
  constexpr int dark[3] = {8, 29, 88};
  constexpr int light[3] = {247, 252, 240};
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(dark[k] + v * (light[k] - dark[k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace detail

/// Rows are models or datasets, columns layers. Each cell carries its exact
/// value in data-value; each non-degenerate row gets a min-max normalized
/// trend polyline.
inline std::string emit_heatmap(const HeatmapTable& table, HeatmapScale scale = HeatmapScale::kRaw) {
  if (table.values.empty()) fail(ErrorKind::kData, "heatmap table is empty");
  const std::size_t cols = table.column_labels.size();
  for (const auto& row : table.values) {
    if (row.size() != cols) fail(ErrorKind::kShape, "heatmap rows must match the column labels");
  }
  if (cols == 0) fail(ErrorKind::kData, "heatmap table has no columns");
  constexpr int kCell = 40, kLeft = 140, kTop = 30, kBottom = 30;
  const int width = kLeft + static_cast<int>(cols) * kCell + 10;
  const int height = kTop + static_cast<int>(table.values.size()) * kCell + kBottom;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<!-- generator: " << kHeatmapGenerator << ' ' << kToolkitVersion << " -->\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" data-scale=\""
      << (scale == HeatmapScale::kRaw ? "raw" : "row") << "\">\n";
  svg << "<style>text{font-family:monospace;font-size:11px}</style>\n";
  for (std::size_t c = 0; c < cols; ++c) {
    svg << "<text x=\"" << kLeft + static_cast<int>(c) * kCell + kCell / 2 << "\" y=\"" << kTop - 8
        << "\" text-anchor=\"middle\">" << detail::xml_escape(table.column_labels[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < table.values.size(); ++r) {
    const auto& row = table.values[r];
    const auto [normalized, degenerate] = min_max_normalize(row);
    const int y = kTop + static_cast<int>(r) * kCell;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + kCell / 2 + 4 << "\" text-anchor=\"end\">"
        << detail::xml_escape(r < table.row_labels.size() ? table.row_labels[r] : std::to_string(r)) << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c) {
      const double shade = scale == HeatmapScale::kRaw ? row[c] : normalized[c];
      svg << "<rect class=\"cell\" x=\"" << kLeft + static_cast<int>(c) * kCell << "\" y=\"" << y << "\" width=\""
          << kCell << "\" height=\"" << kCell << "\" fill=\"" << detail::ramp_color(shade) << "\" data-row=\"" << r
          << "\" data-col=\"" << c << "\" data-value=\"" << format_number(row[c]) << "\"/>\n";
    }
    if (degenerate) continue;
    svg << "<polyline class=\"trend\" data-row=\"" << r << "\" fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t c = 0; c < cols; ++c) {
      const double px = kLeft + static_cast<double>(c) * kCell + kCell / 2.0;
      const double py = y + kCell - 4 - normalized[c] * (kCell - 8);
      svg << (c ? " " : "") << format_number(px) << ',' << format_number(py);
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Cell values recovered from an emitted heatmap, by data-row/data-col.
inline std::vector<std::vector<double>> parse_heatmap_values(const std::string& svg) {
  static const std::regex cell(R"re(data-row="(\d+)" data-col="(\d+)" data-value="([^"]+)")re");
  std::vector<std::vector<double>> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
    const auto r = std::stoul((*it)[1]);
    const auto c = std::stoul((*it)[2]);
    if (out.size() <= r) out.resize(r + 1);
    if (out[r].size() <= c) out[r].resize(c + 1);
    out[r][c] = std::strtod((*it)[3].str().c_str(), nullptr);
  }
  return out;
}

/// Trend polyline y-coordinates per row (rows without a polyline are absent).
inline std::map<std::size_t, std::vector<double>> parse_heatmap_trends(const std::string& svg) {
  static const std::regex line(R"re(<polyline class="trend" data-row="(\d+)"[^>]* points="([^"]*)")re");
  std::map<std::size_t, std::vector<double>> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), line); it != std::sregex_iterator(); ++it) {
    std::vector<double> ys;
    std::istringstream pts((*it)[2].str());
    std::string pt;
    while (pts >> pt) ys.push_back(std::strtod(pt.substr(pt.find(',') + 1).c_str(), nullptr));
    out[std::stoul((*it)[1])] = ys;
  }
  return out;
}

/// One heatmap row per sweep: the layerwise curve (best hidden size per
/// layer, seed-averaged test metric).
inline HeatmapTable layer_heatmap(const std::vector<SweepResult>& results) {
  HeatmapTable t;
  std::vector<int> layers;
  for (const auto& r : results) {
    for (int l : r.grid.layers) {
      if (std::find(layers.begin(), layers.end(), l) == layers.end()) layers.push_back(l);
    }
  }
  std::sort(layers.begin(), layers.end());
  for (int l : layers) t.column_labels.push_back("L" + std::to_string(l));
  for (const auto& r : results) {
    const auto curve = layerwise_curve(r);
    std::vector<double> row(layers.size(), 0.0);
    for (std::size_t i = 0; i < curve.layers.size(); ++i) {
      const auto pos = std::find(layers.begin(), layers.end(), curve.layers[i]) - layers.begin();
      row[static_cast<std::size_t>(pos)] = curve.test[i];
    }
    t.row_labels.push_back(r.model_name.empty() ? r.task_id : r.model_name + "/" + r.task_id);
    t.values.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Run manifests

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> input_hashes;
  std::vector<std::uint64_t> seeds;
  std::string toolkit_version = std::string(kToolkitVersion);
  double elapsed_seconds = 0.0;
  std::vector<std::string> outputs;
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"command", m.command},
                     {"config_hash", m.config_hash},
                     {"input_hashes", m.input_hashes},
                     {"seeds", m.seeds},
                     {"toolkit_version", m.toolkit_version},
                     {"timing", {{"elapsed_seconds", m.elapsed_seconds}}},
                     {"outputs", m.outputs}};
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("command").get_to(m.command);
  m.config_hash = j.value("config_hash", "");
  m.input_hashes = j.value("input_hashes", std::map<std::string, std::string>{});
  m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  m.toolkit_version = j.value("toolkit_version", "");
  m.elapsed_seconds = j.at("timing").value("elapsed_seconds", 0.0);
  m.outputs = j.value("outputs", std::vector<std::string>{});
}

inline constexpr std::string_view kRunManifestName = "run_manifest.json";

/// Writes the run manifest into `dir`.
inline void write_run_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  write_json_file(dir / kRunManifestName, m);
}

}  // namespace planprobe

#endif  // PLANPROBE_REPORT_HPP
