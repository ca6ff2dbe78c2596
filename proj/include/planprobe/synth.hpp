#ifndef PLANPROBE_SYNTH_HPP
#define PLANPROBE_SYNTH_HPP

// Planted-signal activation datasets with known labels.
//
// Every layer row is standard normal noise except at the planted layer:
//   regression  row += snr * y * u       y ~ N(0, 1), u a fixed unit vector
//   classes     row += snr * m_c         class c = i mod K, m_c unit vectors
//   xor_pair    row[0] = s_a * snr * (margin + |z_a|), likewise row[1];
//               label = 1 when the stored row[0] and row[1] share a sign
// Record i draws from its own stream derive_seed(seed, i + 1), so records can
// be generated in any order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "planprobe/activation_store.hpp"
#include "planprobe/config.hpp"
#include "planprobe/dataset_builder.hpp"
#include "planprobe/error.hpp"
#include "planprobe/rng.hpp"
#include "planprobe/version.hpp"

namespace planprobe {

enum class SignalKind { kRegression, kClasses, kXorPair };

inline std::string_view signal_name(SignalKind k) {
  switch (k) {
    case SignalKind::kRegression: return "regression";
    case SignalKind::kClasses: return "classes";
    case SignalKind::kXorPair: return "xor_pair";
  }
  return "unknown";
}

inline SignalKind parse_signal(std::string_view name) {
  for (auto k : {SignalKind::kRegression, SignalKind::kClasses, SignalKind::kXorPair}) {
    if (signal_name(k) == name) return k;
  }
  fail(ErrorKind::kConfig, "unknown signal kind '" + std::string(name) + "' (regression, classes, xor_pair)");
}

struct PlantSpec {
  std::uint16_t layers = 8;
  std::uint32_t hidden_dim = 64;
  std::uint64_t records = 2000;
  int planted_layer = 5;
  SignalKind kind = SignalKind::kRegression;
  /// Class count for the classes signal.
  int num_classes = 4;
  double snr = 5.0;
  /// Minimum magnitude of the xor coordinates, in units of snr.
  double xor_margin = 0.5;
  std::uint64_t seed = 0;
  std::string model_name = "synthetic";

  int label_classes() const {
    return kind == SignalKind::kRegression ? 0 : kind == SignalKind::kXorPair ? 2 : num_classes;
  }

  std::string task_id() const { return "planted_" + std::string(signal_name(kind)); }

  void check() const {
    if (layers < 1 || hidden_dim < 1 || records < 1) fail(ErrorKind::kConfig, "layers, hidden_dim and records must be positive");
    if (planted_layer < 0 || planted_layer >= layers) {
      fail(ErrorKind::kConfig, "planted_layer " + std::to_string(planted_layer) + " outside [0, " +
                                   std::to_string(layers - 1) + "]");
    }
    if (!(snr > 0)) fail(ErrorKind::kConfig, "snr must be positive");
    if (kind == SignalKind::kClasses && num_classes < 2) fail(ErrorKind::kConfig, "classes signal needs K >= 2");
    if (kind == SignalKind::kXorPair && hidden_dim < 2) fail(ErrorKind::kConfig, "xor_pair needs hidden_dim >= 2");
    if (!(xor_margin >= 0)) fail(ErrorKind::kConfig, "xor_margin must be non-negative");
  }
};

inline void to_json(nlohmann::json& j, const PlantSpec& s) {
  j = nlohmann::json{{"layers", s.layers},       {"hidden_dim", s.hidden_dim},   {"records", s.records},
                     {"planted_layer", s.planted_layer}, {"kind", signal_name(s.kind)}, {"num_classes", s.num_classes},
                     {"snr", s.snr},             {"xor_margin", s.xor_margin},   {"seed", s.seed},
                     {"model_name", s.model_name}, {"generator", kGeneratorName}};
}

/// Reads the [plant] section; other sections are ignored, unknown plant keys
/// are rejected.
inline PlantSpec plant_spec_from(const Config& c) {
  static const std::vector<std::string> kKnown = {"plant.layers", "plant.hidden_dim",  "plant.records",
                                                  "plant.planted_layer", "plant.kind", "plant.num_classes",
                                                  "plant.snr",    "plant.xor_margin", "plant.seed",
                                                  "plant.model_name"};
  for (const auto& k : c.keys()) {
    if (k.rfind("plant.", 0) == 0 && std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end()) {
      fail(ErrorKind::kConfig, c.origin() + ": unknown key " + k);
    }
  }
  PlantSpec s;
  s.layers = static_cast<std::uint16_t>(c.get_int("plant.layers", s.layers));
  s.hidden_dim = static_cast<std::uint32_t>(c.get_int("plant.hidden_dim", s.hidden_dim));
  s.records = static_cast<std::uint64_t>(c.get_int("plant.records", static_cast<std::int64_t>(s.records)));
  s.planted_layer = static_cast<int>(c.get_int("plant.planted_layer", s.planted_layer));
  s.kind = parse_signal(c.get_string("plant.kind", "regression"));
  s.num_classes = static_cast<int>(c.get_int("plant.num_classes", s.num_classes));
  s.snr = c.get_double("plant.snr", s.snr);
  s.xor_margin = c.get_double("plant.xor_margin", s.xor_margin);
  s.seed = static_cast<std::uint64_t>(c.get_int("plant.seed", 0));
  s.model_name = c.get_string("plant.model_name", s.model_name);
  s.check();
  return s;
}

struct PlantedData {
  DatasetHeader header;
  std::vector<ActivationRecord> records;
  std::vector<double> labels;
};

namespace detail {

inline std::vector<float> unit_vector(std::uint64_t seed, std::uint32_t d) {
  Rng rng(seed);
  std::vector<double> v(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(d);
  for (std::uint32_t i = 0; i < d; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

inline std::string filler_response(std::uint64_t i, std::uint32_t tokens) {
  std::string s;
  for (std::uint32_t t = 0; t < tokens; ++t) {
    if (t) s += ' ';
    s += "w" + std::to_string((i + t) % 97);
  }
  return s;
}

}  // namespace detail

/// Generates the planted dataset in memory.
inline PlantedData make_planted(const PlantSpec& spec) {
  spec.check();
  PlantedData out;
  out.header.model_name = spec.model_name;
  out.header.layer_count = spec.layers;
  out.header.hidden_dim = spec.hidden_dim;
  out.header.record_count = spec.records;
  out.header.task_id = spec.task_id();

  const std::uint64_t direction_seed = derive_seed(spec.seed, 0);
  std::vector<std::vector<float>> directions;
  if (spec.kind == SignalKind::kRegression) directions.push_back(detail::unit_vector(direction_seed, spec.hidden_dim));
  if (spec.kind == SignalKind::kClasses) {
    for (int c = 0; c < spec.num_classes; ++c) {
      directions.push_back(detail::unit_vector(derive_seed(direction_seed, static_cast<std::uint64_t>(c) + 1), spec.hidden_dim));
    }
  }

  const std::size_t d = spec.hidden_dim;
  out.records.resize(spec.records);
  out.labels.resize(spec.records);
  for (std::uint64_t i = 0; i < spec.records; ++i) {
    Rng rng(derive_seed(spec.seed, i + 1));
    auto& r = out.records[i];
    r.example_id = i;
    r.group_id = i;
    r.prompt_text = "planted prompt " + std::to_string(i);
    r.response_token_count = 8 + static_cast<std::uint32_t>(i % 17);
    r.response_text = detail::filler_response(i, r.response_token_count);
    r.truncation_offset = -1;
    r.eos_reached = true;
    r.layers.resize(spec.layers);
    for (std::uint16_t l = 0; l < spec.layers; ++l) r.layers[l] = l;

    double label = 0.0;
    if (spec.kind == SignalKind::kRegression) label = rng.normal();
    if (spec.kind == SignalKind::kClasses) label = static_cast<double>(i % static_cast<std::uint64_t>(spec.num_classes));

    r.activations.resize(spec.layers * d);
    for (auto& x : r.activations) x = static_cast<float>(rng.normal());
    float* planted = r.activations.data() + static_cast<std::size_t>(spec.planted_layer) * d;
    switch (spec.kind) {
      case SignalKind::kRegression:
        for (std::size_t k = 0; k < d; ++k) planted[k] += static_cast<float>(spec.snr * label * directions[0][k]);
        break;
      case SignalKind::kClasses: {
        const auto& m = directions[static_cast<std::size_t>(label)];
        for (std::size_t k = 0; k < d; ++k) planted[k] += static_cast<float>(spec.snr * m[k]);
        break;
      }
      case SignalKind::kXorPair: {
        for (int k = 0; k < 2; ++k) {
          const double sign = rng.below(2) ? 1.0 : -1.0;
          planted[k] = static_cast<float>(sign * spec.snr * (spec.xor_margin + std::abs(rng.normal())));
        }
        label = (planted[0] > 0) == (planted[1] > 0) ? 1.0 : 0.0;
        break;
      }
    }
    out.labels[i] = label;
  }
  return out;
}

/// Truth sidecar in the label-file schema, plus the generating spec.
inline LabelSet planted_labels(const PlantSpec& spec, const PlantedData& data, const std::string& source_path,
                               const std::string& source_sha256) {
  LabelSet s;
  s.task_id = spec.task_id();
  s.kind = spec.kind == SignalKind::kRegression ? TaskKind::kRegression : TaskKind::kClassification;
  s.num_classes = spec.label_classes();
  for (int c = 0; c < s.num_classes; ++c) s.classes.push_back("class" + std::to_string(c));
  s.source_path = source_path;
  s.source_sha256 = source_sha256;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    LabelEntry e;
    e.example_id = r.example_id;
    e.group_id = r.group_id;
    e.record_index = i;
    e.truncation_offset = r.truncation_offset;
    e.response_tokens = r.response_token_count;
    e.value = data.labels[i];
    e.key_token = r.response_token_count;
    s.labels.push_back(e);
  }
  return s;
}

inline std::filesystem::path truth_path_for(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".truth.json");
}

struct PlantResult {
  Manifest manifest;
  LabelSet truth;
};

/// Writes the activation file, its manifest and the truth sidecar.
inline PlantResult generate_planted_dataset(const PlantSpec& spec, const std::filesystem::path& path) {
  const auto data = make_planted(spec);
  WriteOptions options;
  options.exporter_version = std::string(kToolkitVersion) + " synth " + kGeneratorName;
  options.layer_convention = "synthetic";
  auto manifest = write_dataset(data.header, data.records, path, options);
  auto truth = planted_labels(spec, data, path.filename().string(), manifest.sha256);
  nlohmann::json j = truth;
  j["spec"] = spec;
  write_json_file(truth_path_for(path), j);
  return {std::move(manifest), std::move(truth)};
}

}  // namespace planprobe

#endif  // PLANPROBE_SYNTH_HPP
