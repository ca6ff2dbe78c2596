// planprobe command-line tool. Exit status: 0 success, 1 findings, 2 fatal.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "planprobe/planprobe.hpp"
#include "planprobe/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace planprobe;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kFatal = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void require_file(const fs::path& p, const std::string& flag) {
  if (!fs::exists(p)) fail(ErrorKind::kUsage, flag + ": file not found: " + p.string());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + p.string());
  out << text;
}

fs::path sidecar_manifest(const fs::path& output) { return fs::path(output.string() + ".run_manifest.json"); }

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto t = std::string(detail::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<long long> parse_int_list(const std::string& s, const std::string& flag) {
  std::vector<long long> out;
  for (const auto& item : split_csv(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::kUsage, flag + ": expected comma-separated integers, got '" + s + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::kUsage, flag + ": list is empty");
  return out;
}

/// Labeled rows of a target file: either every labeled record of a label
/// file, or one split of a built dataset.
SplitRows target_rows(const std::string& labels_path, const std::string& dataset_path, const std::string& split,
                      int* num_classes) {
  SplitRows rows;
  if (!dataset_path.empty()) {
    require_file(dataset_path, "--dataset");
    const auto built = load_built_dataset(dataset_path);
    *num_classes = built.is_classification() ? built.num_classes : 0;
    for (const auto& e : built.examples) {
      if (split != "all" && split_name(e.split) != split) continue;
      rows.records.push_back(e.record_index);
      rows.targets.push_back(e.label);
      rows.example_ids.push_back(e.example_id);
    }
    return rows;
  }
  require_file(labels_path, "--labels");
  const auto labels = load_labels(labels_path);
  *num_classes = labels.is_classification() ? labels.num_classes : 0;
  for (const auto& l : labels.labels) {
    if (!l.value) continue;
    rows.records.push_back(l.record_index);
    rows.targets.push_back(*l.value);
    rows.example_ids.push_back(l.example_id);
  }
  return rows;
}

struct SourceProbes {
  ProbeBundle bundle;
  std::vector<ProbeMetadata> metadata;
};

SourceProbes load_source_probes(const fs::path& results) {
  require_file(results / "result.json", "--source");
  const auto j = read_json_file(results / "result.json");
  if (j.at("best_cell").is_null()) fail(ErrorKind::kData, "source sweep has no best cell (every cell failed)");
  SourceProbes s;
  s.bundle.layer = j.at("best_cell").at("layer").get<int>();
  s.bundle.num_classes = j.at("num_classes").get<int>();
  for (auto seed : j.at("grid").at("seeds").get<std::vector<std::uint64_t>>()) {
    const auto path = results / ("probe_seed" + std::to_string(seed) + ".bin");
    if (!fs::exists(path)) continue;
    auto [model, meta] = load_probe(path);
    s.bundle.models.push_back(std::move(model));
    s.metadata.push_back(std::move(meta));
  }
  if (s.bundle.models.empty()) fail(ErrorKind::kData, "no probe_seed*.bin files in " + results.string());
  return s;
}

nlohmann::json metrics_json(const std::vector<MetricReport>& ms) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& m : ms) a.push_back(metric_json(m));
  return a;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planprobe: probe activation datasets for planning signals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check an activation file for structural and value problems");
  std::string validate_file;
  bool validate_json = false;
  validate_cmd->add_option("file", validate_file, "activation file")->required();
  validate_cmd->add_flag("--json", validate_json, "print the report as JSON");

  // label
  auto* label_cmd = app.add_subcommand("label", "label every record of an activation file for one task");
  std::string label_task, label_in, label_patterns, label_out, label_classes, label_length_mode = "remaining";
  int label_augments = 3;
  long long label_margin = 3;
  std::uint64_t label_seed = 0;
  label_cmd->add_option("--task", label_task, "task id")->required();
  label_cmd->add_option("--in", label_in, "activation file")->required();
  label_cmd->add_option("--patterns", label_patterns, "directory with pattern and lexicon files");
  label_cmd->add_option("--out", label_out, "labels JSON to write")->required();
  label_cmd->add_option("--classes", label_classes, "comma-separated character-choice classes");
  label_cmd->add_option("--length-mode", label_length_mode, "remaining or total")
      ->check(CLI::IsMember({"remaining", "total"}));
  label_cmd->add_option("--augments", label_augments, "truncation offsets suggested per response");
  label_cmd->add_option("--margin", label_margin, "tokens kept clear before the key position");
  label_cmd->add_option("--seed", label_seed, "augmentation seed");

  // build
  auto* build_cmd = app.add_subcommand("build", "filter, balance and split a labeled dataset");
  std::string build_labels, build_spec, build_out;
  build_cmd->add_option("--labels", build_labels, "labels JSON")->required();
  build_cmd->add_option("--spec", build_spec, "split/build config file")->required();
  build_cmd->add_option("--out", build_out, "dataset manifest to write")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "grid search over layers, hidden sizes and seeds");
  std::string sweep_config, sweep_out, sweep_hidden, sweep_layers, sweep_seeds;
  sweep_cmd->add_option("--config", sweep_config, "run config file")->required();
  sweep_cmd->add_option("--out", sweep_out, "results directory")->required();
  sweep_cmd->add_option("--hidden-sizes", sweep_hidden, "comma-separated hidden sizes (override)");
  sweep_cmd->add_option("--layers", sweep_layers, "comma-separated layers (override)");
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds (override)");

  // cross
  auto* cross_cmd = app.add_subcommand("cross", "apply a sweep's best probes to another dataset");
  std::string cross_source, cross_target, cross_labels, cross_dataset, cross_split = "all", cross_out;
  cross_cmd->add_option("--source", cross_source, "results directory of the source sweep")->required();
  cross_cmd->add_option("--target", cross_target, "target activation file")->required();
  auto* cross_labels_opt = cross_cmd->add_option("--labels", cross_labels, "target labels JSON");
  auto* cross_dataset_opt = cross_cmd->add_option("--dataset", cross_dataset, "target dataset manifest");
  cross_labels_opt->excludes(cross_dataset_opt);
  cross_cmd->add_option("--split", cross_split, "split of --dataset to evaluate")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  cross_cmd->add_option("--out", cross_out, "JSON report path (default stdout)");

  // dynamics
  auto* dyn_cmd = app.add_subcommand("dynamics", "score a probe per generation-position segment");
  std::string dyn_probe, dyn_target, dyn_labels, dyn_out;
  int dyn_segments = 10;
  dyn_cmd->add_option("--probe", dyn_probe, "probe model file")->required();
  dyn_cmd->add_option("--segments", dyn_segments, "segment count")->check(CLI::PositiveNumber);
  dyn_cmd->add_option("--target", dyn_target, "activation file with truncated records")->required();
  dyn_cmd->add_option("--labels", dyn_labels, "labels JSON for the target")->required();
  dyn_cmd->add_option("--out", dyn_out, "JSON report path (default stdout)");

  // selfcompare
  auto* self_cmd = app.add_subcommand("selfcompare", "compare probe predictions with verbalized self-estimates");
  std::string self_probe, self_target, self_labels, self_estimates, self_out;
  self_cmd->add_option("--probe", self_probe, "probe model file")->required();
  self_cmd->add_option("--target", self_target, "activation file")->required();
  self_cmd->add_option("--labels", self_labels, "labels JSON")->required();
  self_cmd->add_option("--estimates", self_estimates, "JSON array of {example_id, text}")->required();
  self_cmd->add_option("--out", self_out, "JSON report path (default stdout)");

  // selfcheck
  auto* check_cmd = app.add_subcommand("selfcheck", "gradient check and metric oracle equivalence");

  // plant
  auto* plant_cmd = app.add_subcommand("plant", "generate a planted-signal dataset");
  std::string plant_spec_path, plant_out;
  plant_cmd->add_option("--spec", plant_spec_path, "plant config file")->required();
  plant_cmd->add_option("--out", plant_out, "activation file to write")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "render sweep results");
  std::vector<std::string> report_results;
  std::string report_format, report_out, report_scale = "raw";
  report_cmd->add_option("--results", report_results, "results directory (repeatable)")->required();
  report_cmd->add_option("--format", report_format, "csv, json or svg")
      ->required()
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  report_cmd->add_option("--scale", report_scale, "heatmap colors from raw or row-normalized values")
      ->check(CLI::IsMember({"raw", "row"}));
  report_cmd->add_option("--out", report_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kFatal;
  }

  const auto t0 = Clock::now();
  const auto cmdline = command_line(argc, argv);
  try {
    if (*validate_cmd) {
      require_file(validate_file, "file");
      const auto report = validate(validate_file);
      if (validate_json) {
        std::cout << to_json(report).dump(2) << "\n";
      } else {
        for (const auto& f : report.findings) {
          std::cout << (f.severity == Severity::kFatal ? "fatal" : "warning");
          if (f.example_id) std::cout << " example " << *f.example_id;
          if (f.byte_offset) std::cout << " at byte " << *f.byte_offset;
          std::cout << ": " << f.message << "\n";
        }
        if (report.findings.empty()) std::cout << "clean\n";
      }
      return static_cast<int>(report.status());
    }

    if (*label_cmd) {
      require_file(label_in, "--in");
      const auto task = parse_task(label_task);
      if (!task) {
        std::string names;
        for (auto t : kAllTasks) names += (names.empty() ? "" : ", ") + std::string(task_name(t));
        fail(ErrorKind::kUsage, "--task: unknown task '" + label_task + "' (one of " + names + ")");
      }
      LabelingParams params;
      params.length_mode = label_length_mode == "total" ? LengthMode::kTotal : LengthMode::kRemaining;
      LabelingOptions options;
      options.task = TaskDefinition::make(*task, params);
      if (!label_patterns.empty()) {
        if (!fs::is_directory(label_patterns)) fail(ErrorKind::kUsage, "--patterns: not a directory: " + label_patterns);
        options.pattern_dir = label_patterns;
      }
      options.classes = split_csv(label_classes);
      options.augment = {label_augments, label_margin, label_seed};
      const auto labels = label_dataset(label_in, options);
      save_labels(label_out, labels);
      std::map<std::string, std::size_t> excluded;
      std::size_t kept = 0;
      for (const auto& l : labels.labels) {
        if (l.excluded) {
          ++excluded[std::string(reason_name(*l.excluded))];
        } else {
          ++kept;
        }
      }
      std::cout << "labeled " << kept << " of " << labels.labels.size() << " records";
      for (const auto& [r, n] : excluded) std::cout << ", " << r << " " << n;
      std::cout << "\n";
      RunManifest m;
      m.command = cmdline;
      m.input_hashes = {{"activations", labels.source_sha256}};
      m.seeds = {label_seed};
      m.config_hash = sha256_hex(nlohmann::json(labels.pattern_hashes).dump());
      m.elapsed_seconds = seconds_since(t0);
      m.outputs = {label_out};
      write_json_file(sidecar_manifest(label_out), m);
      return kOk;
    }

    if (*build_cmd) {
      require_file(build_labels, "--labels");
      require_file(build_spec, "--spec");
      const auto config = Config::load(build_spec);
      config.require_known({"split.train", "split.val", "split.test", "split.seed", "build.min_tokens", "build.balance",
                            "build.equalize_groups"});
      const auto options = build_options_from(config);
      const auto labels = load_labels(build_labels);
      auto built = build_dataset(labels, options);
      built.labels_file = fs::path(build_labels).filename().string();
      built.config_hash = config.hash();
      // The activation file path is recorded relative to the label file.
      if (!labels.source_path.empty()) {
        const auto act = resolve_near(build_labels, labels.source_path);
        const auto out_dir = fs::absolute(build_out).parent_path();
        built.activation_file = fs::relative(fs::absolute(act), out_dir).string();
      }
      save_built_dataset(build_out, built);
      const auto& d = built.drops;
      std::cout << "kept " << d.kept << " of " << d.input << " (excluded " << d.excluded << ", too_short " << d.too_short
                << ", balanced_out " << d.balanced_out << ", equalized_out " << d.equalized_out << ")\n";
      RunManifest m;
      m.command = cmdline;
      m.config_hash = built.config_hash;
      m.input_hashes = {{"labels", sha256_file(build_labels)}};
      m.seeds = {options.split.seed};
      m.elapsed_seconds = seconds_since(t0);
      m.outputs = {build_out};
      write_json_file(sidecar_manifest(build_out), m);
      return kOk;
    }

    if (*sweep_cmd) {
      require_file(sweep_config, "--config");
      const auto config = Config::load(sweep_config);
      auto run = run_config_from(config, fs::path(sweep_config).parent_path());
      if (!sweep_hidden.empty()) {
        run.grid.hidden_sizes.clear();
        for (auto h : parse_int_list(sweep_hidden, "--hidden-sizes")) run.grid.hidden_sizes.push_back(static_cast<int>(h));
      }
      for (int h : run.grid.hidden_sizes) {
        if (!is_valid_hidden_size(h)) {
          fail(ErrorKind::kUsage, "--hidden-sizes: " + std::to_string(h) + " is not in W = " + hidden_sizes_text());
        }
      }
      if (!sweep_layers.empty()) {
        run.grid.layers.clear();
        for (auto l : parse_int_list(sweep_layers, "--layers")) run.grid.layers.push_back(static_cast<int>(l));
      }
      if (!sweep_seeds.empty()) {
        run.grid.seeds.clear();
        for (auto s : parse_int_list(sweep_seeds, "--seeds")) run.grid.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      require_file(run.activations, "data.activations");
      BuiltDataset built;
      std::map<std::string, std::string> hashes;
      hashes["activations"] = sha256_file(run.activations);
      if (run.dataset) {
        require_file(*run.dataset, "data.dataset");
        built = load_built_dataset(*run.dataset);
        hashes["dataset"] = sha256_file(*run.dataset);
      } else {
        require_file(*run.labels, "data.labels");
        built = build_dataset(load_labels(*run.labels), run.build);
        hashes["labels"] = sha256_file(*run.labels);
      }
      if (!built.activation_sha256.empty() && built.activation_sha256 != hashes["activations"]) {
        fail(ErrorKind::kIntegrity, "labels were made from an activation file with SHA-256 " + built.activation_sha256 +
                                        ", but " + run.activations.string() + " has " + hashes["activations"]);
      }
      FileFeatureSource source(run.activations);
      auto result = grid_search(source, split_table(built), run.grid, run.train, {worker_count(), true});
      result.task_id = built.task_id;
      result.model_name = run.model_name.empty() ? source.header().model_name : run.model_name;

      const fs::path out(sweep_out);
      fs::create_directories(out);
      std::vector<std::string> outputs;
      write_text(out / "cells.csv", cells_csv(result));
      outputs.push_back("cells.csv");
      write_json_file(out / "result.json", result_json(result, run.config_hash, hashes));
      outputs.push_back("result.json");
      if (result.best) {
        const auto splits = split_table(built);
        const auto test_features = source.features(result.best->layer, splits.test.records);
        std::string preds = "seed,example_id,prediction,truth\n";
        for (std::size_t i = 0; i < result.best_models.size(); ++i) {
          const auto seed = result.grid.seeds[i];
          ProbeMetadata meta;
          meta.config = run.train.probe_config(result.best->layer, result.best->hidden_size, seed, result.num_classes);
          meta.best_epoch = result.best_epochs[i];
          meta.task_id = result.task_id;
          meta.data_hashes = hashes;
          const auto name = "probe_seed" + std::to_string(seed) + ".bin";
          save_probe(out / name, result.best_models[i], meta);
          outputs.push_back(name);
          outputs.push_back(name + ".json");
          const auto p = predict(result.best_models[i], test_features);
          for (std::size_t k = 0; k < p.size(); ++k) {
            preds += std::to_string(seed) + ',' + std::to_string(splits.test.example_ids[k]) + ',' +
                     format_number(p[k]) + ',' + format_number(splits.test.targets[k]) + '\n';
          }
        }
        write_text(out / "predictions.csv", preds);
        outputs.push_back("predictions.csv");
      }
      RunManifest m;
      m.command = cmdline;
      m.config_hash = run.config_hash;
      m.input_hashes = hashes;
      m.seeds = run.grid.seeds;
      m.elapsed_seconds = seconds_since(t0);
      m.outputs = outputs;
      write_run_manifest(out, m);
      if (!result.best) {
        std::cerr << "fatal: every cell failed\n";
        return kFatal;
      }
      std::cout << "best cell: layer " << result.best->layer << ", hidden " << result.best->hidden_size << ", val "
                << result.metric << " " << format_number(result.best->validation) << ", test "
                << format_number(result.best_test.front().value) << "\n";
      if (result.failed_count()) std::cout << result.failed_count() << " cells failed (see result.json)\n";
      return kOk;
    }

    if (*cross_cmd) {
      const auto source = load_source_probes(cross_source);
      require_file(cross_target, "--target");
      if (cross_labels.empty() && cross_dataset.empty()) fail(ErrorKind::kUsage, "cross needs --labels or --dataset");
      int classes = 0;
      const auto rows = target_rows(cross_labels, cross_dataset, cross_split, &classes);
      FileFeatureSource target(cross_target);
      const auto metrics = cross_dataset_eval(source.bundle, target, rows, classes);
      nlohmann::json j{{"source", cross_source},
                       {"target", cross_target},
                       {"target_sha256", sha256_file(cross_target)},
                       {"layer", source.bundle.layer},
                       {"n", rows.size()},
                       {"metrics", metrics_json(metrics)}};
      emit(cross_out, j.dump(2) + "\n");
      return kOk;
    }

    if (*dyn_cmd) {
      require_file(dyn_probe, "--probe");
      require_file(dyn_target, "--target");
      require_file(dyn_labels, "--labels");
      const auto [model, meta] = load_probe(dyn_probe);
      const auto labels = load_labels(dyn_labels);
      std::vector<PositionedExample> examples;
      for (const auto& l : labels.labels) {
        if (!l.value || l.truncation_offset < 0) continue;
        examples.push_back({l.record_index, l.truncation_offset, l.key_token.value_or(l.response_tokens), *l.value});
      }
      FileFeatureSource source(dyn_target);
      const auto segments =
          dynamics_eval(model, meta.config.layer, model.num_classes, source, examples, dyn_segments);
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& s : segments) {
        rows.push_back({{"segment", s.segment}, {"n", s.n}, {"metric", metric_json(s.metric)}, {"low_n", s.low_n}});
      }
      emit(dyn_out, nlohmann::json{{"probe", dyn_probe}, {"segments", rows}}.dump(2) + "\n");
      return kOk;
    }

    if (*self_cmd) {
      require_file(self_probe, "--probe");
      require_file(self_target, "--target");
      require_file(self_labels, "--labels");
      require_file(self_estimates, "--estimates");
      const auto [model, meta] = load_probe(self_probe);
      const auto labels = load_labels(self_labels);
      SplitRows rows;
      std::map<std::uint64_t, double> truth, probe;
      for (const auto& l : labels.labels) {
        if (!l.value) continue;
        rows.records.push_back(l.record_index);
        rows.example_ids.push_back(l.example_id);
        truth[l.example_id] = *l.value;
      }
      FileFeatureSource source(self_target);
      const auto pred = predict(model, source.features(meta.config.layer, rows.records));
      for (std::size_t i = 0; i < pred.size(); ++i) probe[rows.example_ids[i]] = pred[i];
      std::map<std::uint64_t, std::string> estimates;
      for (const auto& e : read_json_file(self_estimates)) {
        estimates[e.at("example_id").get<std::uint64_t>()] = e.at("text").get<std::string>();
      }
      const auto r = self_estimate_compare(truth, probe, estimates, model.num_classes);
      nlohmann::json j{{"probe", metric_json(r.probe)},   {"verbalized", metric_json(r.verbalized)},
                       {"gap", r.gap},                    {"compared", r.compared},
                       {"unparseable", r.unparseable},    {"missing", r.missing}};
      emit(self_out, j.dump(2) + "\n");
      return kOk;
    }

    if (*check_cmd) {
      bool ok = true;
      const auto eq = oracle_equivalence(1000, 0);
      const bool eq_ok = eq.max_abs_diff <= 1e-9;
      ok = ok && eq_ok;
      std::printf("%s metric oracle equivalence: %zu cases, max |diff| %.3g%s%s\n", eq_ok ? "PASS" : "FAIL", eq.cases,
                  eq.max_abs_diff, eq.worst.empty() ? "" : " at ", eq.worst.c_str());
      for (const auto& row : gradient_suite()) {
        const bool row_ok = row.result.max_relative_error <= 1e-4 && row.result.checked > 0;
        ok = ok && row_ok;
        std::printf("%s gradient check hidden %d %s: max relative error %.3g over %zu parameters (%zu at kinks)\n",
                    row_ok ? "PASS" : "FAIL", row.hidden_size,
                    row.num_classes ? "5-class" : "regression", row.result.max_relative_error, row.result.checked,
                    row.result.skipped_at_kink);
      }
      return ok ? kOk : kFindings;
    }

    if (*plant_cmd) {
      require_file(plant_spec_path, "--spec");
      const auto config = Config::load(plant_spec_path);
      config.require_known({"plant.layers", "plant.hidden_dim", "plant.records", "plant.planted_layer", "plant.kind",
                            "plant.num_classes", "plant.snr", "plant.xor_margin", "plant.seed", "plant.model_name"});
      const auto spec = plant_spec_from(config);
      if (const auto dir = fs::path(plant_out).parent_path(); !dir.empty()) fs::create_directories(dir);
      const auto result = generate_planted_dataset(spec, plant_out);
      std::cout << "wrote " << plant_out << " (" << spec.records << " records, " << spec.layers << " layers, d "
                << spec.hidden_dim << ", planted layer " << spec.planted_layer << ")\n";
      RunManifest m;
      m.command = cmdline;
      m.config_hash = config.hash();
      m.seeds = {spec.seed};
      m.elapsed_seconds = seconds_since(t0);
      m.outputs = {plant_out, manifest_path_for(plant_out).string(), truth_path_for(plant_out).string()};
      write_json_file(sidecar_manifest(plant_out), m);
      return kOk;
    }

    if (*report_cmd) {
      std::vector<SweepResult> results;
      for (const auto& dir : report_results) {
        require_file(fs::path(dir) / "result.json", "--results");
        results.push_back(sweep_result_from_json(read_json_file(fs::path(dir) / "result.json")));
      }
      if (report_format == "csv") {
        std::string text;
        for (std::size_t i = 0; i < results.size(); ++i) {
          auto csv = cells_csv(results[i]);
          if (i) csv = csv.substr(csv.find('\n') + 1);
          text += csv;
        }
        emit(report_out, text);
      } else if (report_format == "json") {
        nlohmann::json all = nlohmann::json::array();
        for (std::size_t i = 0; i < results.size(); ++i) {
          all.push_back(read_json_file(fs::path(report_results[i]) / "result.json"));
        }
        emit(report_out, (results.size() == 1 ? all.front() : all).dump(2) + "\n");
      } else {
        const auto table = layer_heatmap(results);
        emit(report_out, emit_heatmap(table, report_scale == "row" ? HeatmapScale::kRow : HeatmapScale::kRaw));
      }
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
