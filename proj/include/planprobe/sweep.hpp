#ifndef PLANPROBE_SWEEP_HPP
#define PLANPROBE_SWEEP_HPP

// Grid search over (layer, hidden size, seed) cells and the analyses built on
// its result table.
//
// Layers are processed one at a time so only one layer's features are
// resident. Within a layer, cells run on a bounded worker pool; each cell is a
// pure function of its inputs and writes only its own slot, so the table does
// not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "planprobe/activation_store.hpp"
#include "planprobe/config.hpp"
#include "planprobe/dataset_builder.hpp"
#include "planprobe/error.hpp"
#include "planprobe/metrics.hpp"
#include "planprobe/probe.hpp"

namespace planprobe {

// ---------------------------------------------------------------------------
// Worker pool

/// PLANPROBE_WORKERS when set to a positive integer, else the hardware
/// concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("PLANPROBE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    fail(ErrorKind::kUsage, std::string("PLANPROBE_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by a job is rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Features

/// Per-layer feature rows for a list of record indices.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual int layer_count() const = 0;
  virtual int hidden_dim() const = 0;
  virtual FeatureMatrix features(int layer, std::span<const std::uint64_t> records) = 0;
};

/// Reads one layer at a time from an activation file through the layer
/// filter, so other layers' bytes are never read.
class FileFeatureSource final : public FeatureSource {
 public:
  explicit FileFeatureSource(std::filesystem::path path) : path_(std::move(path)) {
    auto reader = read_dataset(path_, ReadOptions{{0}, std::nullopt});
    header_ = reader.header();
  }

  int layer_count() const override { return header_.layer_count; }
  int hidden_dim() const override { return static_cast<int>(header_.hidden_dim); }
  const DatasetHeader& header() const { return header_; }

  FeatureMatrix features(int layer, std::span<const std::uint64_t> records) override {
    if (layer < 0 || layer >= header_.layer_count) {
      fail(ErrorKind::kShape, "layer " + std::to_string(layer) + " outside the file's " +
                                  std::to_string(header_.layer_count) + " layers");
    }
    auto reader = read_dataset(path_, ReadOptions{{static_cast<std::uint16_t>(layer)}, std::nullopt});
    FeatureMatrix m(records.size(), header_.hidden_dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto r = reader.read(records[i]);
      std::copy(r.activations.begin(), r.activations.end(), m.row(i).begin());
    }
    activation_bytes_read_ += reader.activation_bytes_read();
    return m;
  }

  std::uint64_t activation_bytes_read() const { return activation_bytes_read_; }

 private:
  std::filesystem::path path_;
  DatasetHeader header_;
  std::uint64_t activation_bytes_read_ = 0;
};

/// Records already in memory (all layers loaded).
class MemoryFeatureSource final : public FeatureSource {
 public:
  MemoryFeatureSource(const DatasetHeader& header, const std::vector<ActivationRecord>& records)
      : header_(header), records_(&records) {}

  int layer_count() const override { return header_.layer_count; }
  int hidden_dim() const override { return static_cast<int>(header_.hidden_dim); }

  FeatureMatrix features(int layer, std::span<const std::uint64_t> records) override {
    if (layer < 0 || layer >= header_.layer_count) fail(ErrorKind::kShape, "layer out of range");
    FeatureMatrix m(records.size(), header_.hidden_dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records_->at(records[i]);
      const auto row = r.row(static_cast<std::size_t>(layer), header_.hidden_dim);
      std::copy(row.begin(), row.end(), m.row(i).begin());
    }
    return m;
  }

 private:
  DatasetHeader header_;
  const std::vector<ActivationRecord>* records_;
};

/// Record indices, targets and example ids of one split.
struct SplitRows {
  std::vector<std::uint64_t> records;
  std::vector<double> targets;
  std::vector<std::uint64_t> example_ids;

  std::size_t size() const { return records.size(); }
};

struct SplitTable {
  SplitRows train, val, test;
  int num_classes = 0;
};

inline SplitRows rows_of(const BuiltDataset& b, Split s) {
  SplitRows out;
  for (const auto* e : b.in_split(s)) {
    out.records.push_back(e->record_index);
    out.targets.push_back(e->label);
    out.example_ids.push_back(e->example_id);
  }
  return out;
}

inline SplitTable split_table(const BuiltDataset& b) {
  return {rows_of(b, Split::kTrain), rows_of(b, Split::kVal), rows_of(b, Split::kTest),
          b.is_classification() ? b.num_classes : 0};
}

// ---------------------------------------------------------------------------
// Grid search

struct SweepGrid {
  /// Empty means every layer in the file.
  std::vector<int> layers;
  std::vector<int> hidden_sizes{kHiddenSizes.begin(), kHiddenSizes.end()};
  std::vector<std::uint64_t> seeds{0, 1, 2};

  void resolve(int layer_count) {
    if (layers.empty()) {
      for (int l = 0; l < layer_count; ++l) layers.push_back(l);
    }
    check(layer_count);
  }

  void check(int layer_count) const {
    if (layers.empty() || hidden_sizes.empty() || seeds.empty()) {
      fail(ErrorKind::kUsage, "grid layers, hidden sizes and seeds must be nonempty");
    }
    for (int l : layers) {
      if (l < 0 || l >= layer_count) {
        fail(ErrorKind::kUsage, "layer " + std::to_string(l) + " outside [0, " + std::to_string(layer_count - 1) + "]");
      }
    }
    for (int h : hidden_sizes) {
      if (!is_valid_hidden_size(h)) {
        fail(ErrorKind::kUsage, "hidden size " + std::to_string(h) + " is not in W = " + hidden_sizes_text());
      }
    }
    auto distinct = [](auto v) {
      std::sort(v.begin(), v.end());
      return std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    if (!distinct(layers) || !distinct(hidden_sizes) || !distinct(seeds)) {
      fail(ErrorKind::kUsage, "grid layers, hidden sizes and seeds must be distinct");
    }
  }
};

/// Training hyperparameters shared by every cell.
struct TrainSettings {
  int epochs = 400;
  double learning_rate = 1e-3;
  int batch_size = 64;
  bool standardize = true;

  ProbeConfig probe_config(int layer, int hidden, std::uint64_t seed, int num_classes) const {
    ProbeConfig c;
    c.layer = layer;
    c.hidden_size = hidden;
    c.seed = seed;
    c.num_classes = num_classes;
    c.epochs = epochs;
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.standardize = standardize;
    return c;
  }
};

struct CellResult {
  int layer = 0;
  int hidden_size = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  int best_epoch = 0;
  MetricReport validation;
  /// Every reported metric on the test split, selection metric first.
  std::vector<MetricReport> test;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

/// One successful cell's validation score: the only input selection sees.
struct ValidationEntry {
  int layer = 0;
  int hidden_size = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
};

struct BestCell {
  int layer = 0;
  int hidden_size = 0;
  /// Seed-averaged validation metric.
  double validation = 0.0;

  friend bool operator==(const BestCell&, const BestCell&) = default;
};

/// (layer, hidden) maximizing the seed-averaged validation metric; ties go to
/// the smaller hidden size, then the lower layer.
inline std::optional<BestCell> select_best(std::span<const ValidationEntry> table) {
  std::map<std::pair<int, int>, std::pair<double, int>> sums;  // (hidden, layer) -> (sum, count)
  for (const auto& e : table) {
    auto& s = sums[{e.hidden_size, e.layer}];
    s.first += e.value;
    ++s.second;
  }
  std::optional<BestCell> best;
  // Map order is (hidden, layer) ascending, so the first maximum wins ties.
  for (const auto& [key, s] : sums) {
    const double mean = s.first / s.second;
    if (!best || mean > best->validation) best = BestCell{key.second, key.first, mean};
  }
  return best;
}

struct SweepResult {
  std::string task_id;
  std::string model_name;
  std::string metric;
  int num_classes = 0;
  SweepGrid grid;
  TrainSettings settings;
  std::vector<CellResult> cells;
  std::optional<BestCell> best;
  /// Seed-averaged test metrics at the best cell, selection metric first.
  std::vector<MetricReport> best_test;
  /// Best-cell probes, one per seed, retrained after selection.
  std::vector<ProbeModel> best_models;
  std::vector<int> best_epochs;

  std::vector<ValidationEntry> validation_table() const {
    std::vector<ValidationEntry> out;
    for (const auto& c : cells) {
      if (!c.failed) out.push_back({c.layer, c.hidden_size, c.seed, c.validation.value});
    }
    return out;
  }

  const CellResult* cell(int layer, int hidden, std::uint64_t seed) const {
    for (const auto& c : cells) {
      if (c.layer == layer && c.hidden_size == hidden && c.seed == seed) return &c;
    }
    return nullptr;
  }

  std::size_t failed_count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.failed; }));
  }
};

struct SweepOptions {
  int workers = 1;
  /// Retrain the best cell per seed and keep the models.
  bool keep_best_models = true;
};

namespace detail {

struct LayerData {
  ProbeData train, val, test;
};

inline LayerData load_layer(FeatureSource& source, int layer, const SplitTable& splits) {
  LayerData d;
  d.train = {source.features(layer, splits.train.records), splits.train.targets};
  d.val = {source.features(layer, splits.val.records), splits.val.targets};
  d.test = {source.features(layer, splits.test.records), splits.test.targets};
  return d;
}

inline CellResult run_cell(const LayerData& data, const ProbeConfig& config) {
  CellResult cell;
  cell.layer = config.layer;
  cell.hidden_size = config.hidden_size;
  cell.seed = config.seed;
  try {
    const auto trained = train_probe(data.train, data.val, config);
    cell.best_epoch = trained.curve.best_epoch;
    const auto val_pred = predict(trained.model, data.val.features);
    cell.validation = evaluate_selection(val_pred, data.val.targets, config.num_classes);
    const auto test_pred = predict(trained.model, data.test.features);
    cell.test = evaluate_all(test_pred, data.test.targets, config.num_classes);
  } catch (const Error& e) {
    cell.failed = true;
    cell.error = e.what();
    cell.validation = {};
    cell.test.clear();
  }
  return cell;
}

/// Mean of each metric over the given cells, in the cells' metric order.
inline std::vector<MetricReport> average_metrics(const std::vector<const CellResult*>& cells) {
  std::vector<MetricReport> out;
  if (cells.empty()) return out;
  out = cells.front()->test;
  for (auto& m : out) {
    m.value = 0.0;
    m.degenerate = false;
  }
  for (const auto* c : cells) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k].value += c->test[k].value;
      out[k].degenerate = out[k].degenerate || c->test[k].degenerate;
    }
  }
  for (auto& m : out) m.value /= static_cast<double>(cells.size());
  return out;
}

}  // namespace detail

/// Trains every cell of the grid and selects the best (layer, hidden size) on
/// validation alone. Failed cells are reported and excluded from selection.
inline SweepResult grid_search(FeatureSource& source, const SplitTable& splits, SweepGrid grid,
                               const TrainSettings& settings, const SweepOptions& options = {}) {
  grid.resolve(source.layer_count());
  if (splits.train.size() == 0 || splits.val.size() == 0 || splits.test.size() == 0) {
    fail(ErrorKind::kData, "train, val and test splits must all be nonempty");
  }
  SweepResult result;
  result.grid = grid;
  result.settings = settings;
  result.num_classes = splits.num_classes;
  result.metric = selection_metric_name(splits.num_classes > 0);

  const std::size_t per_layer = grid.hidden_sizes.size() * grid.seeds.size();
  result.cells.resize(grid.layers.size() * per_layer);
  // Largest hidden sizes first so the pool's tail is short jobs.
  std::vector<std::size_t> order(per_layer);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return grid.hidden_sizes[a / grid.seeds.size()] > grid.hidden_sizes[b / grid.seeds.size()];
  });
  for (std::size_t li = 0; li < grid.layers.size(); ++li) {
    const int layer = grid.layers[li];
    const auto data = detail::load_layer(source, layer, splits);
    parallel_for(per_layer, options.workers, [&](std::size_t j) {
      const std::size_t k = order[j];
      const int hidden = grid.hidden_sizes[k / grid.seeds.size()];
      const auto seed = grid.seeds[k % grid.seeds.size()];
      result.cells[li * per_layer + k] =
          detail::run_cell(data, settings.probe_config(layer, hidden, seed, splits.num_classes));
    });
  }

  const auto table = result.validation_table();
  result.best = select_best(table);
  if (!result.best) return result;

  std::vector<const CellResult*> best_cells;
  for (auto seed : grid.seeds) {
    const auto* c = result.cell(result.best->layer, result.best->hidden_size, seed);
    if (c && !c->failed) best_cells.push_back(c);
  }
  result.best_test = detail::average_metrics(best_cells);

  if (options.keep_best_models) {
    const auto data = detail::load_layer(source, result.best->layer, splits);
    for (const auto* c : best_cells) {
      const auto trained = train_probe(
          data.train, data.val,
          settings.probe_config(result.best->layer, result.best->hidden_size, c->seed, splits.num_classes));
      result.best_models.push_back(trained.model);
      result.best_epochs.push_back(trained.curve.best_epoch);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Curves

/// (v - min) / (max - min); degenerate (all zeros) when max equals min.
inline std::pair<std::vector<double>, bool> min_max_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return {out, true};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(*hi > *lo)) return {out, true};
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  return {out, false};
}

struct LayerCurve {
  std::vector<int> layers;
  /// Hidden size chosen on validation for each layer.
  std::vector<int> hidden_sizes;
  /// Seed-averaged test selection metric at that hidden size.
  std::vector<double> test;
  std::vector<double> normalized;
  bool degenerate = false;
};

/// Per layer, the hidden size is optimized on validation and the
/// seed-averaged test metric reported. Layers whose cells all failed are
/// omitted.
inline LayerCurve layerwise_curve(const SweepResult& r) {
  LayerCurve curve;
  const auto table = r.validation_table();
  for (int layer : r.grid.layers) {
    std::vector<ValidationEntry> rows;
    for (const auto& e : table) {
      if (e.layer == layer) rows.push_back(e);
    }
    const auto best = select_best(rows);
    if (!best) continue;
    std::vector<const CellResult*> cells;
    for (auto seed : r.grid.seeds) {
      const auto* c = r.cell(layer, best->hidden_size, seed);
      if (c && !c->failed) cells.push_back(c);
    }
    curve.layers.push_back(layer);
    curve.hidden_sizes.push_back(best->hidden_size);
    curve.test.push_back(detail::average_metrics(cells).front().value);
  }
  std::tie(curve.normalized, curve.degenerate) = min_max_normalize(curve.test);
  return curve;
}

struct HiddenSizeCurve {
  std::vector<int> hidden_sizes;
  /// Test selection metric averaged over layers and seeds.
  std::vector<double> value;
};

/// Averages over `layers`, or over every swept layer when empty. Hidden
/// sizes with no successful cell are left out.
inline HiddenSizeCurve hidden_size_curve(const SweepResult& r, std::span<const int> layers = {}) {
  HiddenSizeCurve curve;
  auto wanted = [&](int layer) { return layers.empty() || std::find(layers.begin(), layers.end(), layer) != layers.end(); };
  for (int h : r.grid.hidden_sizes) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : r.cells) {
      if (c.hidden_size == h && !c.failed && wanted(c.layer)) {
        sum += c.test.front().value;
        ++n;
      }
    }
    if (n == 0) continue;
    curve.hidden_sizes.push_back(h);
    curve.value.push_back(sum / static_cast<double>(n));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Applying trained probes elsewhere

/// Trained best-cell probes with what is needed to apply them.
struct ProbeBundle {
  int layer = 0;
  int num_classes = 0;
  std::vector<ProbeModel> models;
};

inline void check_compatible(const ProbeBundle& bundle, const FeatureSource& target, int target_classes) {
  if (bundle.models.empty()) fail(ErrorKind::kCompatibility, "no trained probes to apply");
  const auto& m = bundle.models.front();
  if (m.input_dim != target.hidden_dim()) {
    fail(ErrorKind::kCompatibility, "probes expect hidden dimension " + std::to_string(m.input_dim) +
                                        " but the target has " + std::to_string(target.hidden_dim()));
  }
  if (bundle.layer >= target.layer_count()) {
    fail(ErrorKind::kCompatibility, "probe layer " + std::to_string(bundle.layer) + " does not exist in a target with " +
                                        std::to_string(target.layer_count()) + " layers");
  }
  if (bundle.num_classes != target_classes) {
    fail(ErrorKind::kCompatibility, "probe task has " + std::to_string(bundle.num_classes) +
                                        " classes but the target task has " + std::to_string(target_classes));
  }
}

/// Seed-averaged metrics of the source probes on the target rows. The
/// source's standardizer is applied; nothing is fit on the target.
inline std::vector<MetricReport> cross_dataset_eval(const ProbeBundle& bundle, FeatureSource& target,
                                                    const SplitRows& rows, int target_classes) {
  check_compatible(bundle, target, target_classes);
  if (rows.size() == 0) fail(ErrorKind::kData, "target has no labeled records");
  const auto features = target.features(bundle.layer, rows.records);
  std::vector<CellResult> per_seed;
  for (const auto& m : bundle.models) {
    CellResult c;
    c.test = evaluate_all(predict(m, features), rows.targets, bundle.num_classes);
    per_seed.push_back(std::move(c));
  }
  std::vector<const CellResult*> ptrs;
  for (const auto& c : per_seed) ptrs.push_back(&c);
  return detail::average_metrics(ptrs);
}

struct PositionedExample {
  std::uint64_t record_index = 0;
  std::int64_t offset = 0;
  std::int64_t usable_length = 0;
  double target = 0.0;
};

/// Segment of a generation position: floor(segments * offset / usable),
/// clamped to [0, segments - 1].
inline int segment_of(std::int64_t offset, std::int64_t usable_length, int segments) {
  if (usable_length <= 0) return segments - 1;
  const auto s = static_cast<std::int64_t>(
      std::floor(static_cast<double>(segments) * static_cast<double>(offset) / static_cast<double>(usable_length)));
  return static_cast<int>(std::clamp<std::int64_t>(s, 0, segments - 1));
}

inline constexpr std::size_t kLowSegmentCount = 30;

struct SegmentResult {
  int segment = 0;
  std::size_t n = 0;
  MetricReport metric;
  bool low_n = false;
};

/// Applies one probe at every position and scores each segment separately.
inline std::vector<SegmentResult> dynamics_eval(const ProbeModel& model, int layer, int num_classes,
                                                FeatureSource& source, std::span<const PositionedExample> examples,
                                                int segments = 10) {
  if (segments < 1) fail(ErrorKind::kUsage, "segment count must be positive");
  if (examples.empty()) fail(ErrorKind::kData, "no positioned records to evaluate");
  if (model.input_dim != source.hidden_dim()) {
    fail(ErrorKind::kCompatibility, "probe expects hidden dimension " + std::to_string(model.input_dim) +
                                        " but the data has " + std::to_string(source.hidden_dim()));
  }
  std::vector<std::uint64_t> records;
  for (const auto& e : examples) records.push_back(e.record_index);
  const auto pred = predict(model, source.features(layer, records));
  std::vector<std::vector<double>> p(static_cast<std::size_t>(segments)), t(p.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto s = static_cast<std::size_t>(segment_of(examples[i].offset, examples[i].usable_length, segments));
    p[s].push_back(pred[i]);
    t[s].push_back(examples[i].target);
  }
  std::vector<SegmentResult> out;
  for (int s = 0; s < segments; ++s) {
    const auto& ps = p[static_cast<std::size_t>(s)];
    const auto& ts = t[static_cast<std::size_t>(s)];
    SegmentResult r;
    r.segment = s;
    r.n = ps.size();
    r.low_n = r.n < kLowSegmentCount;
    const std::size_t needed = num_classes > 0 ? 1 : 2;
    if (r.n >= needed) {
      r.metric = evaluate_selection(ps, ts, num_classes);
    } else {
      r.metric = {selection_metric_name(num_classes > 0), 0.0, true, r.n};
    }
    out.push_back(r);
  }
  return out;
}

struct SelfEstimateReport {
  MetricReport probe;
  MetricReport verbalized;
  /// probe - verbalized.
  double gap = 0.0;
  std::size_t compared = 0;
  /// Examples whose estimate text yielded no usable number.
  std::size_t unparseable = 0;
  /// Labeled examples with no estimate at all.
  std::size_t missing = 0;
};

/// Scores probe predictions and verbalized estimates against the same truth
/// on the examples where both exist.
inline SelfEstimateReport self_estimate_compare(const std::map<std::uint64_t, double>& truth,
                                                const std::map<std::uint64_t, double>& probe,
                                                const std::map<std::uint64_t, std::string>& estimates,
                                                int num_classes) {
  SelfEstimateReport r;
  std::vector<double> t, p, v;
  for (const auto& [id, value] : truth) {
    const auto pit = probe.find(id);
    const auto eit = estimates.find(id);
    if (eit == estimates.end()) {
      ++r.missing;
      continue;
    }
    const auto parsed = parse_verbalized_estimate(eit->second);
    if (!parsed || (num_classes > 0 && (*parsed < 0 || *parsed >= num_classes))) {
      ++r.unparseable;
      continue;
    }
    if (pit == probe.end()) continue;
    t.push_back(value);
    p.push_back(pit->second);
    v.push_back(static_cast<double>(*parsed));
  }
  if (t.empty()) fail(ErrorKind::kData, "no example has both a probe prediction and a parseable estimate");
  r.compared = t.size();
  r.probe = evaluate_selection(p, t, num_classes);
  r.verbalized = evaluate_selection(v, t, num_classes);
  r.gap = r.probe.value - r.verbalized.value;
  return r;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  /// Activation file.
  std::filesystem::path activations;
  /// Built dataset manifest; when absent, `labels` is split on the fly.
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> labels;
  BuildOptions build;
  SweepGrid grid;
  TrainSettings train;
  std::string model_name;
  std::string config_hash;
};

inline RunConfig run_config_from(const Config& c, const std::filesystem::path& base_dir) {
  c.require_known({"data.activations", "data.dataset", "data.labels", "data.model", "grid.layers",
                   "grid.hidden_sizes", "grid.seeds", "train.epochs", "train.learning_rate", "train.batch_size",
                   "train.standardize", "split.train", "split.val", "split.test", "split.seed", "build.min_tokens",
                   "build.balance", "build.equalize_groups"});
  RunConfig r;
  auto path = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    if (!c.has(key)) return std::nullopt;
    std::filesystem::path p(c.get_string(key));
    return p.is_absolute() ? p : base_dir / p;
  };
  const auto act = path("data.activations");
  if (!act) fail(ErrorKind::kConfig, c.origin() + ": data.activations is required");
  r.activations = *act;
  r.dataset = path("data.dataset");
  r.labels = path("data.labels");
  if (!r.dataset && !r.labels) fail(ErrorKind::kConfig, c.origin() + ": one of data.dataset or data.labels is required");
  r.model_name = c.get_string("data.model", "");
  r.build = build_options_from(c);
  if (auto v = c.get_int_list("grid.layers")) r.grid.layers.assign(v->begin(), v->end());
  if (auto v = c.get_int_list("grid.hidden_sizes")) r.grid.hidden_sizes.assign(v->begin(), v->end());
  if (auto v = c.get_int_list("grid.seeds")) {
    r.grid.seeds.clear();
    for (auto s : *v) r.grid.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  r.train.epochs = static_cast<int>(c.get_int("train.epochs", r.train.epochs));
  r.train.learning_rate = c.get_double("train.learning_rate", r.train.learning_rate);
  r.train.batch_size = static_cast<int>(c.get_int("train.batch_size", r.train.batch_size));
  r.train.standardize = c.get_bool("train.standardize", r.train.standardize);
  r.config_hash = c.hash();
  return r;
}

}  // namespace planprobe

#endif  // PLANPROBE_SWEEP_HPP
