// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "../common/corpus.hpp"
#include "../common/fuzz.hpp"
#include "planprobe/planprobe.hpp"
#include "planprobe/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace planprobe;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void progress(const std::string& s) {
  std::fprintf(stderr, "  %s\n", s.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------------------

void metric_oracle_equivalence() {
  const auto t0 = Clock::now();
  const auto r = oracle_equivalence(1000, 0);
  const double secs = seconds_since(t0);
  verdict("metric oracle equivalence", r.cases == 1000 && r.max_abs_diff <= 1e-9 && secs < 10.0,
          std::to_string(r.cases) + " cases, max |fast - oracle| = " + fmt("%.3g", r.max_abs_diff) +
              (r.worst.empty() ? "" : " (" + r.worst + ")") + ", " + fmt("%.2f", secs) + " s (limit 1e-9, 10 s)");
}

void gradient_correctness() {
  const auto t0 = Clock::now();
  const auto rows = gradient_suite({1, 16, 1024}, 0);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string where;
  for (const auto& row : rows) {
    progress("gradient hidden " + std::to_string(row.hidden_size) + " classes " + std::to_string(row.num_classes) +
             ": max rel err " + fmt("%.3g", row.result.max_relative_error));
    if (!(row.result.max_relative_error <= worst)) {
      worst = row.result.max_relative_error;
      where = "hidden " + std::to_string(row.hidden_size) + (row.num_classes ? ", 5-class" : ", regression");
    }
  }
  verdict("gradient correctness", rows.size() == 6 && worst <= 1e-4 && secs < 30.0,
          std::to_string(rows.size()) + " checks, max relative error " + fmt("%.3g", worst) +
              (where.empty() ? "" : " at " + where) + ", " + fmt("%.2f", secs) + " s (limit 1e-4, 30 s)");
}

// ---------------------------------------------------------------------------
// Planted-signal runs

PlantSpec planted_spec(SignalKind kind, std::uint64_t seed) {
  PlantSpec s;
  s.kind = kind;
  s.layers = 8;
  s.hidden_dim = 64;
  s.records = 2000;
  s.planted_layer = 5;
  s.snr = 5.0;
  s.seed = seed;
  return s;
}

SweepResult planted_sweep(const PlantSpec& spec, const SweepGrid& grid, bool shuffle_labels = false) {
  const auto data = make_planted(spec);
  auto labels = planted_labels(spec, data, "planted", "");
  if (shuffle_labels) {
    std::vector<std::optional<double>> values;
    for (const auto& l : labels.labels) values.push_back(l.value);
    Rng rng(derive_seed(spec.seed, 77));
    rng.shuffle(std::span<std::optional<double>>(values));
    for (std::size_t i = 0; i < values.size(); ++i) labels.labels[i].value = values[i];
  }
  BuildOptions o;
  o.split.seed = spec.seed;
  const auto built = build_dataset(labels, o);
  MemoryFeatureSource source(data.header, data.records);
  return grid_search(source, split_table(built), grid, TrainSettings{}, {worker_count(), false});
}

void planted_layer_recovery_and_plateau() {
  constexpr int kRuns = 30;
  constexpr int kPlanted = 5;
  int recovered = 0;
  double worst_noise = 0.0;
  double full_seconds = 0.0;
  double min_planted_test = 1.0;
  SweepResult full;
  for (int run = 0; run < kRuns; ++run) {
    SweepGrid grid;
    // Run 0 sweeps every hidden size in W; the repetitions use {4, 16}.
    if (run > 0) grid.hidden_sizes = {4, 16};
    const auto t0 = Clock::now();
    auto r = planted_sweep(planted_spec(SignalKind::kRegression, static_cast<std::uint64_t>(run)), grid);
    const double secs = seconds_since(t0);
    if (run == 0) full_seconds = secs;
    const bool selected = r.best && r.best->layer == kPlanted;
    const double test = r.best_test.empty() ? 0.0 : r.best_test.front().value;
    if (selected && test >= 0.95) ++recovered;
    if (selected) min_planted_test = std::min(min_planted_test, test);
    const auto curve = layerwise_curve(r);
    double noise = 0.0;
    for (std::size_t i = 0; i < curve.layers.size(); ++i) {
      if (curve.layers[i] != kPlanted) noise = std::max(noise, std::abs(curve.test[i]));
    }
    worst_noise = std::max(worst_noise, noise);
    progress("recovery run " + std::to_string(run) + ": layer " + (r.best ? std::to_string(r.best->layer) : "-") +
             " hidden " + (r.best ? std::to_string(r.best->hidden_size) : "-") + " test spearman " +
             fmt("%.4f", test) + ", max non-planted |spearman| " + fmt("%.4f", noise) + ", " + fmt("%.1f", secs) +
             " s");
    if (run == 0) full = std::move(r);
  }
  verdict("planted-layer recovery", recovered >= 28 && worst_noise <= 0.2 && full_seconds < 600.0,
          std::to_string(recovered) + "/" + std::to_string(kRuns) +
              " runs select layer 5 with test spearman >= 0.95 (need 28), lowest " + fmt("%.4f", min_planted_test) +
              "; max non-planted |spearman| " + fmt("%.4f", worst_noise) + " (limit 0.2); full grid " +
              fmt("%.1f", full_seconds) + " s (limit 600 s)");

  const std::vector<int> planted_layer{kPlanted};
  const auto curve = hidden_size_curve(full, planted_layer);
  const auto all_layers = hidden_size_curve(full);
  std::string listing;
  for (std::size_t i = 0; i < all_layers.hidden_sizes.size(); ++i) {
    listing += (i ? " " : "") + std::to_string(all_layers.hidden_sizes[i]) + ":" + fmt("%.4f", all_layers.value[i]);
  }
  progress("hidden-size curve over all layers: " + listing);
  listing.clear();
  double at128 = std::numeric_limits<double>::quiet_NaN();
  double best = -1.0;
  for (std::size_t i = 0; i < curve.hidden_sizes.size(); ++i) {
    listing += (i ? " " : "") + std::to_string(curve.hidden_sizes[i]) + ":" + fmt("%.4f", curve.value[i]);
    if (curve.hidden_sizes[i] == 128) at128 = curve.value[i];
    best = std::max(best, curve.value[i]);
  }
  progress("hidden-size curve at the planted layer: " + listing);
  const double gap = best - at128;
  verdict("hidden-size plateau", curve.hidden_sizes.size() == kHiddenSizes.size() && gap <= 0.02,
          "planted-layer curve at 128 = " + fmt("%.4f", at128) + ", max over W = " + fmt("%.4f", best) +
              ", gap " + fmt("%.4f", gap) + " (limit 0.02)");
}

void nonlinearity_check() {
  double min_gap = 1.0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SweepGrid grid;
    grid.layers = {5};
    grid.hidden_sizes = {1, 16};
    const auto r = planted_sweep(planted_spec(SignalKind::kXorPair, seed), grid);
    const auto curve = hidden_size_curve(r);
    if (curve.value.size() != 2) {
      min_gap = -1.0;
      continue;
    }
    const double gap = curve.value[1] - curve.value[0];
    progress("xor seed " + std::to_string(seed) + ": macro-F1 hidden 1 " + fmt("%.4f", curve.value[0]) +
             ", hidden 16 " + fmt("%.4f", curve.value[1]) + ", gap " + fmt("%.4f", gap));
    min_gap = std::min(min_gap, gap);
  }
  verdict("nonlinearity check", min_gap >= 0.3,
          "smallest macro-F1 gap (hidden 16 - hidden 1) over 5 xor seeds = " + fmt("%.4f", min_gap) + " (need 0.3)");
}

// ---------------------------------------------------------------------------

void leakage_guards() {
  SweepGrid grid;
  grid.hidden_sizes = {4, 16};
  const auto shuffled = planted_sweep(planted_spec(SignalKind::kRegression, 100), grid, true);
  const double leak = shuffled.best_test.empty() ? 1.0 : std::abs(shuffled.best_test.front().value);

  Rng rng(2024);
  std::size_t violations = 0;
  constexpr int kTrials = 10000;
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t groups = 5 + rng.below(100);
    auto ex = testing::grouped_examples(groups, 1 + rng.below(5), 0);
    for (auto& e : ex) e.group_id = rng.next_u64();
    Rng order(rng.next_u64());
    order.shuffle(std::span<Example>(ex));
    SplitSpec spec;
    spec.seed = rng.next_u64();
    std::map<std::uint64_t, std::set<Split>> seen;
    for (const auto& e : split_dataset(ex, spec)) {
      seen[e.group_id].insert(e.split);
      if (e.split == Split::kUnassigned) ++violations;
    }
    for (const auto& [g, splits] : seen) violations += splits.size() > 1;
  }

  std::size_t unbalanced = 0;
  constexpr int kBalanceTrials = 1000;
  for (int t = 0; t < kBalanceTrials; ++t) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const std::size_t per_group = 1 + rng.below(4);
    auto ex = testing::grouped_examples(static_cast<std::size_t>(k) * (2 + rng.below(20)) + rng.below(40), per_group, k);
    const auto skew = rng.below(static_cast<std::uint64_t>(k));
    std::erase_if(ex, [&](const Example& e) { return e.group_id % 7 < 3 && e.label == static_cast<double>(skew); });
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    try {
      for (const auto& e : balance_classes(ex, k, rng.next_u64())) ++count[static_cast<std::size_t>(e.label)];
    } catch (const Error&) {
      ++unbalanced;
      continue;
    }
    if (std::adjacent_find(count.begin(), count.end(), std::not_equal_to<>()) != count.end() || count[0] == 0) {
      ++unbalanced;
    }
  }
  verdict("leakage guards", leak <= 0.1 && violations == 0 && unbalanced == 0,
          "shuffled-label test |spearman| = " + fmt("%.4f", leak) + " (limit 0.1); " + std::to_string(violations) +
              " group-atomicity violations in " + std::to_string(kTrials) + " split trials; " +
              std::to_string(unbalanced) + " unequal class counts in " + std::to_string(kBalanceTrials) +
              " balancing trials");
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) { return detail::read_text_file(p); }

void spill(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_dataset(const fs::path& path, const DatasetHeader& h, const std::vector<ActivationRecord>& records) {
  auto reader = read_dataset(path);
  if (!(reader.header() == h)) return false;
  std::size_t i = 0;
  while (auto r = reader.next()) {
    if (i >= records.size() || !testing::same_record(*r, records[i])) return false;
    ++i;
  }
  return i == records.size();
}

void format_round_trip(const fs::path& dir) {
  Rng rng(31);
  constexpr int kCases = 1000;
  int exact = 0, injected = 0, caught = 0;
  std::map<std::string, int> missed;
  auto expect = [&](bool ok, const char* what) {
    ++injected;
    if (ok) {
      ++caught;
    } else {
      ++missed[what];
    }
  };
  for (int c = 0; c < kCases; ++c) {
    auto [h, records] = testing::random_dataset(rng);
    const auto path = dir / "fuzz.bin";
    write_dataset(h, records, path);
    if (same_dataset(path, h, records) && validate(path).status() == ValidationStatus::kClean) ++exact;
    const auto good = slurp(path);

    // NaN: plant a sentinel value, locate its unique bytes, overwrite with NaN.
    if (!records.empty() && !records.front().activations.empty()) {
      const std::size_t r = rng.below(records.size());
      const std::size_t k = rng.below(records[r].activations.size());
      auto marked = records;
      std::string bytes;
      std::size_t pos = std::string::npos;
      for (float sentinel = 1234.5678f; pos == std::string::npos; sentinel *= 1.37f) {
        marked[r].activations[k] = sentinel;
        write_dataset(h, marked, dir / "nan.bin");
        bytes = slurp(dir / "nan.bin");
        char pattern[4];
        std::memcpy(pattern, &sentinel, 4);
        const auto first = bytes.find(std::string(pattern, 4));
        if (first != std::string::npos && first == bytes.rfind(std::string(pattern, 4))) pos = first;
      }
      const float nan = std::numeric_limits<float>::quiet_NaN();
      std::memcpy(bytes.data() + pos, &nan, 4);
      spill(dir / "nan.bin", bytes);
      const auto report = validate(dir / "nan.bin");
      bool named = false;
      for (const auto& f : report.findings) named = named || f.example_id == records[r].example_id;
      expect(report.status() != ValidationStatus::kClean && named, "nan");
    }

    const std::size_t cut = rng.below(good.size());
    spill(dir / "cut.bin", good.substr(0, cut));
    expect(validate(dir / "cut.bin").status() == ValidationStatus::kFatal, "truncation");

    auto magic = good;
    magic[rng.below(8)] ^= static_cast<char>(1 + rng.below(255));
    spill(dir / "magic.bin", magic);
    expect(validate(dir / "magic.bin").status() == ValidationStatus::kFatal, "bad magic");
  }
  std::string miss;
  for (const auto& [what, n] : missed) miss += " " + what + ":" + std::to_string(n);
  verdict("format round-trip", exact == kCases && caught == injected,
          std::to_string(exact) + "/" + std::to_string(kCases) + " fuzzed datasets bit-exact; " +
              std::to_string(caught) + "/" + std::to_string(injected) + " injected corruptions caught" +
              (miss.empty() ? "" : " (missed" + miss + ")"));
}

// ---------------------------------------------------------------------------

void labeling_corpus() {
  const auto r = testing::check_labeling_corpus(fs::path(PLANPROBE_TEST_DATA_DIR) / "labeling_corpus.json");
  int min_per_task = r.per_task.empty() ? 0 : 1 << 30;
  for (const auto& [task, n] : r.per_task) min_per_task = std::min(min_per_task, n);
  for (const auto& m : r.mismatches) progress("corpus mismatch " + m);
  const bool pass = r.mismatches.empty() && r.cases >= 60 && r.per_task.size() == 6 && min_per_task >= 10 &&
                    r.reasons.size() == std::size(kAllExclusionReasons);
  verdict("labeling corpus", pass,
          std::to_string(r.cases) + " cases over " + std::to_string(r.per_task.size()) + " tasks (min " +
              std::to_string(min_per_task) + " per task), " + std::to_string(r.mismatches.size()) +
              " mismatches, " + std::to_string(r.reasons.size()) + "/" +
              std::to_string(std::size(kAllExclusionReasons)) + " exclusion reasons covered");
}

void baseline_floors() {
  bool pass = true;
  std::string detail;
  Rng rng(5);
  for (int k : {2, 4, 5}) {
    constexpr std::size_t n = 30000;
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    rng.shuffle(std::span<int>(truth));
    for (auto& p : pred) p = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const double f1 = macro_f1(pred, truth, k).value;
    const double expected = 1.0 / k;
    pass = pass && std::abs(f1 - expected) <= 0.02;
    detail += (detail.empty() ? "" : "; ") + std::string("K=") + std::to_string(k) + " macro-F1 " +
              fmt("%.4f", f1) + " vs " + fmt("%.4f", expected);
  }
  verdict("baseline floors", pass, detail + " (tolerance 0.02)");
}

}  // namespace

int main() {
  const auto dir = fs::temp_directory_path() / "planprobe_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto t0 = Clock::now();
  try {
    metric_oracle_equivalence();
    gradient_correctness();
    format_round_trip(dir);
    labeling_corpus();
    baseline_floors();
    leakage_guards();
    nonlinearity_check();
    planted_layer_recovery_and_plateau();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance suite aborted: %s\n", e.what());
    ++failures;
  }
  fs::remove_all(dir);
  std::printf("%d criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
