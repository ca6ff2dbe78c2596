#ifndef PLANPROBE_DATASET_BUILDER_HPP
#define PLANPROBE_DATASET_BUILDER_HPP

// Labeled, filtered, balanced and split datasets.
//
// A group is a canonical record (captured at the prompt end) together with
// its truncation-augmented variants. Balancing and splitting work on whole
// groups, so augmented variants never straddle a split and never skew class
// counts.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "planprobe/activation_store.hpp"
#include "planprobe/config.hpp"
#include "planprobe/error.hpp"
#include "planprobe/labeling.hpp"
#include "planprobe/rng.hpp"
#include "planprobe/sha256.hpp"

namespace planprobe {

// ---------------------------------------------------------------------------
// Label files

struct LabelEntry {
  std::uint64_t example_id = 0;
  std::uint64_t group_id = 0;
  /// Position of the record in the activation file.
  std::uint64_t record_index = 0;
  std::int64_t truncation_offset = -1;
  std::uint32_t response_tokens = 0;
  std::optional<double> value;
  std::optional<ExclusionReason> excluded;
  /// Token index where the attribute-revealing text begins; also the usable
  /// length of the response for generation-position analysis.
  std::optional<std::int64_t> key_token;
  /// Suggested truncation offsets for the exporter (canonical records only).
  std::vector<std::int64_t> augment_offsets;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

struct LabelSet {
  std::string task_id;
  TaskKind kind = TaskKind::kRegression;
  int num_classes = 0;
  std::vector<std::string> classes;
  std::string source_path;
  std::string source_sha256;
  std::map<std::string, std::string> pattern_hashes;
  std::vector<LabelEntry> labels;

  bool is_classification() const { return kind == TaskKind::kClassification; }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

inline void to_json(nlohmann::json& j, const LabelEntry& e) {
  j = nlohmann::json{{"example_id", e.example_id},
                     {"group_id", e.group_id},
                     {"record_index", e.record_index},
                     {"truncation_offset", e.truncation_offset},
                     {"response_tokens", e.response_tokens}};
  if (e.value) j["value"] = *e.value;
  if (e.excluded) j["excluded"] = std::string(reason_name(*e.excluded));
  if (e.key_token) j["key_token"] = *e.key_token;
  if (!e.augment_offsets.empty()) j["augment_offsets"] = e.augment_offsets;
}

inline void from_json(const nlohmann::json& j, LabelEntry& e) {
  j.at("example_id").get_to(e.example_id);
  e.group_id = j.value("group_id", e.example_id);
  j.at("record_index").get_to(e.record_index);
  e.truncation_offset = j.value("truncation_offset", std::int64_t{-1});
  e.response_tokens = j.value("response_tokens", std::uint32_t{0});
  e.value.reset();
  e.excluded.reset();
  e.key_token.reset();
  if (j.contains("value")) e.value = j.at("value").get<double>();
  if (j.contains("excluded")) {
    const auto name = j.at("excluded").get<std::string>();
    e.excluded = parse_reason(name);
    if (!e.excluded) fail(ErrorKind::kFormat, "unknown exclusion reason '" + name + "'");
  }
  if (e.value.has_value() == e.excluded.has_value()) {
    fail(ErrorKind::kFormat, "label for example " + std::to_string(e.example_id) +
                                 " must have exactly one of value and excluded");
  }
  if (j.contains("key_token")) e.key_token = j.at("key_token").get<std::int64_t>();
  e.augment_offsets = j.value("augment_offsets", std::vector<std::int64_t>{});
}

inline void to_json(nlohmann::json& j, const LabelSet& s) {
  j = nlohmann::json{{"task_id", s.task_id},
                     {"kind", s.is_classification() ? "classification" : "regression"},
                     {"num_classes", s.num_classes},
                     {"classes", s.classes},
                     {"source", {{"path", s.source_path}, {"sha256", s.source_sha256}}},
                     {"pattern_hashes", s.pattern_hashes},
                     {"labels", s.labels}};
}

inline void from_json(const nlohmann::json& j, LabelSet& s) {
  j.at("task_id").get_to(s.task_id);
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "classification" && kind != "regression") fail(ErrorKind::kFormat, "unknown task kind '" + kind + "'");
  s.kind = kind == "classification" ? TaskKind::kClassification : TaskKind::kRegression;
  s.num_classes = j.value("num_classes", 0);
  s.classes = j.value("classes", std::vector<std::string>{});
  if (j.contains("source")) {
    s.source_path = j.at("source").value("path", "");
    s.source_sha256 = j.at("source").value("sha256", "");
  }
  s.pattern_hashes = j.value("pattern_hashes", std::map<std::string, std::string>{});
  j.at("labels").get_to(s.labels);
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto text = detail::read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

inline void save_labels(const std::filesystem::path& path, const LabelSet& labels) {
  write_json_file(path, labels);
}

inline LabelSet load_labels(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<LabelSet>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentOptions {
  int n_augments = 3;
  /// Tokens kept clear of the key position.
  std::int64_t margin = 3;
  std::uint64_t seed = 0;
};

/// Up to n_augments distinct offsets drawn uniformly from [1, key_offset -
/// margin], sorted ascending; empty when that range is empty.
inline std::vector<std::int64_t> augment_by_truncation(std::int64_t key_offset, int n_augments, std::uint64_t seed,
                                                       std::int64_t margin = 3) {
  if (key_offset < 1) fail(ErrorKind::kData, "key offset must be at least 1");
  if (margin < 0 || n_augments < 0) fail(ErrorKind::kConfig, "margin and augment count must be non-negative");
  const std::int64_t hi = key_offset - margin;
  if (hi < 1 || n_augments == 0) return {};
  const auto range = static_cast<std::uint64_t>(hi);
  const auto want = std::min<std::uint64_t>(range, static_cast<std::uint64_t>(n_augments));
  Rng rng(seed);
  // Floyd's algorithm: `want` distinct values from [1, hi].
  std::set<std::int64_t> chosen;
  for (std::uint64_t j = range - want; j < range; ++j) {
    const auto t = static_cast<std::int64_t>(rng.below(j + 1)) + 1;
    if (!chosen.insert(t).second) chosen.insert(static_cast<std::int64_t>(j) + 1);
  }
  return {chosen.begin(), chosen.end()};
}

// ---------------------------------------------------------------------------
// Labeling a whole activation file

struct LabelingOptions {
  TaskDefinition task;
  /// Directory holding answer_patterns.txt, stance_patterns.txt and
  /// animals.txt; built-in defaults are used for files it lacks.
  std::optional<std::filesystem::path> pattern_dir;
  /// Character-choice classes; derived from the canonical responses when
  /// empty.
  std::vector<std::string> classes;
  AugmentOptions augment;
};

namespace detail {

inline std::optional<std::filesystem::path> pattern_file(const LabelingOptions& o, const char* name) {
  if (!o.pattern_dir) return std::nullopt;
  auto p = *o.pattern_dir / name;
  if (std::filesystem::exists(p)) return p;
  return std::nullopt;
}

}  // namespace detail

/// Labels every record of an activation file. Only record metadata is used;
/// activations are read for a single layer.
inline LabelSet label_dataset(const std::filesystem::path& path, const LabelingOptions& options) {
  auto reader = read_dataset(path, ReadOptions{{0}, std::nullopt});
  const auto& task = options.task;
  LabelSet out;
  out.task_id = std::string(task_name(task.id));
  out.kind = task.kind;
  out.num_classes = task.num_classes;
  out.source_path = path.filename().string();
  out.source_sha256 = sha256_file(path);

  WhitespaceTokenizer tokenizer;
  std::optional<AnswerPatternSet> answers;
  std::optional<StancePatternSet> stances;
  std::optional<Lexicon> lexicon;
  switch (task.id) {
    case TaskId::kMultipleChoice:
    case TaskId::kAnswerConfidence: {
      const auto f = detail::pattern_file(options, "answer_patterns.txt");
      answers = f ? AnswerPatternSet::load(*f, task.params.option_count)
                  : AnswerPatternSet::defaults(task.params.option_count);
      out.pattern_hashes["answer_patterns"] = answers->source_hash();
      break;
    }
    case TaskId::kFactualConsistency: {
      const auto f = detail::pattern_file(options, "stance_patterns.txt");
      stances = f ? StancePatternSet::load(*f) : StancePatternSet::defaults();
      out.pattern_hashes["stance_patterns"] = stances->source_hash();
      break;
    }
    case TaskId::kCharacterChoice: {
      const auto f = detail::pattern_file(options, "animals.txt");
      lexicon = f ? Lexicon::load(*f) : Lexicon::defaults();
      out.pattern_hashes["animals"] = lexicon->source_hash();
      break;
    }
    default: break;
  }

  std::vector<ActivationRecord> records;
  records.reserve(reader.size());
  while (auto r = reader.next()) {
    r->activations.clear();
    records.push_back(std::move(*r));
  }

  LabelContext ctx;
  ctx.task = task;
  ctx.tokenizer = &tokenizer;
  ctx.answers = answers ? &*answers : nullptr;
  ctx.stances = stances ? &*stances : nullptr;
  ctx.lexicon = lexicon ? &*lexicon : nullptr;
  if (task.id == TaskId::kCharacterChoice) {
    if (options.classes.empty()) {
      std::vector<std::string> corpus;
      for (const auto& r : records) {
        if (r.is_canonical()) corpus.push_back(r.response_text);
      }
      ctx.classes = derive_top_classes(corpus, *lexicon, task.params.top_k);
    } else {
      ctx.classes = options.classes;
    }
    out.classes = ctx.classes;
    out.num_classes = static_cast<int>(ctx.classes.size());
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    LabelEntry e;
    e.example_id = r.example_id;
    e.group_id = r.group_id;
    e.record_index = i;
    e.truncation_offset = r.truncation_offset;
    e.response_tokens = r.response_token_count;
    const auto outcome = label_example(
        ctx, LabelInput{r.response_text, r.response_token_count, r.eos_reached, r.truncation_offset, r.gold_label});
    if (outcome.is_excluded()) {
      e.excluded = outcome.exclusion_reason();
    } else {
      e.value = outcome.value();
    }
    if (task.id == TaskId::kResponseLength || task.id == TaskId::kReasoningSteps) {
      e.key_token = r.response_token_count;
    } else if (outcome.key_char()) {
      e.key_token = static_cast<std::int64_t>(char_to_token_index(tokenizer, r.response_text, *outcome.key_char()));
    }
    if (r.is_canonical() && !e.excluded && e.key_token && *e.key_token >= 1) {
      e.augment_offsets = augment_by_truncation(*e.key_token, options.augment.n_augments,
                                                derive_seed(options.augment.seed, r.example_id),
                                                options.augment.margin);
    }
    out.labels.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Building splits

enum class Split { kUnassigned, kTrain, kVal, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnassigned: break;
  }
  return "unassigned";
}

inline Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kFormat, "unknown split '" + std::string(name) + "'");
}

struct Example {
  std::uint64_t example_id = 0;
  std::uint64_t group_id = 0;
  std::uint64_t record_index = 0;
  std::int64_t truncation_offset = -1;
  std::uint32_t response_tokens = 0;
  /// Token count available for generation-position analysis.
  std::int64_t usable_length = 0;
  double label = 0.0;
  Split split = Split::kUnassigned;

  bool is_canonical() const { return truncation_offset < 0; }

  friend bool operator==(const Example&, const Example&) = default;
};

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;

  void check() const {
    if (!(train > 0) || !(val > 0) || !(test > 0)) fail(ErrorKind::kConfig, "split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) fail(ErrorKind::kConfig, "split fractions must sum to 1");
  }
};

struct DropReport {
  std::size_t input = 0;
  std::size_t excluded = 0;
  std::size_t too_short = 0;
  std::size_t balanced_out = 0;
  std::size_t equalized_out = 0;
  std::size_t kept = 0;

  friend bool operator==(const DropReport&, const DropReport&) = default;
};

/// Examples whose full response has fewer than min_tokens tokens are dropped.
inline std::vector<Example> filter_min_length(std::vector<Example> examples, std::uint32_t min_tokens = 8,
                                              std::size_t* dropped = nullptr) {
  const auto before = examples.size();
  std::erase_if(examples, [&](const Example& e) { return e.response_tokens < min_tokens; });
  if (dropped) *dropped = before - examples.size();
  return examples;
}

namespace detail {

/// Class of each group, read at its canonical example (the member with the
/// lowest truncation offset when no canonical member survived).
inline std::map<std::uint64_t, int> group_classes(std::span<const Example> examples) {
  std::map<std::uint64_t, std::pair<std::int64_t, int>> best;
  for (const auto& e : examples) {
    const auto key = e.is_canonical() ? std::int64_t{-1} : e.truncation_offset;
    auto [it, inserted] = best.try_emplace(e.group_id, key, static_cast<int>(e.label));
    if (!inserted && key < it->second.first) it->second = {key, static_cast<int>(e.label)};
  }
  std::map<std::uint64_t, int> out;
  for (const auto& [g, v] : best) out[g] = v.second;
  return out;
}

inline std::vector<Example> keep_groups(std::vector<Example> examples, const std::set<std::uint64_t>& keep) {
  std::erase_if(examples, [&](const Example& e) { return !keep.count(e.group_id); });
  return examples;
}

}  // namespace detail

/// Downsamples every class to the group count of the smallest class. Whole
/// groups are kept or dropped; the surviving examples keep their order.
inline std::vector<Example> balance_classes(std::vector<Example> examples, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) fail(ErrorKind::kBalance, "balancing needs a classification task");
  std::vector<std::vector<std::uint64_t>> by_class(static_cast<std::size_t>(num_classes));
  for (const auto& [g, c] : detail::group_classes(examples)) {
    if (c < 0 || c >= num_classes) fail(ErrorKind::kBalance, "group " + std::to_string(g) + " has class " +
                                                                 std::to_string(c) + " outside the task's classes");
    by_class[static_cast<std::size_t>(c)].push_back(g);
  }
  std::size_t smallest = examples.empty() ? 0 : by_class.front().size();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) fail(ErrorKind::kBalance, "class " + std::to_string(c) + " has no groups");
    smallest = std::min(smallest, by_class[c].size());
  }
  std::set<std::uint64_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& groups = by_class[c];
    if (groups.size() > smallest) {
      Rng rng(derive_seed(seed, c));
      rng.shuffle(std::span<std::uint64_t>(groups));
    }
    keep.insert(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
  return detail::keep_groups(std::move(examples), keep);
}

/// Seeded downsample to at most `target_groups` groups.
inline std::vector<Example> equalize_groups(std::vector<Example> examples, std::size_t target_groups,
                                            std::uint64_t seed) {
  std::set<std::uint64_t> ids;
  for (const auto& e : examples) ids.insert(e.group_id);
  if (ids.size() <= target_groups) return examples;
  std::vector<std::uint64_t> groups(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::uint64_t>(groups));
  return detail::keep_groups(std::move(examples),
                             std::set<std::uint64_t>(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(target_groups)));
}

/// Group counts per split by largest-remainder rounding; remainder ties go to
/// train, then val, then test.
inline std::array<std::size_t, 3> split_sizes(std::size_t groups, const SplitSpec& spec) {
  const std::array<double, 3> frac = {spec.train, spec.val, spec.test};
  std::array<std::size_t, 3> n{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = frac[i] * static_cast<double>(groups);
    n[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(n[i]);
    assigned += n[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < groups; ++k, ++assigned) ++n[order[k % 3]];
  return n;
}

/// Assignment of every group id to a split.
using SplitAssignment = std::map<std::uint64_t, Split>;

inline SplitAssignment split_groups(std::span<const std::uint64_t> group_ids, const SplitSpec& spec) {
  spec.check();
  std::vector<std::uint64_t> groups(group_ids.begin(), group_ids.end());
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  if (groups.size() < 5) {
    fail(ErrorKind::kSplit, "need at least 5 groups to fill train, val and test; got " + std::to_string(groups.size()));
  }
  const auto n = split_sizes(groups.size(), spec);
  if (n[0] == 0 || n[1] == 0 || n[2] == 0) {
    fail(ErrorKind::kSplit, "split fractions leave a split empty with " + std::to_string(groups.size()) + " groups");
  }
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::uint64_t>(groups));
  SplitAssignment out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out[groups[i]] = i < n[0] ? Split::kTrain : i < n[0] + n[1] ? Split::kVal : Split::kTest;
  }
  return out;
}

/// Assigns every example the split of its group.
inline std::vector<Example> split_dataset(std::vector<Example> examples, const SplitSpec& spec) {
  std::vector<std::uint64_t> ids;
  ids.reserve(examples.size());
  for (const auto& e : examples) ids.push_back(e.group_id);
  const auto assignment = split_groups(ids, spec);
  for (auto& e : examples) e.split = assignment.at(e.group_id);
  return examples;
}

struct BuildOptions {
  SplitSpec split;
  std::uint32_t min_tokens = 8;
  /// Classification datasets are balanced unless disabled.
  bool balance = true;
  /// Optional cap on the number of groups (equalizing sizes across models).
  std::optional<std::size_t> equalize_groups;
};

inline BuildOptions build_options_from(const Config& c) {
  BuildOptions o;
  o.split.train = c.get_double("split.train", o.split.train);
  o.split.val = c.get_double("split.val", o.split.val);
  o.split.test = c.get_double("split.test", o.split.test);
  o.split.seed = static_cast<std::uint64_t>(c.get_int("split.seed", 0));
  o.min_tokens = static_cast<std::uint32_t>(c.get_int("build.min_tokens", o.min_tokens));
  o.balance = c.get_bool("build.balance", o.balance);
  if (const auto g = c.get_int("build.equalize_groups", 0); g > 0) o.equalize_groups = static_cast<std::size_t>(g);
  o.split.check();
  return o;
}

/// A split dataset ready for probing, as written by `build`.
struct BuiltDataset {
  std::string activation_file;
  std::string activation_sha256;
  std::string labels_file;
  std::string task_id;
  TaskKind kind = TaskKind::kRegression;
  int num_classes = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  DropReport drops;
  std::vector<Example> examples;

  bool is_classification() const { return kind == TaskKind::kClassification; }

  std::vector<const Example*> in_split(Split s) const {
    std::vector<const Example*> out;
    for (const auto& e : examples) {
      if (e.split == s) out.push_back(&e);
    }
    return out;
  }
};

/// Filter, balance, equalize and split. Every input label ends up either in
/// a split or in one drop-report bucket.
inline BuiltDataset build_dataset(const LabelSet& labels, const BuildOptions& options) {
  BuiltDataset out;
  out.activation_file = labels.source_path;
  out.activation_sha256 = labels.source_sha256;
  out.task_id = labels.task_id;
  out.kind = labels.kind;
  out.num_classes = labels.num_classes;
  out.seed = options.split.seed;
  out.drops.input = labels.labels.size();

  std::vector<Example> examples;
  for (const auto& l : labels.labels) {
    if (l.excluded) {
      ++out.drops.excluded;
      continue;
    }
    Example e;
    e.example_id = l.example_id;
    e.group_id = l.group_id;
    e.record_index = l.record_index;
    e.truncation_offset = l.truncation_offset;
    e.response_tokens = l.response_tokens;
    e.usable_length = l.key_token.value_or(l.response_tokens);
    e.label = *l.value;
    examples.push_back(e);
  }
  examples = filter_min_length(std::move(examples), options.min_tokens, &out.drops.too_short);
  if (labels.is_classification() && options.balance) {
    const auto before = examples.size();
    examples = balance_classes(std::move(examples), labels.num_classes, derive_seed(options.split.seed, 1));
    out.drops.balanced_out = before - examples.size();
  }
  if (options.equalize_groups) {
    const auto before = examples.size();
    examples = equalize_groups(std::move(examples), *options.equalize_groups, derive_seed(options.split.seed, 2));
    out.drops.equalized_out = before - examples.size();
  }
  out.examples = split_dataset(std::move(examples), options.split);
  out.drops.kept = out.examples.size();
  return out;
}

inline void to_json(nlohmann::json& j, const DropReport& d) {
  j = nlohmann::json{{"input", d.input},         {"excluded", d.excluded},           {"too_short", d.too_short},
                     {"balanced_out", d.balanced_out}, {"equalized_out", d.equalized_out}, {"kept", d.kept}};
}

inline void from_json(const nlohmann::json& j, DropReport& d) {
  j.at("input").get_to(d.input);
  j.at("excluded").get_to(d.excluded);
  j.at("too_short").get_to(d.too_short);
  j.at("balanced_out").get_to(d.balanced_out);
  j.at("equalized_out").get_to(d.equalized_out);
  j.at("kept").get_to(d.kept);
}

inline void to_json(nlohmann::json& j, const BuiltDataset& b) {
  nlohmann::json splits = nlohmann::json::object();
  for (auto s : {Split::kTrain, Split::kVal, Split::kTest}) {
    std::set<std::uint64_t> groups;
    for (const auto* e : b.in_split(s)) groups.insert(e->group_id);
    splits[std::string(split_name(s))] = groups;
  }
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : b.examples) {
    examples.push_back({{"example_id", e.example_id},
                        {"group_id", e.group_id},
                        {"record_index", e.record_index},
                        {"truncation_offset", e.truncation_offset},
                        {"response_tokens", e.response_tokens},
                        {"usable_length", e.usable_length},
                        {"label", e.label},
                        {"split", split_name(e.split)}});
  }
  j = nlohmann::json{{"activation_file", b.activation_file},
                     {"activation_sha256", b.activation_sha256},
                     {"labels_file", b.labels_file},
                     {"task_id", b.task_id},
                     {"kind", b.is_classification() ? "classification" : "regression"},
                     {"num_classes", b.num_classes},
                     {"seed", b.seed},
                     {"config_hash", b.config_hash},
                     {"drop_report", b.drops},
                     {"splits", splits},
                     {"examples", examples}};
}

inline void from_json(const nlohmann::json& j, BuiltDataset& b) {
  j.at("activation_file").get_to(b.activation_file);
  j.at("activation_sha256").get_to(b.activation_sha256);
  b.labels_file = j.value("labels_file", "");
  j.at("task_id").get_to(b.task_id);
  b.kind = j.at("kind").get<std::string>() == "classification" ? TaskKind::kClassification : TaskKind::kRegression;
  j.at("num_classes").get_to(b.num_classes);
  b.seed = j.value("seed", std::uint64_t{0});
  b.config_hash = j.value("config_hash", "");
  j.at("drop_report").get_to(b.drops);
  b.examples.clear();
  for (const auto& x : j.at("examples")) {
    Example e;
    x.at("example_id").get_to(e.example_id);
    x.at("group_id").get_to(e.group_id);
    x.at("record_index").get_to(e.record_index);
    x.at("truncation_offset").get_to(e.truncation_offset);
    e.response_tokens = x.value("response_tokens", std::uint32_t{0});
    x.at("usable_length").get_to(e.usable_length);
    x.at("label").get_to(e.label);
    e.split = parse_split(x.at("split").get<std::string>());
    b.examples.push_back(e);
  }
}

inline void save_built_dataset(const std::filesystem::path& path, const BuiltDataset& b) { write_json_file(path, b); }

inline BuiltDataset load_built_dataset(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<BuiltDataset>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

/// Relative paths recorded in a JSON file resolve against that file's
/// directory.
inline std::filesystem::path resolve_near(const std::filesystem::path& anchor_file, const std::string& recorded) {
  std::filesystem::path p(recorded);
  if (p.is_absolute()) return p;
  return anchor_file.parent_path() / p;
}

}  // namespace planprobe

#endif  // PLANPROBE_DATASET_BUILDER_HPP
