#include <map>
#include <set>

#include "helpers.hpp"

namespace planprobe {
namespace {

using testing::TempDir;
using testing::grouped_examples;

LabelSet make_labels(std::size_t groups, std::size_t per_group, int classes, std::uint64_t seed) {
  Rng rng(seed);
  LabelSet s;
  s.task_id = classes ? "multiple_choice" : "response_length";
  s.kind = classes ? TaskKind::kClassification : TaskKind::kRegression;
  s.num_classes = classes;
  std::uint64_t id = 0;
  for (std::uint64_t g = 0; g < groups; ++g) {
    const double cls = classes ? static_cast<double>(rng.below(static_cast<std::uint64_t>(classes))) : 0;
    for (std::size_t k = 0; k < per_group; ++k) {
      LabelEntry e;
      e.example_id = id;
      e.group_id = g;
      e.record_index = id++;
      e.truncation_offset = k == 0 ? -1 : static_cast<std::int64_t>(k);
      e.response_tokens = static_cast<std::uint32_t>(4 + rng.below(30));
      e.key_token = e.response_tokens;
      if (rng.below(10) == 0) {
        e.excluded = ExclusionReason::kNoAnswer;
      } else {
        e.value = classes ? cls : rng.normal();
      }
      s.labels.push_back(e);
    }
  }
  return s;
}

TEST(Augment, OffsetsAreDistinctSortedAndBounded) {
  Rng rng(1);
  for (int c = 0; c < 2000; ++c) {
    const auto key = static_cast<std::int64_t>(1 + rng.below(40));
    const int n = static_cast<int>(rng.below(6));
    const auto margin = static_cast<std::int64_t>(rng.below(5));
    const auto seed = rng.next_u64();
    const auto offsets = augment_by_truncation(key, n, seed, margin);
    const auto hi = key - margin;
    EXPECT_EQ(offsets.size(), static_cast<std::size_t>(std::clamp<std::int64_t>(hi, 0, n)));
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      EXPECT_GE(offsets[i], 1);
      EXPECT_LE(offsets[i], key - margin);
      if (i) {
        EXPECT_LT(offsets[i - 1], offsets[i]);
      }
    }
    EXPECT_EQ(offsets, augment_by_truncation(key, n, seed, margin));
  }
}

TEST(Augment, SmallRangesAndErrors) {
  EXPECT_EQ(augment_by_truncation(3, 3, 0, 3), std::vector<std::int64_t>{});
  EXPECT_EQ(augment_by_truncation(5, 3, 0, 3), (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(augment_by_truncation(10, 7, 0, 3), (std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(testing::kind_of([] { augment_by_truncation(0, 3, 0); }), ErrorKind::kData);
}

TEST(Augment, DrawsAreRoughlyUniform) {
  std::vector<int> counts(11, 0);
  for (std::uint64_t s = 0; s < 20000; ++s) {
    for (auto o : augment_by_truncation(13, 1, s, 3)) ++counts[static_cast<std::size_t>(o)];
  }
  for (int v = 1; v <= 10; ++v) EXPECT_NEAR(counts[static_cast<std::size_t>(v)], 2000, 200) << v;
}

TEST(Split, SizesUseLargestRemainderWithTrainFirst) {
  EXPECT_EQ(split_sizes(10, {}), (std::array<std::size_t, 3>{6, 2, 2}));
  EXPECT_EQ(split_sizes(7, {}), (std::array<std::size_t, 3>{4, 2, 1}));
  EXPECT_EQ(split_sizes(8, {}), (std::array<std::size_t, 3>{5, 2, 1}));
  EXPECT_EQ(split_sizes(5, {}), (std::array<std::size_t, 3>{3, 1, 1}));
  SplitSpec even{0.4, 0.3, 0.3, 0};
  EXPECT_EQ(split_sizes(11, even), (std::array<std::size_t, 3>{5, 3, 3}));
}

TEST(Split, TooFewGroupsIsASplitError) {
  const auto ex = grouped_examples(4, 3, 0);
  EXPECT_EQ(testing::kind_of([&] { split_dataset(ex, {}); }), ErrorKind::kSplit);
  SplitSpec tiny{0.98, 0.01, 0.01, 0};
  EXPECT_EQ(testing::kind_of([&] { split_dataset(grouped_examples(20, 1, 0), tiny); }), ErrorKind::kSplit);
  SplitSpec bad{0.5, 0.5, 0.5, 0};
  EXPECT_ANY_THROW(split_dataset(grouped_examples(20, 1, 0), bad));
}

TEST(Split, GroupAtomicityOnRandomizedTrials) {
  Rng rng(2);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t groups = 5 + rng.below(60);
    auto ex = grouped_examples(groups, 1 + rng.below(4), 0);
    // Scramble group ids so they are not contiguous.
    for (auto& e : ex) e.group_id = e.group_id * 7919 + 13;
    SplitSpec spec;
    spec.seed = rng.next_u64();
    const auto out = split_dataset(ex, spec);
    std::map<std::uint64_t, Split> seen;
    for (const auto& e : out) {
      ASSERT_NE(e.split, Split::kUnassigned);
      auto [it, fresh] = seen.emplace(e.group_id, e.split);
      ASSERT_TRUE(fresh || it->second == e.split) << "group " << e.group_id << " crosses splits";
    }
    std::array<std::size_t, 3> n{};
    for (const auto& [g, s] : seen) ++n[static_cast<std::size_t>(s) - 1];
    EXPECT_EQ(n, split_sizes(groups, spec));
  }
}

TEST(Split, DeterministicAndOrderIndependent) {
  auto ex = grouped_examples(40, 2, 0);
  const auto a = split_dataset(ex, {0.6, 0.2, 0.2, 5});
  std::reverse(ex.begin(), ex.end());
  const auto b = split_dataset(ex, {0.6, 0.2, 0.2, 5});
  std::map<std::uint64_t, Split> ma, mb;
  for (const auto& e : a) ma[e.group_id] = e.split;
  for (const auto& e : b) mb[e.group_id] = e.split;
  EXPECT_EQ(ma, mb);
  const auto c = split_dataset(ex, {0.6, 0.2, 0.2, 6});
  std::map<std::uint64_t, Split> mc;
  for (const auto& e : c) mc[e.group_id] = e.split;
  EXPECT_NE(ma, mc);
}

TEST(Balance, ClassCountsAreExactAndGroupsStayWhole) {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const int k = 2 + static_cast<int>(rng.below(4));
    auto ex = grouped_examples(static_cast<std::size_t>(k) * 3 + rng.below(50), 1 + rng.below(3), k);
    // Skew: drop some groups of class 0.
    std::erase_if(ex, [&](const Example& e) { return e.label == 0 && e.group_id % 3 == 0 && e.group_id > 0; });
    const auto out = balance_classes(ex, k, rng.next_u64());
    std::map<int, std::set<std::uint64_t>> groups_per_class;
    std::map<std::uint64_t, std::size_t> in_count, out_count;
    for (const auto& e : ex) ++in_count[e.group_id];
    for (const auto& e : out) {
      groups_per_class[static_cast<int>(e.label)].insert(e.group_id);
      ++out_count[e.group_id];
    }
    ASSERT_EQ(groups_per_class.size(), static_cast<std::size_t>(k));
    const auto target = groups_per_class.begin()->second.size();
    for (const auto& [c, g] : groups_per_class) EXPECT_EQ(g.size(), target) << "class " << c;
    for (const auto& [g, n] : out_count) EXPECT_EQ(n, in_count[g]) << "group " << g << " split apart";
  }
}

TEST(Balance, GroupClassFollowsCanonicalMember) {
  std::vector<Example> ex = grouped_examples(6, 2, 2);
  // Truncated members of group 0 carry a different label; the canonical one decides.
  ex[1].label = 1;
  const auto out = balance_classes(ex, 2, 0);
  std::set<std::uint64_t> kept;
  for (const auto& e : out) kept.insert(e.group_id);
  EXPECT_EQ(kept.size(), 6u);
  EXPECT_EQ(testing::kind_of([&] { balance_classes(grouped_examples(6, 1, 2), 3, 0); }), ErrorKind::kBalance);
}

TEST(Build, DropReportConservesInputs) {
  for (int classes : {0, 3}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto labels = make_labels(60, 3, classes, seed);
      BuildOptions o;
      o.split.seed = seed;
      if (seed % 2) o.equalize_groups = 30;
      const auto b = build_dataset(labels, o);
      const auto& d = b.drops;
      EXPECT_EQ(d.input, labels.labels.size());
      EXPECT_EQ(d.excluded + d.too_short + d.balanced_out + d.equalized_out + d.kept, d.input);
      EXPECT_EQ(d.kept, b.examples.size());
      for (const auto& e : b.examples) EXPECT_GE(e.response_tokens, 8u);
    }
  }
}

TEST(Build, IsDeterministicAndRoundTrips) {
  TempDir dir;
  const auto labels = make_labels(50, 2, 4, 1);
  const auto a = build_dataset(labels, {});
  const auto b = build_dataset(labels, {});
  EXPECT_EQ(a.examples, b.examples);
  save_built_dataset(dir / "d.json", a);
  const auto c = load_built_dataset(dir / "d.json");
  EXPECT_EQ(c.examples, a.examples);
  EXPECT_EQ(c.drops, a.drops);
  EXPECT_EQ(c.num_classes, 4);
  EXPECT_EQ(c.task_id, a.task_id);
}

TEST(Build, OptionsFromConfig) {
  const auto cfg = Config::parse("[split]\ntrain = 0.5\nval = 0.25\ntest = 0.25\nseed = 9\n[build]\nmin_tokens = 3\n"
                                 "balance = false\nequalize_groups = 12\n");
  const auto o = build_options_from(cfg);
  EXPECT_EQ(o.split.train, 0.5);
  EXPECT_EQ(o.split.seed, 9u);
  EXPECT_EQ(o.min_tokens, 3u);
  EXPECT_FALSE(o.balance);
  EXPECT_EQ(o.equalize_groups, std::optional<std::size_t>(12));
}

}  // namespace
}  // namespace planprobe
