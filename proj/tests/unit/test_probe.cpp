#include <algorithm>
#include <fstream>

#include "helpers.hpp"
#include "planprobe/selfcheck.hpp"

namespace planprobe {
namespace {

using testing::TempDir;

/// y = 2 * x0 - x1 + noise for regression; class = sign pattern for K = 2.
ProbeData linear_data(std::size_t n, std::size_t d, std::uint64_t seed, int classes) {
  Rng rng(seed);
  ProbeData out;
  out.features = FeatureMatrix(n, d);
  out.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.features.row(i);
    for (auto& v : row) v = static_cast<float>(rng.normal() * 3 + 10);
    const double s = 2.0 * (row[0] - 10) - (row[1] - 10) + 0.1 * rng.normal();
    out.targets[i] = classes > 0 ? (s > 0 ? 1.0 : 0.0) : 100 + 5 * s;
  }
  return out;
}

ProbeConfig small_config(int hidden, int classes) {
  ProbeConfig c;
  c.hidden_size = hidden;
  c.num_classes = classes;
  c.epochs = 60;
  c.learning_rate = 1e-2;
  c.batch_size = 32;
  c.seed = 3;
  return c;
}

TEST(Probe, GradientsMatchFiniteDifferences) {
  for (const auto& row : gradient_suite({1, 16, 64}, 1)) {
    EXPECT_LE(row.result.max_relative_error, 1e-4) << "hidden " << row.hidden_size << " classes " << row.num_classes;
    EXPECT_GT(row.result.checked, row.result.skipped_at_kink);
  }
}

TEST(Probe, LearnsLinearRegression) {
  const auto train = linear_data(400, 6, 1, 0);
  const auto val = linear_data(100, 6, 2, 0);
  const auto test = linear_data(200, 6, 3, 0);
  const auto r = train_probe(train, val, small_config(16, 0));
  EXPECT_GT(spearman(predict(r.model, test.features), test.targets).value, 0.95);
  // Targets are de-standardized back to their original scale.
  const auto p = predict(r.model, test.features);
  double mean = 0;
  for (double v : p) mean += v / static_cast<double>(p.size());
  EXPECT_NEAR(mean, 100, 10);
}

TEST(Probe, LearnsBinaryClassification) {
  const auto train = linear_data(400, 6, 1, 2);
  const auto val = linear_data(100, 6, 2, 2);
  const auto test = linear_data(200, 6, 3, 2);
  const auto r = train_probe(train, val, small_config(8, 2));
  const auto pred = predict(r.model, test.features);
  EXPECT_GT(macro_f1(to_classes(pred), to_classes(test.targets), 2).value, 0.9);
  const auto single = predict(r.model, test.features.row(0));
  EXPECT_EQ(single.value, pred[0]);
  ASSERT_EQ(single.probabilities.size(), 2u);
  EXPECT_NEAR(single.probabilities[0] + single.probabilities[1], 1.0, 1e-12);
}

TEST(Probe, TrainingIsDeterministic) {
  const auto train = linear_data(200, 5, 1, 0);
  const auto val = linear_data(50, 5, 2, 0);
  const auto a = train_probe(train, val, small_config(4, 0));
  const auto b = train_probe(train, val, small_config(4, 0));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.curve.val_metric, b.curve.val_metric);
  auto other = small_config(4, 0);
  other.seed = 4;
  EXPECT_FALSE(train_probe(train, val, other).model == a.model);
}

TEST(Probe, KeepsBestValidationEpoch) {
  const auto train = linear_data(200, 5, 1, 0);
  const auto val = linear_data(50, 5, 2, 0);
  const auto r = train_probe(train, val, small_config(4, 0));
  ASSERT_EQ(r.curve.val_metric.size(), 60u);
  ASSERT_EQ(r.curve.train_loss.size(), 60u);
  const auto best = std::max_element(r.curve.val_metric.begin(), r.curve.val_metric.end());
  EXPECT_EQ(r.curve.best_epoch, best - r.curve.val_metric.begin());
  EXPECT_NEAR(spearman(predict(r.model, val.features), val.targets).value, *best, 1e-6);
}

TEST(Probe, StandardizerUsesTrainStatisticsOnly) {
  auto train = linear_data(100, 3, 1, 0);
  for (std::size_t i = 0; i < train.size(); ++i) train.features.row(i)[2] = 7.0f;
  const auto val = linear_data(30, 3, 2, 0);
  const auto r = train_probe(train, val, small_config(2, 0));
  EXPECT_EQ(r.model.feature_std[2], 1.0);
  EXPECT_EQ(r.model.feature_mean[2], 7.0);
  auto raw = small_config(2, 0);
  raw.standardize = false;
  const auto u = train_probe(train, val, raw);
  EXPECT_FALSE(u.model.standardized);
  EXPECT_EQ(u.model.feature_mean, std::vector<double>(3, 0.0));
}

TEST(Probe, RejectsBadConfigAndLabels) {
  const auto train = linear_data(20, 3, 1, 2);
  const auto val = linear_data(10, 3, 2, 2);
  auto c = small_config(3, 2);
  try {
    train_probe(train, val, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
    EXPECT_NE(std::string(e.what()).find("W = {1, 2, 4"), std::string::npos);
  }
  c = small_config(2, 3);
  EXPECT_EQ(testing::kind_of([&] { train_probe(train, val, c); }), ErrorKind::kData);
  c = small_config(2, 2);
  c.learning_rate = 1e12;
  auto huge = train;
  for (auto& v : huge.features.data) v *= 1e30f;
  c.standardize = false;
  EXPECT_EQ(testing::kind_of([&] { train_probe(huge, val, c); }), ErrorKind::kDivergence);
}

TEST(Probe, SaveLoadRoundTrip) {
  TempDir dir;
  const auto train = linear_data(100, 4, 1, 2);
  const auto val = linear_data(30, 4, 2, 2);
  const auto config = small_config(8, 2);
  const auto r = train_probe(train, val, config);
  ProbeMetadata meta{config, r.curve.best_epoch, "task", {{"activations", "abc"}}};
  save_probe(dir / "p.bin", r.model, meta);
  const auto [model, loaded] = load_probe(dir / "p.bin");
  EXPECT_EQ(model, r.model);
  EXPECT_EQ(loaded.best_epoch, meta.best_epoch);
  EXPECT_EQ(loaded.config.hidden_size, 8);
  EXPECT_EQ(loaded.data_hashes, meta.data_hashes);
  EXPECT_EQ(predict(model, val.features), predict(r.model, val.features));

  auto bytes = detail::read_text_file(dir / "p.bin");
  {
    std::ofstream out(dir / "q.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
  }
  EXPECT_EQ(testing::kind_of([&] { load_probe(dir / "q.bin"); }), ErrorKind::kCorruption);
  bytes[0] = 'Z';
  {
    std::ofstream out(dir / "q.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_EQ(testing::kind_of([&] { load_probe(dir / "q.bin"); }), ErrorKind::kFormat);
}

TEST(Probe, EveryHiddenSizeInWTrains) {
  const auto train = linear_data(64, 3, 1, 0);
  const auto val = linear_data(16, 3, 2, 0);
  for (int h : kHiddenSizes) {
    auto c = small_config(h, 0);
    c.epochs = 2;
    const auto r = train_probe(train, val, c);
    EXPECT_EQ(r.model.hidden_size, h);
    EXPECT_EQ(r.model.params.w1.size(), static_cast<std::size_t>(3 * h));
  }
}

}  // namespace
}  // namespace planprobe
