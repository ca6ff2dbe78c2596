#include <cmath>

#include "helpers.hpp"
#include "planprobe/selfcheck.hpp"

namespace planprobe {
namespace {

TEST(Metrics, HandComputedValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 1, 4, 3, 5};
  EXPECT_NEAR(spearman(x, y).value, 0.8, 1e-12);
  EXPECT_NEAR(kendall_tau_b(x, y).value, 0.6, 1e-12);
  EXPECT_NEAR(pearson(x, y).value, 0.8, 1e-12);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, rev).value, -1.0);
  EXPECT_DOUBLE_EQ(kendall_tau_b(x, rev).value, -1.0);
}

TEST(Metrics, KendallTauBWithTies) {
  // Concordant 4, discordant 0, ties in x 1, ties in y 1 over 6 pairs.
  const std::vector<double> x{1, 1, 2, 3};
  const std::vector<double> y{1, 2, 2, 3};
  EXPECT_NEAR(kendall_tau_b(x, y).value, 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(kendall_tau_b(x, y).value, oracle::kendall_tau_b(x, y), 1e-15);
}

TEST(Metrics, ConstantInputIsDegenerateZero) {
  const std::vector<double> x{3, 3, 3, 3};
  const std::vector<double> y{1, 2, 3, 4};
  for (const auto& m : {spearman(x, y), kendall_tau_b(x, y), pearson(x, y), pearson(y, x)}) {
    EXPECT_TRUE(m.degenerate) << m.name;
    EXPECT_EQ(m.value, 0.0) << m.name;
    EXPECT_EQ(m.n, 4u);
  }
}

TEST(Metrics, ShapeAndDataErrors) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 2};
  EXPECT_EQ(testing::kind_of([&] { spearman(a, b); }), ErrorKind::kShape);
  EXPECT_EQ(testing::kind_of([&] { pearson(std::vector<double>{1}, std::vector<double>{1}); }), ErrorKind::kShape);
  const std::vector<double> n{1, NAN, 3};
  EXPECT_EQ(testing::kind_of([&] { kendall_tau_b(a, n); }), ErrorKind::kData);
  const std::vector<int> p{0, 1, 5};
  const std::vector<int> t{0, 1, 1};
  EXPECT_ANY_THROW(macro_f1(p, t, 2));
}

TEST(Metrics, MacroF1CountsAbsentClassesAsZero) {
  const std::vector<int> pred{0, 0, 1, 1};
  const std::vector<int> truth{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(macro_f1(pred, truth, 2).value, 1.0);
  // Class 2 never occurs and is never predicted: its F1 is 0.
  EXPECT_NEAR(macro_f1(pred, truth, 3).value, 2.0 / 3.0, 1e-12);
  const std::vector<int> wrong{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(macro_f1(wrong, truth, 2).value, 0.0);
  EXPECT_DOUBLE_EQ(accuracy(wrong, truth).value, 0.0);
}

TEST(Metrics, InvariantUnderMonotoneTransform) {
  Rng rng(3);
  for (int c = 0; c < 50; ++c) {
    auto [x, y] = random_metric_case(rng);
    std::vector<double> fx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fx[i] = std::exp(x[i] / 4.0) * 3.0 - 7.0;
    EXPECT_NEAR(spearman(x, y).value, spearman(fx, y).value, 1e-12);
    EXPECT_NEAR(kendall_tau_b(x, y).value, kendall_tau_b(fx, y).value, 1e-12);
  }
}

TEST(Metrics, SymmetricAndBounded) {
  Rng rng(4);
  for (int c = 0; c < 200; ++c) {
    auto [x, y] = random_metric_case(rng);
    for (auto f : {&spearman, &kendall_tau_b, &pearson}) {
      const auto a = (*f)(x, y);
      const auto b = (*f)(y, x);
      EXPECT_NEAR(a.value, b.value, 1e-12);
      EXPECT_LE(std::abs(a.value), 1.0);
    }
  }
}

TEST(Metrics, MatchOraclesOnSeededCases) {
  const auto r = oracle_equivalence(300, 5);
  EXPECT_EQ(r.cases, 300u);
  EXPECT_LE(r.max_abs_diff, 1e-9) << r.worst;
}

TEST(Metrics, KendallIsSubquadraticOnLargeInputs) {
  Rng rng(8);
  std::vector<double> x(200000), y(200000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(rng.below(1000));
    y[i] = x[i] + rng.normal() * 300;
  }
  const auto m = kendall_tau_b(x, y);
  EXPECT_GT(m.value, 0.5);
  EXPECT_EQ(m.n, x.size());
}

TEST(Metrics, EvaluateAllOrderAndNames) {
  const std::vector<double> p{0, 1, 1, 0};
  const std::vector<double> t{0, 1, 0, 0};
  const auto cls = evaluate_all(p, t, 2);
  ASSERT_EQ(cls.size(), 2u);
  EXPECT_EQ(cls[0].name, "macro_f1");
  EXPECT_EQ(cls[1].name, "accuracy");
  const auto reg = evaluate_all(p, t, 0);
  ASSERT_EQ(reg.size(), 3u);
  EXPECT_EQ(reg[0].name, "spearman");
  EXPECT_EQ(reg[1].name, "kendall");
  EXPECT_EQ(reg[2].name, "pearson");
}

}  // namespace
}  // namespace planprobe
