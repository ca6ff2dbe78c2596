#include <set>

#include "helpers.hpp"

namespace planprobe {
namespace {

TEST(Config, ParsesSectionsScalarsAndLists) {
  const auto c = Config::parse(
      "# top comment\nname = \"run # one\"\n\n[grid]\nhidden_sizes = [1, 16, 128]  # inline\nseeds = []\n"
      "[train]\nlearning_rate = 1e-3\nstandardize = false\nepochs = 12\n");
  EXPECT_EQ(c.get_string("name"), "run # one");
  EXPECT_EQ(c.get_int_list("grid.hidden_sizes"), (std::vector<std::int64_t>{1, 16, 128}));
  EXPECT_EQ(c.get_list("grid.seeds"), std::vector<std::string>{});
  EXPECT_EQ(c.get_double("train.learning_rate", 0), 1e-3);
  EXPECT_FALSE(c.get_bool("train.standardize", true));
  EXPECT_EQ(c.get_int("train.epochs", 0), 12);
  EXPECT_EQ(c.get_int("train.missing", 7), 7);
  EXPECT_FALSE(c.get_int_list("grid.layers").has_value());
  EXPECT_EQ(c.keys().size(), 6u);
}

TEST(Config, ErrorsNameOriginAndLine) {
  auto message = [](std::string_view text) {
    try {
      Config::parse(text, "x.toml");
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("a = 1\n[open\n").find("x.toml:2: unterminated section header"), std::string::npos);
  EXPECT_NE(message("a = 1\nb\n").find("x.toml:2: expected key = value"), std::string::npos);
  EXPECT_NE(message("a = 1\na = 2\n").find("x.toml:2: duplicate key a"), std::string::npos);
  EXPECT_NE(message("a = \"open\n").find("x.toml:1: unterminated string"), std::string::npos);
  EXPECT_NE(message("\n\na = [1, 2\n").find("x.toml:3: unterminated list"), std::string::npos);
  EXPECT_NE(message("a =\n").find("x.toml:1: empty value"), std::string::npos);

  const auto c = Config::parse("[t]\nn = 1.5\nb = yes\nl = [1, 2]\n", "y.toml");
  EXPECT_EQ(testing::kind_of([&] { c.get_int("t.n", 0); }), ErrorKind::kConfig);
  EXPECT_EQ(testing::kind_of([&] { c.get_bool("t.b", false); }), ErrorKind::kConfig);
  EXPECT_EQ(testing::kind_of([&] { c.get_double("t.l", 0); }), ErrorKind::kConfig);
  try {
    c.require_known({"t.n", "t.b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("y.toml:4: unknown key t.l"), std::string::npos);
  }
}

TEST(Config, HashIgnoresLayoutButNotValues) {
  const auto a = Config::parse("[s]\nx = 1\ny = [1,2]\n");
  const auto b = Config::parse("# different layout\n[s]\ny = [ 1 , 2 ]   \n\nx = 1 # same\n");
  const auto c = Config::parse("[s]\nx = 2\ny = [1,2]\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 64u);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Rng, StreamsAreReproducibleAndBounded) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int n : counts) EXPECT_NEAR(n, 10000, 500);
  double sum = 0, sq = 0;
  for (int i = 0; i < 100000; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / 100000, 0.0, 0.02);
  EXPECT_NEAR(sq / 100000, 1.0, 0.02);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(derive_seed(5, s));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_NE(derive_seed(5, 0), derive_seed(6, 0));
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  auto w = v;
  r.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

}  // namespace
}  // namespace planprobe
