#ifndef PLANPROBE_SELFCHECK_HPP
#define PLANPROBE_SELFCHECK_HPP

// Built-in verification: fast metrics against the brute-force oracles, and
// analytic probe gradients against finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "planprobe/metrics.hpp"
#include "planprobe/oracle.hpp"
#include "planprobe/probe.hpp"
#include "planprobe/rng.hpp"

namespace planprobe {

/// Random vector pair of length n in [2, max_n]. Roughly half the cases draw
/// from a small integer range so ties are common.
inline std::pair<std::vector<double>, std::vector<double>> random_metric_case(Rng& rng, std::size_t max_n = 64) {
  const std::size_t n = 2 + rng.below(max_n - 1);
  const bool tied = rng.below(2) == 0;
  const std::uint64_t levels = 1 + rng.below(6);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (tied) {
      x[i] = static_cast<double>(rng.below(levels));
      y[i] = static_cast<double>(rng.below(levels)) + (rng.below(3) == 0 ? x[i] : 0.0);
    } else {
      x[i] = rng.normal();
      y[i] = 0.5 * x[i] + rng.normal();
    }
  }
  return {x, y};
}

struct EquivalenceResult {
  std::size_t cases = 0;
  double max_abs_diff = 0.0;
  std::string worst;
};

/// Compares Spearman, Kendall tau-b, Pearson and macro-F1 with the oracles.
inline EquivalenceResult oracle_equivalence(std::size_t cases = 1000, std::uint64_t seed = 0) {
  EquivalenceResult r;
  Rng rng(seed);
  auto note = [&](double fast, double slow, const std::string& what) {
    const double diff = std::abs(fast - slow);
    if (diff > r.max_abs_diff || !std::isfinite(diff)) {
      r.max_abs_diff = std::isfinite(diff) ? diff : INFINITY;
      r.worst = what;
    }
  };
  for (std::size_t c = 0; c < cases; ++c) {
    const auto [x, y] = random_metric_case(rng);
    const auto tag = " case " + std::to_string(c);
    note(spearman(x, y).value, oracle::spearman(x, y), "spearman" + tag);
    note(kendall_tau_b(x, y).value, oracle::kendall_tau_b(x, y), "kendall" + tag);
    note(pearson(x, y).value, oracle::pearson(x, y), "pearson" + tag);
    const int k = 2 + static_cast<int>(rng.below(5));
    std::vector<int> p(x.size()), t(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      t[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      p[i] = rng.below(2) ? t[i] : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    }
    note(macro_f1(p, t, k).value, oracle::macro_f1(p, t, k), "macro_f1" + tag);
    ++r.cases;
  }
  return r;
}

struct GradientSuiteRow {
  int hidden_size = 0;
  int num_classes = 0;
  GradientCheckResult result;
};

/// Gradient checks for the given hidden sizes, regression and 5-class.
inline std::vector<GradientSuiteRow> gradient_suite(const std::vector<int>& hidden_sizes = {1, 16, 1024},
                                                    std::uint64_t seed = 0) {
  std::vector<GradientSuiteRow> rows;
  Rng rng(seed);
  const std::size_t d = 6, n = 8;
  for (int classes : {0, 5}) {
    for (int h : hidden_sizes) {
      FeatureMatrix x(n, d);
      for (auto& v : x.data) v = static_cast<float>(rng.normal());
      std::vector<double> t(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = classes ? static_cast<double>(i % static_cast<std::size_t>(classes)) : rng.normal();
      }
      ProbeConfig config;
      config.hidden_size = h;
      config.num_classes = classes;
      config.seed = seed + static_cast<std::uint64_t>(h);
      rows.push_back({h, classes, gradient_check(config, x, t)});
    }
  }
  return rows;
}

}  // namespace planprobe

#endif  // PLANPROBE_SELFCHECK_HPP
