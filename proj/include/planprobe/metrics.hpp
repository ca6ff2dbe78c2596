#ifndef PLANPROBE_METRICS_HPP
#define PLANPROBE_METRICS_HPP

// Correlation and classification scores used to evaluate probes.
//
// Rank statistics are computed in exact integer arithmetic (doubled mid-ranks
// for Spearman, pair counts for Kendall), so their value does not depend on
// the input order and matches the O(n^2) definitions exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "planprobe/error.hpp"

namespace planprobe {

struct MetricReport {
  std::string name;
  double value = 0.0;
  /// Undefined metric (zero variance); value is then reported as 0.
  bool degenerate = false;
  std::size_t n = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorKind::kShape, "metric inputs differ in length (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) fail(ErrorKind::kShape, "correlation needs at least 2 samples, got " + std::to_string(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      fail(ErrorKind::kData, "non-finite metric input at position " + std::to_string(i));
    }
  }
}

inline MetricReport make_report(std::string name, double value, bool degenerate, std::size_t n) {
  if (degenerate) value = 0.0;
  return {std::move(name), std::clamp(value, -1.0, 1.0), degenerate, n};
}

/// Doubled mid-ranks (1-based), so every rank is an integer.
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<std::int64_t> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank ((i+1)+j)/2; doubled: i+1+j.
    const auto r = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

/// Number of tied pairs sum t(t-1)/2 over runs of equal keys in sorted order.
template <typename Eq>
std::uint64_t tied_pairs(std::size_t n, Eq equal_to_prev) {
  std::uint64_t total = 0;
  std::uint64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

/// Sorts `v` ascending and returns the number of strict inversions.
inline std::uint64_t merge_count_inversions(std::vector<double>& v) {
  std::vector<double> buffer(v.size());
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t a = lo, b = mid, out = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          inversions += mid - a;
          buffer[out++] = v[b++];
        } else {
          buffer[out++] = v[a++];
        }
      }
      while (a < mid) buffer[out++] = v[a++];
      while (b < hi) buffer[out++] = v[b++];
    }
    std::swap(v, buffer);
  }
  return inversions;
}

}  // namespace detail

inline MetricReport pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool degenerate = sxx == 0.0 || syy == 0.0;
  return detail::make_report("pearson", degenerate ? 0.0 : sxy / std::sqrt(sxx * syy), degenerate, n);
}

inline MetricReport spearman(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const auto rx = detail::doubled_midranks(x);
  const auto ry = detail::doubled_midranks(y);
  using i128 = __int128;
  i128 sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sa += rx[i];
    sb += ry[i];
    saa += static_cast<i128>(rx[i]) * rx[i];
    sbb += static_cast<i128>(ry[i]) * ry[i];
    sab += static_cast<i128>(rx[i]) * ry[i];
  }
  const auto n = static_cast<i128>(rx.size());
  const i128 cov = n * sab - sa * sb;
  const i128 va = n * saa - sa * sa;
  const i128 vb = n * sbb - sb * sb;
  const bool degenerate = va == 0 || vb == 0;
  const double value =
      degenerate ? 0.0
                 : static_cast<double>(cov) / (std::sqrt(static_cast<double>(va)) * std::sqrt(static_cast<double>(vb)));
  return detail::make_report("spearman", value, degenerate, rx.size());
}

/// Kendall tau-b by Knight's O(n log n) algorithm.
inline MetricReport kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tied_pairs(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const std::uint64_t n3 = detail::tied_pairs(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::uint64_t discordant = detail::merge_count_inversions(ys);
  const std::uint64_t n2 = detail::tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });
  const bool degenerate = n0 == n1 || n0 == n2;
  const auto numerator = static_cast<std::int64_t>(n0 - n1 - n2 + n3) - 2 * static_cast<std::int64_t>(discordant);
  const double value =
      degenerate ? 0.0
                 : static_cast<double>(numerator) /
                       std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return detail::make_report("kendall", value, degenerate, n);
}

namespace detail {

inline void check_labels(std::span<const int> pred, std::span<const int> truth, int k) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::kShape, "prediction and truth lengths differ (" + std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  if (pred.empty()) fail(ErrorKind::kShape, "classification metrics need at least one sample");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k) {
      fail(ErrorKind::kData, "class label out of range [0, " + std::to_string(k - 1) + "] at position " +
                                 std::to_string(i));
    }
  }
}

}  // namespace detail

/// Unweighted mean of per-class F1. A class absent from both predictions and
/// truth contributes 0.
inline MetricReport macro_f1(std::span<const int> pred, std::span<const int> truth, int k) {
  if (k < 1) fail(ErrorKind::kData, "macro_f1 needs at least one class");
  detail::check_labels(pred, truth, k);
  std::vector<std::uint64_t> tp(static_cast<std::size_t>(k)), fp(tp.size()), fn(tp.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      ++tp[static_cast<std::size_t>(pred[i])];
    } else {
      ++fp[static_cast<std::size_t>(pred[i])];
      ++fn[static_cast<std::size_t>(truth[i])];
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    const auto denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) sum += static_cast<double>(2 * tp[c]) / static_cast<double>(denom);
  }
  return {"macro_f1", sum / k, false, pred.size()};
}

inline MetricReport accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) fail(ErrorKind::kShape, "prediction and truth lengths differ");
  if (pred.empty()) fail(ErrorKind::kShape, "accuracy needs at least one sample");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  return {"accuracy", static_cast<double>(correct) / static_cast<double>(pred.size()), false, pred.size()};
}

/// Selection metric name per task kind.
inline const char* selection_metric_name(bool classification) { return classification ? "macro_f1" : "spearman"; }

inline std::vector<int> to_classes(std::span<const double> v) {
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<int>(std::lround(v[i]));
  return out;
}

/// Every reported metric for a task kind: Spearman, Kendall and Pearson for
/// regression; macro-F1 and accuracy for classification. The selection
/// metric always comes first.
inline std::vector<MetricReport> evaluate_all(std::span<const double> pred, std::span<const double> truth,
                                              int num_classes) {
  if (num_classes > 0) {
    const auto p = to_classes(pred);
    const auto t = to_classes(truth);
    return {macro_f1(p, t, num_classes), accuracy(p, t)};
  }
  return {spearman(pred, truth), kendall_tau_b(pred, truth), pearson(pred, truth)};
}

inline MetricReport evaluate_selection(std::span<const double> pred, std::span<const double> truth,
                                       int num_classes) {
  if (num_classes > 0) return macro_f1(to_classes(pred), to_classes(truth), num_classes);
  return spearman(pred, truth);
}

}  // namespace planprobe

#endif  // PLANPROBE_METRICS_HPP
