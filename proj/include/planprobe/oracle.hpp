#ifndef PLANPROBE_ORACLE_HPP
#define PLANPROBE_ORACLE_HPP

// Brute-force reference metrics. Deliberately naive and independent of
// metrics.hpp: quadratic pair counting, quadratic ranking, raw-moment Pearson
// in extended precision, and a dense confusion matrix.

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "planprobe/error.hpp"

namespace planprobe::oracle {

inline constexpr std::size_t kMaxOracleN = 4096;

inline void check(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::kShape, "oracle inputs differ in length");
  if (x.size() < 2) fail(ErrorKind::kShape, "oracle needs at least 2 samples");
  if (x.size() > kMaxOracleN) fail(ErrorKind::kShape, "oracle limited to n <= 4096");
}

/// Raw-moment product-moment correlation; 0 when either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  check(x, y);
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const auto n = static_cast<long double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double vx = n * sxx - sx * sx;
  const long double vy = n * syy - sy * sy;
  bool constant_x = true, constant_y = true;
  for (std::size_t i = 1; i < x.size(); ++i) {
    constant_x = constant_x && x[i] == x[0];
    constant_y = constant_y && y[i] == y[0];
  }
  if (constant_x || constant_y || vx <= 0 || vy <= 0) return 0.0;
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

/// Mid-rank of every element by direct counting.
inline std::vector<double> midranks(std::span<const double> v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i]) ++equal;
    }
    r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  check(x, y);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson(rx, ry);
}

/// Tau-b from explicit enumeration of all pairs.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check(x, y);
  std::int64_t concordant = 0, discordant = 0, tie_x_only = 0, tie_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tie_x_only;
      } else if (dy == 0) {
        ++tie_y_only;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double a = static_cast<double>(concordant + discordant + tie_y_only);
  const double b = static_cast<double>(concordant + discordant + tie_x_only);
  if (a == 0 || b == 0) return 0.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(a * b);
}

inline double macro_f1(std::span<const int> pred, std::span<const int> truth, int k) {
  std::vector<std::vector<std::int64_t>> confusion(static_cast<std::size_t>(k),
                                                   std::vector<std::int64_t>(static_cast<std::size_t>(k)));
  for (std::size_t i = 0; i < pred.size(); ++i) ++confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  double total = 0;
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::int64_t tp = confusion[cu][cu], col = 0, row = 0;
    for (std::size_t o = 0; o < confusion.size(); ++o) {
      col += confusion[o][cu];
      row += confusion[cu][o];
    }
    if (col == 0 && row == 0) continue;
    const double precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    const double recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    total += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return total / k;
}

/// Dispatch by metric name: "pearson", "spearman", "kendall".
inline double brute_force_metric(std::string_view name, std::span<const double> x, std::span<const double> y) {
  if (name == "pearson") return pearson(x, y);
  if (name == "spearman") return spearman(x, y);
  if (name == "kendall") return kendall_tau_b(x, y);
  fail(ErrorKind::kUsage, "unknown oracle metric " + std::string(name));
}

}  // namespace planprobe::oracle

#endif  // PLANPROBE_ORACLE_HPP
