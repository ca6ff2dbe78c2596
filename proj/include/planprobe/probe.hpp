#ifndef PLANPROBE_PROBE_HPP
#define PLANPROBE_PROBE_HPP

// One-hidden-layer ReLU probes on single-layer activation features.
//
// Training runs in 32-bit parameters with 64-bit loss, statistic and metric
// accumulators; gradient_check evaluates the same kernels in 64-bit. One
// training job is single-threaded and fully determined by (data, config).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "planprobe/binary_io.hpp"
#include "planprobe/error.hpp"
#include "planprobe/labeling.hpp"
#include "planprobe/metrics.hpp"
#include "planprobe/rng.hpp"

namespace planprobe {

inline constexpr std::array<int, 11> kHiddenSizes = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};

inline bool is_valid_hidden_size(int h) {
  return std::find(kHiddenSizes.begin(), kHiddenSizes.end(), h) != kHiddenSizes.end();
}

inline std::string hidden_sizes_text() {
  std::string s = "{";
  for (std::size_t i = 0; i < kHiddenSizes.size(); ++i) s += (i ? ", " : "") + std::to_string(kHiddenSizes[i]);
  return s + "}";
}

/// Row-major float matrix of examples x features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  std::span<float> row(std::size_t i) { return std::span<float>(data).subspan(i * cols, cols); }
  std::span<const float> row(std::size_t i) const { return std::span<const float>(data).subspan(i * cols, cols); }
};

/// Features with one target per row. Classification targets hold the class
/// index as a double.
struct ProbeData {
  FeatureMatrix features;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
};

struct ProbeConfig {
  int hidden_size = 16;
  int layer = 0;
  /// 0 for regression, K for K-class classification.
  int num_classes = 0;
  int epochs = 400;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool standardize = true;

  bool is_classification() const { return num_classes > 0; }
  int out_dim() const { return num_classes > 0 ? num_classes : 1; }

  void check() const {
    if (!is_valid_hidden_size(hidden_size)) {
      fail(ErrorKind::kUsage, "hidden size " + std::to_string(hidden_size) + " is not in W = " + hidden_sizes_text());
    }
    if (epochs < 1) fail(ErrorKind::kUsage, "epochs must be positive");
    if (batch_size < 1) fail(ErrorKind::kUsage, "batch size must be positive");
    if (!(learning_rate > 0)) fail(ErrorKind::kUsage, "learning rate must be positive");
    if (num_classes == 1 || num_classes < 0) fail(ErrorKind::kUsage, "classification needs at least 2 classes");
  }
};

inline void to_json(nlohmann::json& j, const ProbeConfig& c) {
  j = nlohmann::json{{"hidden_size", c.hidden_size}, {"layer", c.layer},       {"num_classes", c.num_classes},
                     {"epochs", c.epochs},           {"seed", c.seed},         {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},   {"beta1", c.beta1},       {"beta2", c.beta2},
                     {"epsilon", c.epsilon},         {"standardize", c.standardize},
                     {"optimizer", "adam"}};
}

inline void from_json(const nlohmann::json& j, ProbeConfig& c) {
  c.hidden_size = j.at("hidden_size").get<int>();
  c.layer = j.at("layer").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.epochs = j.value("epochs", 400);
  c.seed = j.value("seed", std::uint64_t{0});
  c.learning_rate = j.value("learning_rate", 1e-3);
  c.batch_size = j.value("batch_size", 64);
  c.beta1 = j.value("beta1", 0.9);
  c.beta2 = j.value("beta2", 0.999);
  c.epsilon = j.value("epsilon", 1e-8);
  c.standardize = j.value("standardize", true);
}

// ---------------------------------------------------------------------------
// Network kernels, shared by training (float) and gradient checking (double).

namespace mlp {

/// w1 is stored input-major (in x hidden) so both the forward pass and the
/// weight gradient are contiguous axpy loops over the hidden units; w2 is
/// out x hidden.
template <typename T>
struct Params {
  int in = 0;
  int hidden = 0;
  int out = 0;
  std::vector<T> w1, b1, w2, b2;

  Params() = default;
  Params(int in_dim, int hidden_dim, int out_dim)
      : in(in_dim),
        hidden(hidden_dim),
        out(out_dim),
        w1(static_cast<std::size_t>(in_dim) * hidden_dim),
        b1(static_cast<std::size_t>(hidden_dim)),
        w2(static_cast<std::size_t>(out_dim) * hidden_dim),
        b2(static_cast<std::size_t>(out_dim)) {}

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  /// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
  void init(Rng& rng) {
    const double a1 = std::sqrt(6.0 / (in + hidden));
    for (auto& w : w1) w = static_cast<T>(rng.uniform(-a1, a1));
    const double a2 = std::sqrt(6.0 / (hidden + out));
    for (auto& w : w2) w = static_cast<T>(rng.uniform(-a2, a2));
    std::fill(b1.begin(), b1.end(), T{0});
    std::fill(b2.begin(), b2.end(), T{0});
  }

  void zero() {
    std::fill(w1.begin(), w1.end(), T{0});
    std::fill(b1.begin(), b1.end(), T{0});
    std::fill(w2.begin(), w2.end(), T{0});
    std::fill(b2.begin(), b2.end(), T{0});
  }

  /// Visits every parameter buffer in a fixed order.
  template <typename F>
  void for_each_buffer(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
};

template <typename T>
inline void axpy(T* __restrict y, T a, const T* __restrict x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline double dot(const T* __restrict a, const T* __restrict b, int n) {
  // Eight partial sums keep the loop vectorizable without reassociation flags.
  T acc[8] = {};
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  }
  double total = 0.0;
  for (int k = 0; k < 8; ++k) total += static_cast<double>(acc[k]);
  for (; i < n; ++i) total += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return total;
}

template <typename T>
struct Workspace {
  std::vector<T> z, a, da;
  std::vector<double> logits, dlogits;

  void reserve(int batch, const Params<T>& p) {
    z.resize(static_cast<std::size_t>(batch) * p.hidden);
    a.resize(z.size());
    da.resize(static_cast<std::size_t>(p.hidden));
    logits.resize(static_cast<std::size_t>(batch) * p.out);
    dlogits.resize(logits.size());
  }
};

/// Register-blocked micro-kernel. Column blocks of 8, 4, 2 and 1 vectors
/// keep their accumulators in registers; a scalar loop covers the remainder.
template <typename T>
struct BlockKernel {
  using Vec [[gnu::vector_size(32)]] = T;
  static constexpr int kLanes = static_cast<int>(32 / sizeof(T));

  static Vec load(const T* p) {
    Vec v;
    std::memcpy(&v, p, sizeof v);
    return v;
  }
  static void store(T* p, Vec v) { std::memcpy(p, &v, sizeof v); }

  /// Columns [j0, j0 + V*kLanes) of the product. The B column block is packed
  /// contiguously first: rows of B are typically a power-of-two stride apart
  /// and would otherwise collide in L1 sets.
  template <int V>
  static void block(int j0, int rows, int depth, const T* a, std::size_t a_rs, std::size_t a_cs, const T* b,
                    std::size_t b_rs, const T* init, std::size_t init_rs, T* y, std::size_t y_rs,
                    std::vector<T>& packed) {
    constexpr int w = V * kLanes;
    packed.resize(static_cast<std::size_t>(depth) * w);
    for (int q = 0; q < depth; ++q) {
      std::memcpy(packed.data() + static_cast<std::size_t>(q) * w, b + q * b_rs + j0, w * sizeof(T));
    }
    for (int r = 0; r < rows; ++r) {
      Vec acc[V];
      const T* in = init + r * init_rs + j0;
      for (int v = 0; v < V; ++v) acc[v] = load(in + v * kLanes);
      const T* ar = a + r * a_rs;
      const T* br = packed.data();
      for (int q = 0; q < depth; ++q, br += w) {
        const T coef = ar[q * a_cs];
        for (int v = 0; v < V; ++v) acc[v] += coef * load(br + v * kLanes);
      }
      T* out = y + r * y_rs + j0;
      for (int v = 0; v < V; ++v) store(out + v * kLanes, acc[v]);
    }
  }

  /// Y[r][j] = init[r][j] + sum_q A[r*a_rs + q*a_cs] * B[q*b_rs + j] for j in
  /// [0, n), r in [0, rows), q in [0, depth). init may alias Y.
  static void run(int rows, int depth, int n, const T* a, std::size_t a_rs, std::size_t a_cs, const T* b,
                  std::size_t b_rs, const T* init, std::size_t init_rs, T* y, std::size_t y_rs) {
    thread_local std::vector<T> packed;
    int j0 = 0;
    for (; j0 + 8 * kLanes <= n; j0 += 8 * kLanes) {
      block<8>(j0, rows, depth, a, a_rs, a_cs, b, b_rs, init, init_rs, y, y_rs, packed);
    }
    if (j0 + 4 * kLanes <= n) {
      block<4>(j0, rows, depth, a, a_rs, a_cs, b, b_rs, init, init_rs, y, y_rs, packed);
      j0 += 4 * kLanes;
    }
    if (j0 + 2 * kLanes <= n) {
      block<2>(j0, rows, depth, a, a_rs, a_cs, b, b_rs, init, init_rs, y, y_rs, packed);
      j0 += 2 * kLanes;
    }
    if (j0 + kLanes <= n) {
      block<1>(j0, rows, depth, a, a_rs, a_cs, b, b_rs, init, init_rs, y, y_rs, packed);
      j0 += kLanes;
    }
    if (j0 == n) return;
    for (int r = 0; r < rows; ++r) {
      const T* ar = a + r * a_rs;
      T* out = y + r * y_rs;
      const T* in = init + r * init_rs;
      for (int j = j0; j < n; ++j) {
        T acc = in[j];
        for (int q = 0; q < depth; ++q) acc += ar[q * a_cs] * b[q * b_rs + j];
        out[j] = acc;
      }
    }
  }
};

/// Forward pass for `batch` rows of x (each p.in wide). Fills ws.z, ws.a and
/// ws.logits.
template <typename T>
void forward(const Params<T>& p, const T* x, int batch, Workspace<T>& ws) {
  ws.reserve(batch, p);
  const int h = p.hidden;
  // z = b1 + x * w1: rows are batch examples, depth runs over inputs.
  BlockKernel<T>::run(batch, p.in, h, x, p.in, 1, p.w1.data(), h, p.b1.data(), 0, ws.z.data(), h);
  for (std::size_t k = 0; k < ws.z.size(); ++k) ws.a[k] = ws.z[k] > T{0} ? ws.z[k] : T{0};
  for (int b = 0; b < batch; ++b) {
    const T* act = ws.a.data() + static_cast<std::size_t>(b) * h;
    for (int o = 0; o < p.out; ++o) {
      ws.logits[static_cast<std::size_t>(b) * p.out + o] =
          static_cast<double>(p.b2[o]) + dot(p.w2.data() + static_cast<std::size_t>(o) * h, act, h);
    }
  }
}

/// Mean loss over the batch (squared error against targets, or softmax
/// cross-entropy against class indices) after forward(); also writes
/// dLoss/dlogits into ws.dlogits.
template <typename T>
double loss_and_dlogits(const Params<T>& p, const double* targets, int batch, bool classification,
                        Workspace<T>& ws) {
  double total = 0.0;
  const double inv = 1.0 / batch;
  for (int b = 0; b < batch; ++b) {
    const double* logit = ws.logits.data() + static_cast<std::size_t>(b) * p.out;
    double* grad = ws.dlogits.data() + static_cast<std::size_t>(b) * p.out;
    if (!classification) {
      const double diff = logit[0] - targets[b];
      total += diff * diff;
      grad[0] = 2.0 * diff * inv;
    } else {
      const double m = *std::max_element(logit, logit + p.out);
      double z = 0.0;
      for (int o = 0; o < p.out; ++o) z += std::exp(logit[o] - m);
      const auto label = static_cast<int>(targets[b]);
      total += -(logit[label] - m - std::log(z));
      for (int o = 0; o < p.out; ++o) grad[o] = (std::exp(logit[o] - m) / z - (o == label ? 1.0 : 0.0)) * inv;
    }
  }
  return total * inv;
}

/// Accumulates parameter gradients into g (which the caller zeroes).
template <typename T>
void backward(const Params<T>& p, const T* x, int batch, Workspace<T>& ws, Params<T>& g) {
  const int h = p.hidden;
  // ws.z is reused in place as dLoss/dz.
  for (int b = 0; b < batch; ++b) {
    const T* act = ws.a.data() + static_cast<std::size_t>(b) * h;
    std::fill(ws.da.begin(), ws.da.end(), T{0});
    for (int o = 0; o < p.out; ++o) {
      const T d = static_cast<T>(ws.dlogits[static_cast<std::size_t>(b) * p.out + o]);
      g.b2[o] += d;
      axpy(g.w2.data() + static_cast<std::size_t>(o) * h, d, act, h);
      axpy(ws.da.data(), d, p.w2.data() + static_cast<std::size_t>(o) * h, h);
    }
    T* dz = ws.z.data() + static_cast<std::size_t>(b) * h;
    for (int j = 0; j < h; ++j) {
      dz[j] = dz[j] > T{0} ? ws.da[j] : T{0};
      g.b1[j] += dz[j];
    }
  }
  // gw1 += x^T * dz: rows are inputs, depth runs over batch examples.
  BlockKernel<T>::run(p.in, batch, h, x, 1, p.in, ws.z.data(), h, g.w1.data(), h, g.w1.data(), h);
}

/// Loss only (no gradient), for finite differences.
template <typename T>
double loss(const Params<T>& p, const T* x, const double* targets, int batch, bool classification) {
  Workspace<T> ws;
  forward(p, x, batch, ws);
  return loss_and_dlogits(p, targets, batch, classification, ws);
}

/// Adam with PyTorch's bias-correction arrangement.
template <typename T>
class Adam {
 public:
  Adam(const Params<T>& shape, double lr, double beta1, double beta2, double eps)
      : m_(shape), v_(shape), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.zero();
    v_.zero();
  }

  void step(Params<T>& p, Params<T>& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    const T step = static_cast<T>(lr_ / bc1);
    const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T one_b1 = static_cast<T>(1.0 - beta1_), one_b2 = static_cast<T>(1.0 - beta2_);
    const T eps = static_cast<T>(eps_);
    auto update = [&](std::vector<T>& param, std::vector<T>& grad, std::vector<T>& m, std::vector<T>& v) {
      T* __restrict pp = param.data();
      const T* __restrict gp = grad.data();
      T* __restrict mp = m.data();
      T* __restrict vp = v.data();
      const std::size_t n = param.size();
      for (std::size_t i = 0; i < n; ++i) {
        mp[i] = b1 * mp[i] + one_b1 * gp[i];
        vp[i] = b2 * vp[i] + one_b2 * gp[i] * gp[i];
        pp[i] -= step * mp[i] / (std::sqrt(vp[i]) * inv_sqrt_bc2 + eps);
      }
    };
    update(p.w1, g.w1, m_.w1, v_.w1);
    update(p.b1, g.b1, m_.b1, v_.b1);
    update(p.w2, g.w2, m_.w2, v_.w2);
    update(p.b2, g.b2, m_.b2, v_.b2);
  }

 private:
  Params<T> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

}  // namespace mlp

// ---------------------------------------------------------------------------
// Model

struct ProbeModel {
  int input_dim = 0;
  int hidden_size = 0;
  /// 0 for regression.
  int num_classes = 0;
  bool standardized = true;
  /// Train-split feature statistics; std of a constant feature is stored as 1.
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  /// Train-split target statistics (regression only; identity otherwise).
  double target_mean = 0.0;
  double target_std = 1.0;
  mlp::Params<float> params;

  int out_dim() const { return num_classes > 0 ? num_classes : 1; }
  bool is_classification() const { return num_classes > 0; }

  friend bool operator==(const ProbeModel& a, const ProbeModel& b) {
    return a.input_dim == b.input_dim && a.hidden_size == b.hidden_size && a.num_classes == b.num_classes &&
           a.standardized == b.standardized && a.feature_mean == b.feature_mean && a.feature_std == b.feature_std &&
           a.target_mean == b.target_mean && a.target_std == b.target_std && a.params.w1 == b.params.w1 &&
           a.params.b1 == b.params.b1 && a.params.w2 == b.params.w2 && a.params.b2 == b.params.b2;
  }
};

struct TrainingCurve {
  std::vector<double> train_loss;
  std::vector<double> val_metric;
  int best_epoch = 0;
};

struct TrainResult {
  ProbeModel model;
  TrainingCurve curve;
};

struct Prediction {
  /// Regression value in target units, or the argmax class index.
  double value = 0.0;
  /// Softmax probabilities (classification only).
  std::vector<double> probabilities;
};

namespace detail {

inline void standardize_into(const ProbeModel& m, std::span<const float> raw, float* out) {
  if (!m.standardized) {
    std::copy(raw.begin(), raw.end(), out);
    return;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>((static_cast<double>(raw[i]) - m.feature_mean[i]) / m.feature_std[i]);
  }
}

inline FeatureMatrix standardize_all(const ProbeModel& m, const FeatureMatrix& raw) {
  FeatureMatrix out(raw.rows, raw.cols);
  for (std::size_t r = 0; r < raw.rows; ++r) standardize_into(m, raw.row(r), out.row(r).data());
  return out;
}

/// Largest-logit class, lowest index on ties.
inline int argmax_lowest(std::span<const double> scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

/// Predictions (target units / class index) for already-standardized rows.
inline std::vector<double> predict_standardized(const ProbeModel& m, const FeatureMatrix& x,
                                                std::vector<std::vector<double>>* probabilities = nullptr) {
  std::vector<double> out(x.rows);
  mlp::Workspace<float> ws;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < x.rows; start += kChunk) {
    const int n = static_cast<int>(std::min(kChunk, x.rows - start));
    mlp::forward(m.params, x.data.data() + start * x.cols, n, ws);
    for (int b = 0; b < n; ++b) {
      std::span<const double> logits(ws.logits.data() + static_cast<std::size_t>(b) * m.out_dim(),
                                     static_cast<std::size_t>(m.out_dim()));
      if (m.is_classification()) {
        out[start + b] = argmax_lowest(logits);
        if (probabilities) probabilities->push_back(softmax(logits));
      } else {
        out[start + b] = logits[0] * m.target_std + m.target_mean;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Batch prediction on raw (unstandardized) features.
inline std::vector<double> predict(const ProbeModel& model, const FeatureMatrix& features,
                                   std::vector<std::vector<double>>* probabilities = nullptr) {
  if (features.cols != static_cast<std::size_t>(model.input_dim)) {
    fail(ErrorKind::kShape, "feature dimension " + std::to_string(features.cols) + " does not match probe input " +
                                std::to_string(model.input_dim));
  }
  return detail::predict_standardized(model, detail::standardize_all(model, features), probabilities);
}

inline Prediction predict(const ProbeModel& model, std::span<const float> features) {
  FeatureMatrix one(1, features.size());
  std::copy(features.begin(), features.end(), one.data.begin());
  std::vector<std::vector<double>> probs;
  Prediction p;
  p.value = predict(model, one, model.is_classification() ? &probs : nullptr).front();
  if (!probs.empty()) p.probabilities = std::move(probs.front());
  return p;
}

// ---------------------------------------------------------------------------
// Training

inline TrainResult train_probe(const ProbeData& train, const ProbeData& val, const ProbeConfig& config) {
  config.check();
  if (train.size() == 0 || val.size() == 0) fail(ErrorKind::kData, "train and validation sets must be nonempty");
  if (train.features.rows != train.size() || val.features.rows != val.size()) {
    fail(ErrorKind::kShape, "feature rows and target counts differ");
  }
  if (train.features.cols != val.features.cols || train.features.cols == 0) {
    fail(ErrorKind::kShape, "train and validation feature dimensions differ");
  }
  const std::size_t d = train.features.cols;
  const bool classification = config.is_classification();
  if (classification) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(config.num_classes));
    auto check_labels = [&](const ProbeData& data, bool count) {
      for (double t : data.targets) {
        const auto c = static_cast<long>(t);
        if (static_cast<double>(c) != t || c < 0 || c >= config.num_classes) {
          fail(ErrorKind::kData, "class label " + std::to_string(t) + " outside [0, " +
                                     std::to_string(config.num_classes - 1) + "]");
        }
        if (count) ++counts[static_cast<std::size_t>(c)];
      }
    };
    check_labels(train, true);
    check_labels(val, false);
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) fail(ErrorKind::kData, "class " + std::to_string(c) + " has no training examples");
    }
  }

  ProbeModel model;
  model.input_dim = static_cast<int>(d);
  model.hidden_size = config.hidden_size;
  model.num_classes = config.num_classes;
  model.standardized = config.standardize;
  model.feature_mean.assign(d, 0.0);
  model.feature_std.assign(d, 1.0);
  if (config.standardize) {
    for (std::size_t r = 0; r < train.size(); ++r) {
      const auto row = train.features.row(r);
      for (std::size_t i = 0; i < d; ++i) model.feature_mean[i] += row[i];
    }
    for (auto& m : model.feature_mean) m /= static_cast<double>(train.size());
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < train.size(); ++r) {
      const auto row = train.features.row(r);
      for (std::size_t i = 0; i < d; ++i) {
        const double dev = row[i] - model.feature_mean[i];
        var[i] += dev * dev;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      const double s = std::sqrt(var[i] / static_cast<double>(train.size()));
      model.feature_std[i] = s > 0 ? s : 1.0;
    }
  }
  std::vector<double> targets = train.targets;
  if (!classification) {
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    const double s = std::sqrt(var / static_cast<double>(targets.size()));
    model.target_mean = mean;
    model.target_std = s > 0 ? s : 1.0;
    for (auto& t : targets) t = (t - model.target_mean) / model.target_std;
  }

  const FeatureMatrix x_train = detail::standardize_all(model, train.features);
  const FeatureMatrix x_val = detail::standardize_all(model, val.features);

  mlp::Params<float> params(static_cast<int>(d), config.hidden_size, config.out_dim());
  Rng init_rng(derive_seed(config.seed, 0));
  params.init(init_rng);
  mlp::Params<float> grads(static_cast<int>(d), config.hidden_size, config.out_dim());
  mlp::Adam<float> adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  Rng order_rng(derive_seed(config.seed, 1));

  const std::size_t n = train.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<float> xb(batch * d);
  std::vector<double> yb(batch);
  mlp::Workspace<float> ws;

  TrainResult result;
  result.curve.train_loss.reserve(static_cast<std::size_t>(config.epochs));
  result.curve.val_metric.reserve(static_cast<std::size_t>(config.epochs));
  double best = -std::numeric_limits<double>::infinity();
  mlp::Params<float> best_params = params;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      for (std::size_t b = 0; b < m; ++b) {
        const auto src = x_train.row(order[start + b]);
        std::copy(src.begin(), src.end(), xb.begin() + static_cast<std::ptrdiff_t>(b * d));
        yb[b] = targets[order[start + b]];
      }
      mlp::forward(params, xb.data(), static_cast<int>(m), ws);
      const double loss = mlp::loss_and_dlogits(params, yb.data(), static_cast<int>(m), classification, ws);
      if (!std::isfinite(loss)) {
        char lr[32];
        std::snprintf(lr, sizeof lr, "%g", config.learning_rate);
        fail(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) + " with learning rate " + lr);
      }
      epoch_loss += loss * static_cast<double>(m);
      grads.zero();
      mlp::backward(params, xb.data(), static_cast<int>(m), ws, grads);
      adam.step(params, grads);
    }
    result.curve.train_loss.push_back(epoch_loss / static_cast<double>(n));

    model.params = params;
    const auto pred = detail::predict_standardized(model, x_val);
    for (double p : pred) {
      if (!std::isfinite(p)) {
        fail(ErrorKind::kDivergence, "non-finite validation prediction at epoch " + std::to_string(epoch));
      }
    }
    double metric = 0.0;
    if (val.size() >= 2 || classification) {
      metric = evaluate_selection(pred, val.targets, config.num_classes).value;
    }
    result.curve.val_metric.push_back(metric);
    if (metric > best) {
      best = metric;
      best_params = params;
      result.curve.best_epoch = epoch;
    }
  }
  model.params = std::move(best_params);
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Parameters whose finite-difference stencil crosses a ReLU kink; the
  /// loss is not differentiable there, so they are not compared.
  std::size_t skipped_at_kink = 0;
};

/// Compares analytic gradients (64-bit) against central differences with the
/// given step for every parameter. `features` rows are used as-is.
inline GradientCheckResult gradient_check(const ProbeConfig& config, const FeatureMatrix& features,
                                          std::span<const double> targets, double step = 1e-4) {
  config.check();
  if (features.rows == 0 || features.rows > 8) fail(ErrorKind::kShape, "gradient check takes 1..8 examples");
  if (targets.size() != features.rows) fail(ErrorKind::kShape, "target count differs from feature rows");
  const int batch = static_cast<int>(features.rows);
  const int d = static_cast<int>(features.cols);
  const bool classification = config.is_classification();

  mlp::Params<double> p(d, config.hidden_size, config.out_dim());
  Rng rng(derive_seed(config.seed, 0));
  p.init(rng);
  // Nonzero biases so the bias gradients are exercised away from symmetric points.
  Rng bias_rng(derive_seed(config.seed, 2));
  for (auto& b : p.b1) b = bias_rng.uniform(-0.1, 0.1);
  for (auto& b : p.b2) b = bias_rng.uniform(-0.1, 0.1);

  std::vector<double> x(features.data.begin(), features.data.end());
  std::vector<double> y(targets.begin(), targets.end());
  mlp::Workspace<double> ws;
  mlp::forward(p, x.data(), batch, ws);
  mlp::loss_and_dlogits(p, y.data(), batch, classification, ws);
  mlp::Params<double> g(d, config.hidden_size, config.out_dim());
  g.zero();
  mlp::backward(p, x.data(), batch, ws, g);

  auto pattern = [&](const mlp::Params<double>& params) {
    mlp::Workspace<double> w;
    mlp::forward(params, x.data(), batch, w);
    std::vector<bool> active(w.z.size());
    for (std::size_t k = 0; k < w.z.size(); ++k) active[k] = w.z[k] > 0;
    return active;
  };
  const auto base_pattern = pattern(p);

  GradientCheckResult result;
  std::vector<std::vector<double>*> param_buffers{&p.w1, &p.b1, &p.w2, &p.b2};
  std::vector<std::vector<double>*> grad_buffers{&g.w1, &g.b1, &g.w2, &g.b2};
  for (std::size_t buf = 0; buf < param_buffers.size(); ++buf) {
    auto& values = *param_buffers[buf];
    const auto& analytic = *grad_buffers[buf];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = mlp::loss(p, x.data(), y.data(), batch, classification);
      const bool kink_up = buf < 2 && pattern(p) != base_pattern;
      values[i] = saved - step;
      const double down = mlp::loss(p, x.data(), y.data(), batch, classification);
      const bool kink_down = buf < 2 && pattern(p) != base_pattern;
      values[i] = saved;
      if (kink_up || kink_down) {
        ++result.skipped_at_kink;
        continue;
      }
      const double numeric = (up - down) / (2 * step);
      const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[i] - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization: versioned little-endian binary + JSON metadata.

inline constexpr char kProbeMagic[8] = {'P', 'L', 'N', 'P', 'R', 'M', 'D', 'L'};
inline constexpr std::uint16_t kProbeVersion = 1;

/// Binary layout: magic | u16 version | u32 input_dim | u32 hidden | u32
/// num_classes | u8 standardized | f64 target_mean | f64 target_std |
/// f64 feature_mean[d] | f64 feature_std[d] | f32 W1[hidden][d] |
/// f32 b1[hidden] | f32 W2[out][hidden] | f32 b2[out].
inline std::string encode_probe(const ProbeModel& m) {
  std::string out(kProbeMagic, sizeof kProbeMagic);
  binary::put<std::uint16_t>(out, kProbeVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.input_dim));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.hidden_size));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.num_classes));
  binary::put<std::uint8_t>(out, m.standardized ? 1 : 0);
  binary::put<double>(out, m.target_mean);
  binary::put<double>(out, m.target_std);
  for (double v : m.feature_mean) binary::put<double>(out, v);
  for (double v : m.feature_std) binary::put<double>(out, v);
  for (int j = 0; j < m.hidden_size; ++j) {
    for (int i = 0; i < m.input_dim; ++i) {
      binary::put<float>(out, m.params.w1[static_cast<std::size_t>(i) * m.hidden_size + j]);
    }
  }
  binary::put_floats(out, m.params.b1);
  binary::put_floats(out, m.params.w2);
  binary::put_floats(out, m.params.b2);
  return out;
}

inline ProbeModel decode_probe(std::span<const std::byte> bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kProbeMagic, 8) != 0) {
    fail(ErrorKind::kFormat, "not a probe model file (bad magic)");
  }
  binary::Cursor c(bytes.subspan(8), 8);
  if (c.get<std::uint16_t>() != kProbeVersion) fail(ErrorKind::kFormat, "unsupported probe model version");
  ProbeModel m;
  m.input_dim = static_cast<int>(c.get<std::uint32_t>());
  m.hidden_size = static_cast<int>(c.get<std::uint32_t>());
  m.num_classes = static_cast<int>(c.get<std::uint32_t>());
  m.standardized = c.get<std::uint8_t>() != 0;
  m.target_mean = c.get<double>();
  m.target_std = c.get<double>();
  const auto d = static_cast<std::size_t>(m.input_dim);
  m.feature_mean.resize(d);
  m.feature_std.resize(d);
  for (auto& v : m.feature_mean) v = c.get<double>();
  for (auto& v : m.feature_std) v = c.get<double>();
  m.params = mlp::Params<float>(m.input_dim, m.hidden_size, m.out_dim());
  for (int j = 0; j < m.hidden_size; ++j) {
    for (int i = 0; i < m.input_dim; ++i) m.params.w1[static_cast<std::size_t>(i) * m.hidden_size + j] = c.get<float>();
  }
  for (auto* buf : {&m.params.b1, &m.params.w2, &m.params.b2}) {
    binary::get_floats(c.take(buf->size() * 4), *buf);
  }
  if (c.remaining() != 0) fail(ErrorKind::kCorruption, "trailing bytes after probe model");
  return m;
}

struct ProbeMetadata {
  ProbeConfig config;
  int best_epoch = 0;
  std::string task_id;
  /// SHA-256 of the training inputs (activation file, dataset manifest).
  std::map<std::string, std::string> data_hashes;
};

inline void save_probe(const std::filesystem::path& path, const ProbeModel& model, const ProbeMetadata& meta) {
  const auto bytes = encode_probe(model);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  nlohmann::json j{{"config", meta.config},
                   {"best_epoch", meta.best_epoch},
                   {"task_id", meta.task_id},
                   {"data_hashes", meta.data_hashes},
                   {"model_sha256", sha256_hex(bytes)}};
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  out << j.dump(2) << '\n';
}

inline std::pair<ProbeModel, ProbeMetadata> load_probe(const std::filesystem::path& path) {
  const auto bytes = detail::read_text_file(path);
  auto model = decode_probe(std::as_bytes(std::span<const char>(bytes)));
  ProbeMetadata meta;
  std::ifstream in(path.string() + ".json");
  if (in) {
    const auto j = nlohmann::json::parse(in);
    meta.config = j.at("config").get<ProbeConfig>();
    meta.best_epoch = j.value("best_epoch", 0);
    meta.task_id = j.value("task_id", "");
    meta.data_hashes = j.value("data_hashes", std::map<std::string, std::string>{});
  }
  return {std::move(model), std::move(meta)};
}

}  // namespace planprobe

#endif  // PLANPROBE_PROBE_HPP
