/*
 * Copyright 2026 The DIPSGNN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DIPSGNN_TRAINER_HPP_
#define DIPSGNN_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsgnn/common.hpp"
#include "dipsgnn/gnn_model.hpp"
#include "dipsgnn/graph_pipeline.hpp"
#include "dipsgnn/metrics.hpp"
#include "dipsgnn/privacy_accountant.hpp"

namespace dipsgnn {

enum class Method { kDipsgnn, kEdgeRand, kNonPrivate };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kDipsgnn:
      return "dipsgnn";
    case Method::kEdgeRand:
      return "edgerand";
    case Method::kNonPrivate:
      return "nonprivate";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  if (s == "dipsgnn") return Method::kDipsgnn;
  if (s == "edgerand") return Method::kEdgeRand;
  if (s == "nonprivate") return Method::kNonPrivate;
  throw ConfigError("unknown method '" + s + "' (expected dipsgnn, edgerand or nonprivate)");
}

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<int> ks = {5, 10, 20};
  bool exclude_seen = false;
  bool validate_each_epoch = true;
};

/// A labeled prefix together with the graph the model runs on.
struct Sample {
  BehaviorGraph graph;
  std::size_t user = 0;
  std::size_t label = 0;
};

inline std::vector<Sample> prepare_samples(const std::vector<LabeledSequence>& seqs) {
  std::vector<Sample> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back({build_graph(s.items), s.user, s.label});
  return out;
}

/// Graph-structure perturbation baseline: independent N(0, sigma^2) noise
/// on every entry of a_out and of a_in. The transpose relation between the
/// two is not preserved.
inline BehaviorGraph edgerand_perturb(const BehaviorGraph& graph, double sigma,
                                      RandomStream& rng) {
  BehaviorGraph g = graph;
  if (sigma > 0.0) {
    for (Matrix* a : {&g.a_out, &g.a_in}) {
      for (Eigen::Index i = 0; i < a->size(); ++i) a->data()[i] += rng.normal(0.0, sigma);
    }
  }
  return g;
}

/// Per-user encoded (already perturbed) feature rows, indexed by user
/// vocabulary index. Rows may be empty when the schema is empty.
using UserFeatures = std::vector<std::vector<double>>;

class Adam {
 public:
  Adam(const ModelParams& like, const TrainConfig& cfg)
      : lr_(cfg.learning_rate), b1_(cfg.beta1), b2_(cfg.beta2), eps_(cfg.adam_epsilon) {
    m_ = like;
    v_ = like;
    m_.set_zero();
    v_.set_zero();
  }

  void step(ModelParams& params, const ModelParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < kNumTensors; ++k) {
      auto m = m_.tensors[k].array();
      auto v = v_.tensors[k].array();
      const auto g = grad.tensors[k].array();
      m = b1_ * m + (1.0 - b1_) * g;
      v = b2_ * v + (1.0 - b2_) * g.square();
      params.tensors[k].array() -= lr_ * (m / c1) / ((v / c2).sqrt() + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  long long t_ = 0;
  ModelParams m_, v_;
};

struct EpochRecord {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  std::map<int, double> recall;
  std::map<int, double> mrr;
  double wall_time = 0.0;  // seconds since training started
};

struct EvalResult {
  double loss = 0.0;  // mean per sample
  MetricAccumulator metrics{{}};
  std::size_t noisy_passes = 0;
};

inline std::span<const double> features_of(const UserFeatures& f, std::size_t user) {
  if (user >= f.size()) throw ConfigError("no feature row for user index " + std::to_string(user));
  return f[user];
}

/// Logits with the items of the input sequence pushed to the bottom.
inline void mask_seen(Vector& logits, const BehaviorGraph& g) {
  for (std::size_t id : g.node_ids) {
    logits(static_cast<Eigen::Index>(id)) = std::numeric_limits<double>::lowest();
  }
}

/// Forward-only evaluation. With sigma > 0 every pass draws fresh
/// aggregation noise from `rng`.
inline EvalResult evaluate(const ModelParams& params, const ModelConfig& cfg,
                           const std::vector<Sample>& samples, const UserFeatures& features,
                           double sigma, RandomStream rng, const std::vector<int>& ks,
                           bool exclude_seen = false) {
  EvalResult r;
  r.metrics = MetricAccumulator(ks);
  ForwardCache cache;
  double total = 0.0;
  for (const auto& s : samples) {
    const auto out =
        forward(params, cfg, s.graph, features_of(features, s.user), s.label, sigma, rng, cache);
    total += out.loss;
    if (exclude_seen) mask_seen(cache.logits, s.graph);
    r.metrics.add(std::span<const double>(cache.logits.data(), cache.logits.size()), s.label);
    if (sigma > 0.0) ++r.noisy_passes;
  }
  r.loss = samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
  return r;
}

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> log;
  std::size_t noisy_forward_passes = 0;
};

/// Mini-batch Adam training with back-propagation through the T steps.
/// Aggregation noise (sigma > 0) is redrawn on every forward pass and held
/// constant for the matching backward pass.
inline TrainResult train(const ModelConfig& cfg, const TrainConfig& tc,
                         const std::vector<Sample>& train_set,
                         const std::vector<Sample>& valid_set, const UserFeatures& features,
                         double sigma, RandomStream rng) {
  if (tc.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (tc.batch_size == 0) throw ConfigError("batch size must be positive");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  RandomStream init_rng = rng.derive("init");
  TrainResult res;
  res.params = ModelParams::random(cfg, init_rng);
  Adam opt(res.params, tc);
  ModelParams grad = ModelParams::zeros(cfg);
  ForwardCache cache;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    RandomStream shuffle_rng = rng.derive("shuffle", static_cast<std::uint64_t>(epoch));
    RandomStream noise_rng = rng.derive("noise", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    }
    MetricAccumulator acc(tc.ks);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
      const std::size_t e = std::min(order.size(), b + tc.batch_size);
      grad.set_zero();
      const double scale = 1.0 / static_cast<double>(e - b);
      for (std::size_t i = b; i < e; ++i) {
        const Sample& s = train_set[order[i]];
        const auto out = forward(res.params, cfg, s.graph, features_of(features, s.user), s.label,
                                 sigma, noise_rng, cache);
        if (!std::isfinite(out.loss)) {
          throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                                ", sample " + std::to_string(order[i]));
        }
        if (sigma > 0.0) ++res.noisy_forward_passes;
        total += out.loss;
        acc.add(std::span<const double>(cache.logits.data(), cache.logits.size()), s.label);
        backward(res.params, cfg, cache, grad, scale);
      }
      opt.step(res.params, grad);
    }
    if (!res.params.all_finite()) {
      throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.split = "train";
    rec.loss = train_set.empty() ? 0.0 : total / static_cast<double>(train_set.size());
    rec.recall = acc.recall_map();
    rec.mrr = acc.mrr_map();
    rec.wall_time = elapsed();
    res.log.push_back(rec);

    if (tc.validate_each_epoch && !valid_set.empty()) {
      const auto v = evaluate(res.params, cfg, valid_set, features, sigma,
                              rng.derive("valid-noise", static_cast<std::uint64_t>(epoch)), tc.ks,
                              tc.exclude_seen);
      res.noisy_forward_passes += v.noisy_passes;
      EpochRecord vr;
      vr.epoch = epoch;
      vr.split = "valid";
      vr.loss = v.loss;
      vr.recall = v.metrics.recall_map();
      vr.mrr = v.metrics.mrr_map();
      vr.wall_time = elapsed();
      res.log.push_back(vr);
    }
  }
  return res;
}

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["split"] = r.split;
  j["loss"] = r.loss;
  for (const auto& [k, v] : r.recall) j["recall@" + std::to_string(k)] = v;
  for (const auto& [k, v] : r.mrr) j["mrr@" + std::to_string(k)] = v;
  j["wall_time"] = r.wall_time;
  return j;
}

/// Appends one JSON record per line.
inline void append_training_log(const std::string& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open training log " + path);
  for (const auto& r : log) out << to_json(r).dump() << '\n';
}

// Checkpoints: versioned text with shape headers and %.17g values, so a
// reload reproduces every tensor bit for bit.

inline void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                            const PrivacySpec& spec, const ModelParams& params,
                            Method method = Method::kDipsgnn) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write checkpoint " + path);
  std::fprintf(f, "dipsgnn-checkpoint 1\n");
  std::fprintf(f, "config %zu %zu %zu %zu %d %.17g %s\n", cfg.num_items, cfg.feature_width,
               cfg.item_dim, cfg.user_dim, cfg.steps, cfg.embed_norm,
               cfg.loss == LossKind::kCategorical ? "categorical" : "bce");
  std::fprintf(f, "privacy %.17g %.17g %.17g %d %.17g %.17g\n", spec.epsilon1, spec.epsilon2,
               spec.delta, spec.steps_T, spec.embed_norm_C, spec.sigma);
  std::fprintf(f, "method %s\n", method_name(method).c_str());
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    const Matrix& t = params.tensors[k];
    std::fprintf(f, "tensor %s %td %td\n", std::string(kTensorNames[k]).c_str(), t.rows(),
                 t.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        std::fprintf(f, j == 0 ? "%.17g" : " %.17g", t(i, j));
      }
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

struct Checkpoint {
  ModelConfig config;
  PrivacySpec privacy;
  Method method = Method::kDipsgnn;
  ModelParams params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(in >> w) || w != word) {
      throw MalformedInputError(path + ": expected '" + word + "', got '" + w + "'");
    }
  };
  auto read_double = [&]() {
    std::string w;
    in >> w;
    return parse_double(w, path);
  };
  expect("dipsgnn-checkpoint");
  int version = 0;
  in >> version;
  if (version != 1) throw MalformedInputError(path + ": unsupported checkpoint version");
  Checkpoint ck;
  std::string loss;
  expect("config");
  in >> ck.config.num_items >> ck.config.feature_width >> ck.config.item_dim >>
      ck.config.user_dim >> ck.config.steps;
  ck.config.embed_norm = read_double();
  in >> loss;
  ck.config.loss = loss == "categorical" ? LossKind::kCategorical : LossKind::kBinaryCrossEntropy;
  expect("privacy");
  ck.privacy.epsilon1 = read_double();
  ck.privacy.epsilon2 = read_double();
  ck.privacy.delta = read_double();
  in >> ck.privacy.steps_T;
  ck.privacy.embed_norm_C = read_double();
  ck.privacy.sigma = read_double();
  expect("method");
  std::string method;
  in >> method;
  try {
    ck.method = parse_method(method);
  } catch (const ConfigError&) {
    throw MalformedInputError(path + ": unknown method '" + method + "'");
  }
  ck.params = ModelParams::zeros(ck.config);
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    expect("tensor");
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (name != kTensorNames[k]) throw MalformedInputError(path + ": unexpected tensor " + name);
    Matrix& t = ck.params.tensors[k];
    if (rows != t.rows() || cols != t.cols()) {
      throw MalformedInputError(path + ": tensor " + name + " has the wrong shape");
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = read_double();
  }
  if (!in) throw MalformedInputError(path + ": truncated checkpoint");
  return ck;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_TRAINER_HPP_
