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

// Gated graph neural network with noisy sum aggregation.
//
// Per propagation step, for the n local nodes of one behavior graph:
//
//   H    = [E | 1 e_u^T]                       n x (d + d')
//   Hbar = rows of H rescaled to L2 norm C
//   Pout = A_out Hbar + N(0, sigma^2)           fresh noise each call
//   Pin  = A_in  Hbar + N(0, sigma^2)
//   X    = [Pout W_out + b_out | Pin W_in + b_in]   n x 2d
//   Z    = sigmoid(X Wz + E Uz + bz)
//   R    = sigmoid(X Wr + E Ur + br)
//   N    = tanh(X Wn + (R o E) Un + bn)
//   E'   = (1 - Z) o E + Z o N
//
// Readout over sequence positions s with final embeddings v_s:
//
//   alpha_s = q . sigmoid(W1 v_last + W2 v_s + c)
//   z_u     = W3 [sum_s alpha_s v_s ; v_last ; e_u]
//
// Candidate item j scores z_u . f_j where f_j is the final embedding of j if
// j is a node of the graph and its embedding-table row otherwise.
//
// Row-vector convention for the propagation (weights multiply on the
// right), column-vector convention for the readout (W1, W2, W3 multiply on
// the left). Everything is plain double precision so the analytic gradient
// can be checked against finite differences.

#ifndef DIPSGNN_GNN_MODEL_HPP_
#define DIPSGNN_GNN_MODEL_HPP_

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dipsgnn/common.hpp"
#include "dipsgnn/graph_pipeline.hpp"
#include "dipsgnn/ldp_feature.hpp"

namespace dipsgnn {

enum class LossKind {
  // -sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)] over the full vocabulary.
  kBinaryCrossEntropy,
  // -log p_label
  kCategorical,
};

struct ModelConfig {
  std::size_t num_items = 0;
  std::size_t feature_width = 0;  // d0
  std::size_t item_dim = 100;     // d
  std::size_t user_dim = 50;      // d'
  int steps = 1;                  // T
  double embed_norm = 1.0;        // C
  LossKind loss = LossKind::kBinaryCrossEntropy;

  std::size_t joint_dim() const { return item_dim + user_dim; }
};

enum Tensor : std::size_t {
  kUserEmbed,  // d0 x d'
  kItemEmbed,  // |V| x d
  kWOut,       // (d + d') x d
  kBOut,       // 1 x d
  kWIn,
  kBIn,
  kGruWz,  // 2d x d
  kGruUz,  // d x d
  kGruBz,  // 1 x d
  kGruWr,
  kGruUr,
  kGruBr,
  kGruWn,
  kGruUn,
  kGruBn,
  kAttnQ,   // 1 x d
  kAttnW1,  // d x d
  kAttnW2,  // d x d
  kAttnC,   // 1 x d
  kW3,      // d x (2d + d')
  kNumTensors,
};

inline constexpr std::array<std::string_view, kNumTensors> kTensorNames = {
    "user_embed", "item_embed", "w_out",  "b_out",   "w_in",    "b_in",   "gru_wz",
    "gru_uz",     "gru_bz",     "gru_wr", "gru_ur",  "gru_br",  "gru_wn", "gru_un",
    "gru_bn",     "attn_q",     "attn_w1", "attn_w2", "attn_c", "w3"};

/// All trainable tensors. Also used as the gradient accumulator.
struct ModelParams {
  std::array<Matrix, kNumTensors> tensors;

  Matrix& operator[](Tensor t) { return tensors[t]; }
  const Matrix& operator[](Tensor t) const { return tensors[t]; }

  /// Zero tensors with the shapes implied by cfg.
  static ModelParams zeros(const ModelConfig& cfg) {
    const auto d = static_cast<Eigen::Index>(cfg.item_dim);
    const auto dp = static_cast<Eigen::Index>(cfg.user_dim);
    const auto d0 = static_cast<Eigen::Index>(cfg.feature_width);
    const auto nv = static_cast<Eigen::Index>(cfg.num_items);
    ModelParams p;
    p[kUserEmbed] = Matrix::Zero(d0, dp);
    p[kItemEmbed] = Matrix::Zero(nv, d);
    for (Tensor w : {kWOut, kWIn}) p[w] = Matrix::Zero(d + dp, d);
    for (Tensor w : {kGruWz, kGruWr, kGruWn}) p[w] = Matrix::Zero(2 * d, d);
    for (Tensor w : {kGruUz, kGruUr, kGruUn, kAttnW1, kAttnW2}) p[w] = Matrix::Zero(d, d);
    for (Tensor b : {kBOut, kBIn, kGruBz, kGruBr, kGruBn, kAttnQ, kAttnC}) {
      p[b] = Matrix::Zero(1, d);
    }
    p[kW3] = Matrix::Zero(d, 2 * d + dp);
    return p;
  }

  /// Every entry uniform in [-1/sqrt(d), 1/sqrt(d)].
  static ModelParams random(const ModelConfig& cfg, RandomStream& rng) {
    ModelParams p = zeros(cfg);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.item_dim));
    for (auto& t : p.tensors) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    }
    return p;
  }

  void set_zero() {
    for (auto& t : tensors) t.setZero();
  }

  bool all_finite() const {
    for (const auto& t : tensors) {
      if (!t.allFinite()) return false;
    }
    return true;
  }
};

namespace internal {

inline Matrix sigmoid(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

inline Vector sigmoid(const Vector& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double sigma, RandomStream& rng) {
  Matrix n(rows, cols);
  for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = rng.normal(0.0, sigma);
  return n;
}

inline Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace internal

/// Rescales every nonzero row to L2 norm `norm_bound`; zero rows stay zero.
inline Matrix clip_rows(const Matrix& h, double norm_bound) {
  if (!(norm_bound > 0.0)) throw ConfigError("row norm bound must be positive");
  Matrix out = h;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double n = h.row(i).norm();
    if (n > 0.0) out.row(i) *= norm_bound / n;
  }
  return out;
}

/// A * h_bar plus i.i.d. N(0, sigma^2) per entry. sigma = 0 is exact.
inline Matrix noisy_aggregate(const Matrix& a, const Matrix& h_bar, double sigma,
                              RandomStream& rng) {
  if (a.cols() != h_bar.rows()) {
    throw ConfigError("adjacency has " + std::to_string(a.cols()) + " columns but embedding has " +
                      std::to_string(h_bar.rows()) + " rows");
  }
  if (sigma < 0.0) throw ConfigError("noise scale must be non-negative");
  Matrix out = a * h_bar;
  if (sigma > 0.0) out += internal::gaussian(out.rows(), out.cols(), sigma, rng);
  return out;
}

/// Initial user and item embeddings: x_hat E_U and row `item_index` of E_V.
inline std::pair<Vector, Vector> init_embeddings(std::span<const double> perturbed_features,
                                                 std::size_t item_index,
                                                 const ModelParams& params) {
  const Matrix& eu = params[kUserEmbed];
  if (static_cast<Eigen::Index>(perturbed_features.size()) != eu.rows()) {
    throw ConfigError("feature width " + std::to_string(perturbed_features.size()) +
                      " does not match user embedding table rows " + std::to_string(eu.rows()));
  }
  if (internal::idx(item_index) >= params[kItemEmbed].rows()) {
    throw ConfigError("item index out of range");
  }
  const Eigen::Map<const Vector> x(perturbed_features.data(), eu.rows());
  Vector user = eu.transpose() * x;
  Vector item = params[kItemEmbed].row(internal::idx(item_index)).transpose();
  return {std::move(user), std::move(item)};
}

/// State of one graph between propagation steps.
struct ForwardState {
  Vector user_embed;   // d'
  Matrix item_embeds;  // n x d
  Matrix joint;        // H of the step that produced this state
  Matrix clipped;      // Hbar
  Matrix noisy_out;    // Pout
  Matrix noisy_in;     // Pin
};

/// Intermediates of one propagation step kept for back-propagation.
struct StepCache {
  Matrix e_prev;  // n x d
  Matrix joint;   // H
  Vector norms;   // row norms of H
  Matrix clipped;
  Matrix p_out, p_in;
  Matrix x;  // GRU input, n x 2d
  Matrix z, r, cand;
};

namespace internal {

inline Matrix run_step(const Matrix& e_prev, const Vector& e_u, const Matrix& a_out,
                       const Matrix& a_in, const ModelParams& p, double norm_bound, double sigma,
                       RandomStream& rng, StepCache& c) {
  const Eigen::Index n = e_prev.rows();
  const Eigen::Index d = e_prev.cols();
  const Eigen::Index dp = e_u.size();
  if (a_out.rows() != n || a_out.cols() != n || a_in.rows() != n || a_in.cols() != n) {
    throw ConfigError("adjacency shape does not match node count");
  }
  c.e_prev = e_prev;
  c.joint.resize(n, d + dp);
  c.joint.leftCols(d) = e_prev;
  c.joint.rightCols(dp) = e_u.transpose().replicate(n, 1);
  c.norms = c.joint.rowwise().norm();
  c.clipped = clip_rows(c.joint, norm_bound);
  c.p_out = noisy_aggregate(a_out, c.clipped, sigma, rng);
  c.p_in = noisy_aggregate(a_in, c.clipped, sigma, rng);

  c.x.resize(n, 2 * d);
  c.x.leftCols(d) = c.p_out * p[kWOut] + p[kBOut].replicate(n, 1);
  c.x.rightCols(d) = c.p_in * p[kWIn] + p[kBIn].replicate(n, 1);

  c.z = sigmoid(Matrix(c.x * p[kGruWz] + e_prev * p[kGruUz] + p[kGruBz].replicate(n, 1)));
  c.r = sigmoid(Matrix(c.x * p[kGruWr] + e_prev * p[kGruUr] + p[kGruBr].replicate(n, 1)));
  const Matrix re = c.r.cwiseProduct(e_prev);
  c.cand = (c.x * p[kGruWn] + re * p[kGruUn] + p[kGruBn].replicate(n, 1)).array().tanh().matrix();
  return ((1.0 - c.z.array()) * e_prev.array() + c.z.array() * c.cand.array()).matrix();
}

}  // namespace internal

/// One propagation step over `graph`: clip, two noisy aggregations, affine
/// transforms and a GRU update of every node. The user embedding is carried
/// through unchanged.
inline ForwardState propagate_step(const ForwardState& state, const BehaviorGraph& graph,
                                   const ModelParams& params, double embed_norm, double sigma,
                                   RandomStream& rng) {
  StepCache c;
  ForwardState next;
  next.item_embeds = internal::run_step(state.item_embeds, state.user_embed, graph.a_out,
                                        graph.a_in, params, embed_norm, sigma, rng, c);
  next.user_embed = state.user_embed;
  next.joint = std::move(c.joint);
  next.clipped = std::move(c.clipped);
  next.noisy_out = std::move(c.p_out);
  next.noisy_in = std::move(c.p_in);
  return next;
}

struct ReadoutCache {
  Matrix seq;    // L x d, final embeddings by sequence position
  Matrix gates;  // L x d, sigmoid(W1 v_last + W2 v_s + c)
  Vector alpha;  // L
  Vector concat; // [z_g; z_l; e_u]
  Vector z_u;
};

namespace internal {

inline Vector run_readout(const Matrix& final_embeds, std::span<const std::size_t> positions,
                          const Vector& e_u, const ModelParams& p, ReadoutCache& c) {
  if (positions.empty()) throw MalformedInputError("readout needs a non-empty sequence");
  const auto len = static_cast<Eigen::Index>(positions.size());
  const Eigen::Index d = final_embeds.cols();
  c.seq.resize(len, d);
  for (Eigen::Index s = 0; s < len; ++s) {
    c.seq.row(s) = final_embeds.row(idx(positions[static_cast<std::size_t>(s)]));
  }
  const Vector last = c.seq.row(len - 1).transpose();
  const Vector base = p[kAttnW1] * last + p[kAttnC].row(0).transpose();
  c.gates = sigmoid(Matrix((c.seq * p[kAttnW2].transpose()).rowwise() + base.transpose()));
  c.alpha = c.gates * p[kAttnQ].row(0).transpose();
  const Vector z_g = c.seq.transpose() * c.alpha;
  c.concat.resize(2 * d + e_u.size());
  c.concat << z_g, last, e_u;
  c.z_u = p[kW3] * c.concat;
  return c.z_u;
}

}  // namespace internal

/// Unified user representation from the final item embeddings of a graph,
/// the local node index of each sequence position and the user embedding.
inline Vector readout(const Matrix& final_item_embeds, std::span<const std::size_t> positions,
                      const Vector& user_embed, const ModelParams& params) {
  ReadoutCache c;
  return internal::run_readout(final_item_embeds, positions, user_embed, params, c);
}

struct PredictionOutput {
  Vector scores;  // softmax probabilities over all items
  double loss = 0.0;
};

/// Softmax over logits and the configured loss against `label`.
/// `dlogits`, when given, receives d loss / d logits.
inline PredictionOutput softmax_loss(const Vector& logits, std::size_t label, LossKind kind,
                                     Vector* dlogits = nullptr) {
  const Eigen::Index nv = logits.size();
  if (internal::idx(label) >= nv) throw ConfigError("label index out of range");
  const double mx = logits.maxCoeff();
  const Vector shifted = (logits.array() - mx).matrix();
  const double sum = shifted.array().exp().sum();
  const double lse = std::log(sum);
  PredictionOutput out;
  out.scores = (shifted.array() - lse).exp().matrix();
  const auto lbl = internal::idx(label);
  out.loss = -(shifted(lbl) - lse);
  if (kind == LossKind::kBinaryCrossEntropy) {
    for (Eigen::Index i = 0; i < nv; ++i) {
      if (i == lbl) continue;
      const double pi = out.scores(i);
      double log1m;
      if (pi < 0.5) {
        log1m = std::log1p(-pi);
      } else {
        // 1 - p_i = sum_{j != i} p_j, computed without cancellation.
        double rest = 0.0;
        for (Eigen::Index j = 0; j < nv; ++j) {
          if (j != i) rest += std::exp(shifted(j) - lse);
        }
        log1m = std::log(rest);
      }
      out.loss -= log1m;
    }
  }
  if (dlogits != nullptr) {
    if (kind == LossKind::kCategorical) {
      *dlogits = out.scores;
      (*dlogits)(lbl) -= 1.0;
    } else {
      // g_i = dL/dp_i; dL/ds_j = p_j (g_j - sum_i p_i g_i).
      Vector pg(nv);
      for (Eigen::Index i = 0; i < nv; ++i) {
        pg(i) = i == lbl ? -1.0 : out.scores(i) / (1.0 - out.scores(i));
      }
      const double total = pg.sum();
      *dlogits = pg - total * out.scores;
    }
  }
  return out;
}

/// Scores every item against z_u using `final_item_embed_table` and returns
/// the softmax probabilities with the loss for `label`.
inline PredictionOutput predict_and_loss(const Vector& z_u, const Matrix& final_item_embed_table,
                                         std::size_t label,
                                         LossKind kind = LossKind::kBinaryCrossEntropy) {
  return softmax_loss(final_item_embed_table * z_u, label, kind);
}

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
  const BehaviorGraph* graph = nullptr;
  std::vector<double> features;
  Vector e_u;
  std::vector<StepCache> steps;
  Matrix final_embeds;  // n x d
  ReadoutCache readout;
  Vector logits;
  Vector dlogits;
  std::size_t label = 0;
};

/// Candidate logits: embedding-table rows, with the graph's own items
/// replaced by their propagated embeddings.
inline Vector candidate_logits(const ModelParams& p, const BehaviorGraph& g,
                               const Matrix& final_embeds, const Vector& z_u) {
  Vector logits = p[kItemEmbed] * z_u;
  for (std::size_t k = 0; k < g.node_ids.size(); ++k) {
    logits(internal::idx(g.node_ids[k])) = final_embeds.row(internal::idx(k)).dot(z_u);
  }
  return logits;
}

/// Full forward pass for one sample. Returns the loss and fills `cache` for
/// backward(). Noise for each of the T steps is drawn from `rng`.
inline PredictionOutput forward(const ModelParams& p, const ModelConfig& cfg,
                                const BehaviorGraph& g, std::span<const double> features,
                                std::size_t label, double sigma, RandomStream& rng,
                                ForwardCache& cache) {
  if (g.num_nodes() == 0 || g.positions.empty()) throw MalformedInputError("empty graph");
  cache.graph = &g;
  cache.features.assign(features.begin(), features.end());
  cache.label = label;
  if (static_cast<Eigen::Index>(features.size()) != p[kUserEmbed].rows()) {
    throw ConfigError("feature width does not match the user embedding table");
  }
  const Eigen::Map<const Vector> x(features.data(), p[kUserEmbed].rows());
  cache.e_u = p[kUserEmbed].transpose() * x;

  const auto n = internal::idx(g.num_nodes());
  Matrix e(n, p[kItemEmbed].cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto item = internal::idx(g.node_ids[static_cast<std::size_t>(k)]);
    if (item >= p[kItemEmbed].rows()) throw ConfigError("graph node outside item vocabulary");
    e.row(k) = p[kItemEmbed].row(item);
  }
  cache.steps.resize(static_cast<std::size_t>(cfg.steps));
  for (auto& step : cache.steps) {
    e = internal::run_step(e, cache.e_u, g.a_out, g.a_in, p, cfg.embed_norm, sigma, rng, step);
  }
  cache.final_embeds = std::move(e);
  const Vector z_u =
      internal::run_readout(cache.final_embeds, g.positions, cache.e_u, p, cache.readout);
  cache.logits = candidate_logits(p, g, cache.final_embeds, z_u);
  return softmax_loss(cache.logits, label, cfg.loss, &cache.dlogits);
}

/// Adds `scale` * d loss / d params for the cached sample into `grad`.
inline void backward(const ModelParams& p, const ModelConfig& cfg, const ForwardCache& cache,
                     ModelParams& grad, double scale = 1.0) {
  using internal::idx;
  const BehaviorGraph& g = *cache.graph;
  const Eigen::Index n = cache.final_embeds.rows();
  const Eigen::Index d = cache.final_embeds.cols();
  const Eigen::Index dp = cache.e_u.size();
  const Vector ds = scale * cache.dlogits;
  const ReadoutCache& rc = cache.readout;
  const Vector& z_u = rc.z_u;

  // Scoring.
  Matrix d_final = Matrix::Zero(n, d);
  Vector dz_u = p[kItemEmbed].transpose() * ds;
  grad[kItemEmbed].noalias() += ds * z_u.transpose();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto item = idx(g.node_ids[static_cast<std::size_t>(k)]);
    const double dsk = ds(item);
    dz_u += dsk * (cache.final_embeds.row(k) - p[kItemEmbed].row(item)).transpose();
    grad[kItemEmbed].row(item) -= dsk * z_u.transpose();
    d_final.row(k) += dsk * z_u.transpose();
  }

  // Readout.
  grad[kW3].noalias() += dz_u * rc.concat.transpose();
  const Vector dcat = p[kW3].transpose() * dz_u;
  const Vector dz_g = dcat.head(d);
  Vector d_last = dcat.segment(d, d);
  Vector d_eu = dcat.tail(dp);

  const Vector dalpha = rc.seq * dz_g;
  Matrix dseq = rc.alpha * dz_g.transpose();
  grad[kAttnQ].row(0) += (rc.gates.transpose() * dalpha).transpose();
  const Matrix dpre = (dalpha * p[kAttnQ])
                          .cwiseProduct(rc.gates)
                          .cwiseProduct((1.0 - rc.gates.array()).matrix());
  grad[kAttnW2].noalias() += dpre.transpose() * rc.seq;
  dseq.noalias() += dpre * p[kAttnW2];
  const Vector dbase = dpre.colwise().sum().transpose();
  grad[kAttnC].row(0) += dbase.transpose();
  const Eigen::Index len = rc.seq.rows();
  grad[kAttnW1].noalias() += dbase * rc.seq.row(len - 1);
  d_last.noalias() += p[kAttnW1].transpose() * dbase;
  dseq.row(len - 1) += d_last.transpose();
  for (Eigen::Index s = 0; s < len; ++s) {
    d_final.row(idx(g.positions[static_cast<std::size_t>(s)])) += dseq.row(s);
  }

  // Back-propagation through the T propagation steps.
  Matrix de = std::move(d_final);
  for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
    const StepCache& c = *it;
    const Matrix& e = c.e_prev;
    const Matrix dz = de.cwiseProduct(c.cand - e);
    const Matrix dcand = de.cwiseProduct(c.z);
    Matrix de_prev = de.cwiseProduct((1.0 - c.z.array()).matrix());

    const Matrix dpn = dcand.cwiseProduct((1.0 - c.cand.array().square()).matrix());
    const Matrix re = c.r.cwiseProduct(e);
    grad[kGruWn].noalias() += c.x.transpose() * dpn;
    grad[kGruUn].noalias() += re.transpose() * dpn;
    grad[kGruBn] += dpn.colwise().sum();
    Matrix dx = dpn * p[kGruWn].transpose();
    const Matrix dre = dpn * p[kGruUn].transpose();
    de_prev += dre.cwiseProduct(c.r);
    const Matrix dr = dre.cwiseProduct(e);

    const Matrix dpr =
        dr.cwiseProduct(c.r).cwiseProduct((1.0 - c.r.array()).matrix());
    grad[kGruWr].noalias() += c.x.transpose() * dpr;
    grad[kGruUr].noalias() += e.transpose() * dpr;
    grad[kGruBr] += dpr.colwise().sum();
    dx.noalias() += dpr * p[kGruWr].transpose();
    de_prev.noalias() += dpr * p[kGruUr].transpose();

    const Matrix dpz =
        dz.cwiseProduct(c.z).cwiseProduct((1.0 - c.z.array()).matrix());
    grad[kGruWz].noalias() += c.x.transpose() * dpz;
    grad[kGruUz].noalias() += e.transpose() * dpz;
    grad[kGruBz] += dpz.colwise().sum();
    dx.noalias() += dpz * p[kGruWz].transpose();
    de_prev.noalias() += dpz * p[kGruUz].transpose();

    const Matrix da_out = dx.leftCols(d);
    const Matrix da_in = dx.rightCols(d);
    grad[kWOut].noalias() += c.p_out.transpose() * da_out;
    grad[kBOut] += da_out.colwise().sum();
    grad[kWIn].noalias() += c.p_in.transpose() * da_in;
    grad[kBIn] += da_in.colwise().sum();
    const Matrix dclipped = g.a_out.transpose() * (da_out * p[kWOut].transpose()) +
                            g.a_in.transpose() * (da_in * p[kWIn].transpose());

    // d/dh of C h / |h| is (C / |h|) (I - h h^T / |h|^2).
    Matrix dh = Matrix::Zero(n, d + dp);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double nrm = c.norms(i);
      if (nrm == 0.0) continue;
      const double proj = c.joint.row(i).dot(dclipped.row(i)) / (nrm * nrm);
      dh.row(i) = (cfg.embed_norm / nrm) * (dclipped.row(i) - proj * c.joint.row(i));
    }
    de_prev += dh.leftCols(d);
    d_eu += dh.rightCols(dp).colwise().sum().transpose();
    de = std::move(de_prev);
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    grad[kItemEmbed].row(idx(g.node_ids[static_cast<std::size_t>(k)])) += de.row(k);
  }
  if (!cache.features.empty()) {
    const Eigen::Map<const Vector> x(cache.features.data(),
                                     static_cast<Eigen::Index>(cache.features.size()));
    grad[kUserEmbed].noalias() += x * d_eu.transpose();
  }
}

}  // namespace dipsgnn

#endif  // DIPSGNN_GNN_MODEL_HPP_
