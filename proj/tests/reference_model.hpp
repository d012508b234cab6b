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

// Loop-based second implementation of the model forward pass, used as an
// oracle for the Eigen implementation. It shares only the parameter
// container and the random stream with the library.

#ifndef DIPSGNN_TESTS_REFERENCE_MODEL_HPP_
#define DIPSGNN_TESTS_REFERENCE_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "dipsgnn/gnn_model.hpp"

namespace dipsgnn::reference {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const Matrix& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return out;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// row * M, M given as rows x cols.
inline Vec row_times(const Vec& row, const Mat& m) {
  Vec out(m.empty() ? 0 : m[0].size(), 0.0);
  for (std::size_t i = 0; i < row.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[i] * m[i][j];
  }
  return out;
}

// M * col.
inline Vec times_col(const Mat& m, const Vec& col) {
  Vec out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < col.size(); ++j) out[i] += m[i][j] * col[j];
  }
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Output {
  Mat final_embeds;
  Vec user_embed;
  Vec z_u;
  Vec logits;
  Vec probs;
  double loss = 0.0;
};

/// One propagation step. Noise is drawn row-major for the out aggregate,
/// then for the in aggregate.
inline Mat step(const Mat& e, const Vec& eu, const Mat& a_out, const Mat& a_in,
                const ModelParams& p, double c_norm, double sigma, RandomStream& rng) {
  const std::size_t n = e.size();
  const std::size_t d = e[0].size();
  Mat hbar(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec h = e[k];
    h.insert(h.end(), eu.begin(), eu.end());
    double norm = 0.0;
    for (double v : h) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : h) v *= c_norm / norm;
    }
    hbar[k] = h;
  }
  const std::size_t width = hbar[0].size();
  auto aggregate = [&](const Mat& a) {
    Mat out(n, Vec(width, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < width; ++c) out[i][c] += a[i][j] * hbar[j][c];
      }
    }
    if (sigma > 0.0) {
      for (auto& row : out) {
        for (double& v : row) v += rng.normal(0.0, sigma);
      }
    }
    return out;
  };
  const Mat p_out = aggregate(a_out);
  const Mat p_in = aggregate(a_in);

  const Mat w_out = to_mat(p[kWOut]), w_in = to_mat(p[kWIn]);
  const Vec b_out = to_mat(p[kBOut])[0], b_in = to_mat(p[kBIn])[0];
  const Mat wz = to_mat(p[kGruWz]), uz = to_mat(p[kGruUz]);
  const Mat wr = to_mat(p[kGruWr]), ur = to_mat(p[kGruUr]);
  const Mat wn = to_mat(p[kGruWn]), un = to_mat(p[kGruUn]);
  const Vec bz = to_mat(p[kGruBz])[0], br = to_mat(p[kGruBr])[0], bn = to_mat(p[kGruBn])[0];

  Mat next(n, Vec(d));
  for (std::size_t k = 0; k < n; ++k) {
    Vec x = row_times(p_out[k], w_out);
    Vec xin = row_times(p_in[k], w_in);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] += b_out[j];
      xin[j] += b_in[j];
    }
    x.insert(x.end(), xin.begin(), xin.end());
    const Vec xz = row_times(x, wz), ez = row_times(e[k], uz);
    const Vec xr = row_times(x, wr), er = row_times(e[k], ur);
    Vec z(d), r(d), re(d);
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = logistic(xz[j] + ez[j] + bz[j]);
      r[j] = logistic(xr[j] + er[j] + br[j]);
      re[j] = r[j] * e[k][j];
    }
    const Vec xn = row_times(x, wn), en = row_times(re, un);
    for (std::size_t j = 0; j < d; ++j) {
      const double cand = std::tanh(xn[j] + en[j] + bn[j]);
      next[k][j] = (1.0 - z[j]) * e[k][j] + z[j] * cand;
    }
  }
  return next;
}

inline Vec readout(const Mat& final_embeds, const std::vector<std::size_t>& positions,
                   const Vec& eu, const ModelParams& p) {
  const std::size_t d = final_embeds[0].size();
  const Vec& last = final_embeds[positions.back()];
  const Mat w1 = to_mat(p[kAttnW1]), w2 = to_mat(p[kAttnW2]), w3 = to_mat(p[kW3]);
  const Vec q = to_mat(p[kAttnQ])[0], c = to_mat(p[kAttnC])[0];
  const Vec w1_last = times_col(w1, last);
  Vec z_g(d, 0.0);
  for (std::size_t pos : positions) {
    const Vec& v = final_embeds[pos];
    const Vec w2v = times_col(w2, v);
    double alpha = 0.0;
    for (std::size_t j = 0; j < d; ++j) alpha += q[j] * logistic(w1_last[j] + w2v[j] + c[j]);
    for (std::size_t j = 0; j < d; ++j) z_g[j] += alpha * v[j];
  }
  Vec cat = z_g;
  cat.insert(cat.end(), last.begin(), last.end());
  cat.insert(cat.end(), eu.begin(), eu.end());
  return times_col(w3, cat);
}

inline Output forward(const ModelParams& p, const ModelConfig& cfg, const BehaviorGraph& g,
                      const std::vector<double>& features, std::size_t label, double sigma,
                      RandomStream& rng) {
  Output out;
  const Mat eu_table = to_mat(p[kUserEmbed]);
  const Mat ev = to_mat(p[kItemEmbed]);
  out.user_embed = row_times(features, eu_table);
  Mat e;
  for (std::size_t id : g.node_ids) e.push_back(ev[id]);
  const Mat a_out = to_mat(g.a_out), a_in = to_mat(g.a_in);
  for (int t = 0; t < cfg.steps; ++t) {
    e = step(e, out.user_embed, a_out, a_in, p, cfg.embed_norm, sigma, rng);
  }
  out.final_embeds = e;
  out.z_u = readout(e, g.positions, out.user_embed, p);

  out.logits.assign(ev.size(), 0.0);
  for (std::size_t j = 0; j < ev.size(); ++j) out.logits[j] = dot(ev[j], out.z_u);
  for (std::size_t k = 0; k < g.node_ids.size(); ++k) {
    out.logits[g.node_ids[k]] = dot(e[k], out.z_u);
  }
  double mx = out.logits[0];
  for (double v : out.logits) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : out.logits) total += std::exp(v - mx);
  out.probs.resize(ev.size());
  for (std::size_t j = 0; j < ev.size(); ++j) out.probs[j] = std::exp(out.logits[j] - mx) / total;
  out.loss = -std::log(out.probs[label]);
  if (cfg.loss == LossKind::kBinaryCrossEntropy) {
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (j != label) out.loss -= std::log(1.0 - out.probs[j]);
    }
  }
  return out;
}

}  // namespace dipsgnn::reference

#endif  // DIPSGNN_TESTS_REFERENCE_MODEL_HPP_
