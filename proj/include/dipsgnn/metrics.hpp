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

#ifndef DIPSGNN_METRICS_HPP_
#define DIPSGNN_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "dipsgnn/common.hpp"

namespace dipsgnn {

/// Item indices by descending score; equal scores keep ascending index.
inline std::vector<std::size_t> rank_items(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw DivergenceError("cannot rank non-finite scores");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

/// 1-based rank of `label` under the ranking rule of rank_items, computed
/// without sorting: items scoring higher, plus equal-score items with a
/// smaller index, precede it.
inline std::size_t rank_of(std::span<const double> scores, std::size_t label) {
  const double s = scores[label];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > s || (scores[i] == s && i < label)) ++rank;
  }
  return rank;
}

inline void check_k(int k) {
  if (k <= 0) throw ConfigError("K must be positive");
}

inline int recall_at_k(std::span<const std::size_t> ranked_items, std::size_t label, int k) {
  check_k(k);
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_items.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked_items[i] == label) return 1;
  }
  return 0;
}

inline double mrr_at_k(std::span<const std::size_t> ranked_items, std::size_t label, int k) {
  check_k(k);
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_items.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked_items[i] == label) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

/// Running Recall@K / MRR@K over a set of samples, reported in percent.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::vector<int> ks) : ks_(std::move(ks)) {
    for (int k : ks_) check_k(k);
    hits_.assign(ks_.size(), 0.0);
    rr_.assign(ks_.size(), 0.0);
  }

  void add_rank(std::size_t rank) {
    ++count_;
    for (std::size_t i = 0; i < ks_.size(); ++i) {
      if (rank <= static_cast<std::size_t>(ks_[i])) {
        hits_[i] += 1.0;
        rr_[i] += 1.0 / static_cast<double>(rank);
      }
    }
  }

  void add(std::span<const double> scores, std::size_t label) { add_rank(rank_of(scores, label)); }

  std::size_t count() const { return count_; }
  const std::vector<int>& ks() const { return ks_; }

  double recall(std::size_t i) const { return count_ ? 100.0 * hits_[i] / count_ : 0.0; }
  double mrr(std::size_t i) const { return count_ ? 100.0 * rr_[i] / count_ : 0.0; }

  std::map<int, double> recall_map() const {
    std::map<int, double> m;
    for (std::size_t i = 0; i < ks_.size(); ++i) m[ks_[i]] = recall(i);
    return m;
  }
  std::map<int, double> mrr_map() const {
    std::map<int, double> m;
    for (std::size_t i = 0; i < ks_.size(); ++i) m[ks_[i]] = mrr(i);
    return m;
  }

 private:
  std::vector<int> ks_;
  std::vector<double> hits_;
  std::vector<double> rr_;
  std::size_t count_ = 0;
};

}  // namespace dipsgnn

#endif  // DIPSGNN_METRICS_HPP_
