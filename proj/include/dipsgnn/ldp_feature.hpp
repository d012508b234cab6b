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

// Local differential privacy for a user's mixed numerical/categorical
// feature vector: the piecewise mechanism for bounded numbers, optimized
// unary encoding for one-hot blocks, and the k-of-n sampling wrapper that
// splits the budget across a random subset of features.

#ifndef DIPSGNN_LDP_FEATURE_HPP_
#define DIPSGNN_LDP_FEATURE_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dipsgnn/common.hpp"

namespace dipsgnn {

enum class FeatureKind { kNumerical, kCategorical };

struct FeatureEntry {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  // 1 for numerical features, number of categories otherwise.
  std::size_t cardinality = 1;
  // Category labels, in one-hot order. Empty for numerical features.
  std::vector<std::string> categories;
  // Min-max normalization range for numerical features. Filled either from
  // configuration or from the training users.
  bool has_range = false;
  double min_value = 0.0;
  double max_value = 0.0;

  std::size_t width() const { return kind == FeatureKind::kNumerical ? 1 : cardinality; }
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureEntry> entries) : entries_(std::move(entries)) {
    validate();
  }

  std::size_t num_features() const { return entries_.size(); }
  std::size_t encoded_width() const { return offsets_.empty() ? 0 : offsets_.back(); }
  bool empty() const { return entries_.empty(); }

  const FeatureEntry& entry(std::size_t i) const { return entries_.at(i); }
  FeatureEntry& mutable_entry(std::size_t i) { return entries_.at(i); }
  const std::vector<FeatureEntry>& entries() const { return entries_; }

  /// Offset of feature i's block in the flat encoding.
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

 private:
  void validate() {
    offsets_.assign(1, 0);
    for (const auto& e : entries_) {
      if (e.kind == FeatureKind::kCategorical && e.cardinality < 2) {
        throw ConfigError("categorical feature '" + e.name + "' needs at least 2 categories");
      }
      if (e.kind == FeatureKind::kNumerical && e.cardinality != 1) {
        throw ConfigError("numerical feature '" + e.name + "' must have cardinality 1");
      }
      offsets_.push_back(offsets_.back() + e.width());
    }
  }

  std::vector<FeatureEntry> entries_;
  std::vector<std::size_t> offsets_;
};

/// Encoded feature record: numerical entries in [-1, 1], categorical
/// entries one-hot.
struct FeatureVector {
  const FeatureSchema* schema = nullptr;
  std::vector<double> values;
};

struct PerturbedFeatureVector {
  std::vector<double> values;
  // Indices of the features that were perturbed, ascending.
  std::vector<std::size_t> selected;
  double budget_per_feature = 0.0;
};

namespace internal {

inline void check_budget(double epsilon) {
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) {
    throw InvalidBudgetError("privacy budget must be positive and finite, got " +
                             std::to_string(epsilon));
  }
}

}  // namespace internal

/// Output range constant of the piecewise mechanism,
/// (e^{eps/2} + 1) / (e^{eps/2} - 1), evaluated as 1 + 2 / expm1(eps/2) so
/// that large budgets do not overflow.
inline double pm_range_constant(double epsilon) {
  internal::check_budget(epsilon);
  return 1.0 + 2.0 / std::expm1(epsilon / 2.0);
}

/// Interval [l(x), r(x)] that holds the high-probability mass for input x.
struct PmInterval {
  double left;
  double right;
};

inline PmInterval pm_interval(double x, double range_c) {
  const double l = (range_c + 1.0) / 2.0 * x - (range_c - 1.0) / 2.0;
  return {l, l + range_c - 1.0};
}

/// Probability that the piecewise mechanism samples inside [l(x), r(x)].
inline double pm_inside_probability(double epsilon) {
  return 1.0 / (1.0 + std::exp(-epsilon / 2.0));
}

/// Piecewise mechanism for a single number in [-1, 1]. The result is an
/// unbiased estimate of x in [-C, C].
inline double perturb_number(double x, double epsilon, RandomStream& rng) {
  const double c = pm_range_constant(epsilon);
  if (!(std::abs(x) <= 1.0)) {
    throw DomainError("piecewise mechanism input must lie in [-1, 1], got " + std::to_string(x));
  }
  const auto [l, r] = pm_interval(x, c);
  if (rng.uniform() < pm_inside_probability(epsilon)) {
    return rng.uniform(l, r);
  }
  // Uniform over [-C, l) U (r, C]: pick a segment proportionally to its
  // length, then a point inside it. A zero-length segment is never chosen.
  const double left_len = std::max(0.0, l + c);
  const double right_len = std::max(0.0, c - r);
  const double u = rng.uniform() * (left_len + right_len);
  if (u < left_len) {
    return -c + u;
  }
  return r + (u - left_len);
}

/// Flip-up probability for zero bits under optimized unary encoding.
inline double oue_flip_probability(double epsilon) { return 1.0 / (std::exp(epsilon) + 1.0); }

/// Optimized unary encoding of a one-hot vector. The set bit survives with
/// probability 1/2; each zero bit turns on with probability 1/(e^eps + 1).
inline std::vector<double> perturb_onehot(std::span<const double> x, double epsilon,
                                          RandomStream& rng) {
  internal::check_budget(epsilon);
  if (x.size() < 2) {
    throw MalformedInputError("one-hot vector must have width >= 2");
  }
  std::size_t ones = 0;
  for (double v : x) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw MalformedInputError("one-hot vector has an entry other than 0/1");
    }
  }
  if (ones != 1) {
    throw MalformedInputError("one-hot vector must have exactly one set bit, found " +
                              std::to_string(ones));
  }
  const double q = oue_flip_probability(epsilon);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = x[i] == 1.0 ? 0.5 : q;
    out[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  return out;
}

/// Number of features to perturb: max{1, min{n, floor(eps1 / 2.5)}}.
inline std::size_t select_k(std::size_t n, double epsilon1) {
  internal::check_budget(epsilon1);
  if (n == 0) {
    throw ConfigError("feature count must be positive");
  }
  const double f = std::floor(epsilon1 / 2.5);
  const std::size_t m = f >= static_cast<double>(n) ? n : static_cast<std::size_t>(f);
  return std::max<std::size_t>(1, m);
}

/// Checks the pre-perturbation invariants of an encoded feature vector.
inline void validate_feature_vector(const FeatureVector& x) {
  if (x.schema == nullptr) {
    throw ConfigError("feature vector has no schema");
  }
  const FeatureSchema& s = *x.schema;
  if (x.values.size() != s.encoded_width()) {
    throw ConfigError("feature vector width " + std::to_string(x.values.size()) +
                      " does not match schema width " + std::to_string(s.encoded_width()));
  }
  for (std::size_t i = 0; i < s.num_features(); ++i) {
    const auto& e = s.entry(i);
    const std::size_t off = s.offset(i);
    if (e.kind == FeatureKind::kNumerical) {
      if (!(std::abs(x.values[off]) <= 1.0)) {
        throw DomainError("numerical feature '" + e.name + "' is not normalized into [-1, 1]");
      }
    } else {
      std::size_t ones = 0;
      for (std::size_t j = 0; j < e.cardinality; ++j) {
        const double v = x.values[off + j];
        if (v == 1.0) ++ones;
        else if (v != 0.0) ones += 2;
      }
      if (ones != 1) {
        throw MalformedInputError("categorical feature '" + e.name + "' is not one-hot");
      }
    }
  }
}

/// Perturbs a whole feature vector under total budget epsilon1. A uniformly
/// random subset of k features is perturbed at epsilon1/k each; the other
/// blocks are masked to zero. Numerical outputs are scaled by n/k,
/// categorical blocks are left as 0/1 bits.
inline PerturbedFeatureVector perturb_features(const FeatureVector& x, double epsilon1,
                                               RandomStream& rng) {
  validate_feature_vector(x);
  const FeatureSchema& s = *x.schema;
  const std::size_t n = s.num_features();
  const std::size_t k = select_k(n, epsilon1);
  const double eps = epsilon1 / static_cast<double>(k);

  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> selected(order.begin(), order.begin() + static_cast<long>(k));
  std::sort(selected.begin(), selected.end());

  PerturbedFeatureVector out;
  out.values.assign(s.encoded_width(), 0.0);
  out.budget_per_feature = eps;
  const double scale = static_cast<double>(n) / static_cast<double>(k);
  for (std::size_t i : selected) {
    const auto& e = s.entry(i);
    const std::size_t off = s.offset(i);
    if (e.kind == FeatureKind::kNumerical) {
      out.values[off] = scale * perturb_number(x.values[off], eps, rng);
    } else {
      std::span<const double> block(x.values.data() + off, e.cardinality);
      const auto bits = perturb_onehot(block, eps, rng);
      std::copy(bits.begin(), bits.end(), out.values.begin() + static_cast<long>(off));
    }
  }
  out.selected = std::move(selected);
  return out;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_LDP_FEATURE_HPP_
