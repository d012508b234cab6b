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

#include "dipsgnn/ldp_feature.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace dipsgnn {
namespace {

using testing::binomial_z;
using testing::kZ1e4;
using testing::RunningStats;

// Closed form evaluated with 40-digit arithmetic.
constexpr double kRangeEps2 = 2.163953413738652848770004;
constexpr double kRangeEps1 = 4.082988165073596568262206;
constexpr double kInsideEps2 = 0.7310585786300048792511592;  // e / (e + 1)

TEST(PmRangeConstantTest, MatchesClosedForm) {
  EXPECT_NEAR(pm_range_constant(2.0), kRangeEps2, 1e-14);
  EXPECT_NEAR(pm_range_constant(1.0), kRangeEps1, 1e-14);
}

TEST(PmRangeConstantTest, TendsToOneForLargeBudgets) {
  EXPECT_NEAR(pm_range_constant(100.0), 1.0, 1e-20);
  EXPECT_GT(pm_range_constant(30.0), 1.0);
  EXPECT_EQ(pm_range_constant(5000.0), 1.0);
}

TEST(PmRangeConstantTest, StrictlyDecreasing) {
  double prev = std::numeric_limits<double>::infinity();
  for (double eps = 0.05; eps < 40.0; eps *= 1.3) {
    const double c = pm_range_constant(eps);
    EXPECT_LT(c, prev);
    EXPECT_GT(c, 1.0);
    prev = c;
  }
}

TEST(PmRangeConstantTest, RejectsInvalidBudgets) {
  EXPECT_THROW(pm_range_constant(0.0), InvalidBudgetError);
  EXPECT_THROW(pm_range_constant(-1.0), InvalidBudgetError);
  EXPECT_THROW(pm_range_constant(std::nan("")), InvalidBudgetError);
  EXPECT_THROW(pm_range_constant(std::numeric_limits<double>::infinity()), InvalidBudgetError);
}

TEST(PerturbNumberTest, IntervalEndpoints) {
  const auto [l0, r0] = pm_interval(0.0, kRangeEps2);
  EXPECT_NEAR(l0, -0.5819767068693264, 1e-14);
  EXPECT_NEAR(r0, 0.5819767068693264, 1e-14);
  const auto [l1, r1] = pm_interval(1.0, kRangeEps2);
  EXPECT_DOUBLE_EQ(l1, 1.0);
  EXPECT_DOUBLE_EQ(r1, kRangeEps2);
  const auto [lm, rm] = pm_interval(-1.0, kRangeEps2);
  EXPECT_DOUBLE_EQ(lm, -kRangeEps2);
  EXPECT_DOUBLE_EQ(rm, -1.0);
}

TEST(PerturbNumberTest, InsideFrequencyAtZero) {
  RandomStream rng(11);
  const auto [l, r] = pm_interval(0.0, kRangeEps2);
  const std::size_t n = 100000;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = perturb_number(0.0, 2.0, rng);
    ASSERT_LE(std::abs(v), kRangeEps2);
    if (v >= l && v <= r) ++inside;
  }
  EXPECT_NEAR(static_cast<double>(inside) / n, kInsideEps2, 0.01);
}

TEST(PerturbNumberTest, BoundaryInputsNeverUseEmptySegment) {
  RandomStream rng(3);
  for (double x : {1.0, -1.0}) {
    const double c = pm_range_constant(2.0);
    for (int i = 0; i < 50000; ++i) {
      const double v = perturb_number(x, 2.0, rng);
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_LE(std::abs(v), c);
    }
  }
}

TEST(PerturbNumberTest, UnbiasedAtHalf) {
  RandomStream rng(5);
  RunningStats st;
  for (int i = 0; i < 1000000; ++i) st.add(perturb_number(0.5, 2.0, rng));
  EXPECT_LE(std::abs(st.mean - 0.5), 4.0 * st.stderr_mean());
}

TEST(PerturbNumberTest, RangeHoldsOverRandomInputs) {
  RandomStream rng(17);
  for (int i = 0; i < 1000000; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    const double eps = rng.uniform(0.01, 10.0);
    const double v = perturb_number(x, eps, rng);
    ASSERT_LE(std::abs(v), pm_range_constant(eps)) << "x=" << x << " eps=" << eps;
  }
}

TEST(PerturbNumberTest, DensityRatioInsideVersusOutside) {
  // Per-unit-length density inside [l, r] is e^eps times the density
  // outside it.
  const double eps = 2.0;
  const double x = 0.3;
  const double c = pm_range_constant(eps);
  const auto [l, r] = pm_interval(x, c);
  RandomStream rng(23);
  const std::size_t n = 1000000;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = perturb_number(x, eps, rng);
    if (v >= l && v <= r) ++inside;
  }
  const double in_density = static_cast<double>(inside) / (r - l);
  const double out_density = static_cast<double>(n - inside) / (2.0 * c - (r - l));
  EXPECT_NEAR(in_density / out_density / std::exp(eps), 1.0, 0.05);
}

TEST(PerturbNumberTest, UnbiasedOnGrid) {
  RandomStream rng(29);
  for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (double eps : {0.5, 1.0, 2.0, 4.0}) {
      RunningStats st;
      for (int i = 0; i < 40000; ++i) st.add(perturb_number(x, eps, rng));
      EXPECT_LE(std::abs(st.mean - x), 4.0 * st.stderr_mean()) << "x=" << x << " eps=" << eps;
    }
  }
}

TEST(PerturbNumberTest, RejectsOutOfDomainInput) {
  RandomStream rng(1);
  EXPECT_THROW(perturb_number(1.5, 1.0, rng), DomainError);
  EXPECT_THROW(perturb_number(-1.0001, 1.0, rng), DomainError);
  EXPECT_THROW(perturb_number(std::nan(""), 1.0, rng), DomainError);
  EXPECT_THROW(perturb_number(0.0, 0.0, rng), InvalidBudgetError);
}

TEST(PerturbOnehotTest, FlipProbabilityAtLn3) {
  EXPECT_DOUBLE_EQ(oue_flip_probability(std::log(3.0)), 0.25);
}

TEST(PerturbOnehotTest, LargeBudgetNeverFlipsZeros) {
  RandomStream rng(7);
  const std::vector<double> x = {0, 0, 1, 0};
  std::size_t kept = 0;
  const std::size_t n = 20000;
  for (std::size_t t = 0; t < n; ++t) {
    const auto out = perturb_onehot(x, 1000.0, rng);
    EXPECT_EQ(out[0] + out[1] + out[3], 0.0);
    kept += out[2] == 1.0;
  }
  EXPECT_LE(std::abs(binomial_z(kept, n, 0.5)), kZ1e4);
}

TEST(PerturbOnehotTest, BitFrequencies) {
  RandomStream rng(9);
  const std::vector<double> x = {0, 1, 0, 0};
  const std::size_t n = 100000;
  std::vector<std::size_t> ones(4, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto out = perturb_onehot(x, 1.0, rng);
    for (std::size_t i = 0; i < 4; ++i) ones[i] += out[i] == 1.0;
  }
  EXPECT_NEAR(static_cast<double>(ones[1]) / n, 0.5, 0.005);
  for (std::size_t i : {0, 2, 3}) {
    EXPECT_NEAR(static_cast<double>(ones[i]) / n, 0.2689414213699951, 0.005);
  }
}

TEST(PerturbOnehotTest, RejectsMalformedInput) {
  RandomStream rng(1);
  EXPECT_THROW(perturb_onehot(std::vector<double>{1, 1, 0}, 1.0, rng), MalformedInputError);
  EXPECT_THROW(perturb_onehot(std::vector<double>{0, 0, 0}, 1.0, rng), MalformedInputError);
  EXPECT_THROW(perturb_onehot(std::vector<double>{0.5, 0.5}, 1.0, rng), MalformedInputError);
  EXPECT_THROW(perturb_onehot(std::vector<double>{1}, 1.0, rng), MalformedInputError);
}

TEST(SelectKTest, Examples) {
  EXPECT_EQ(select_k(3, 20.0), 3u);
  EXPECT_EQ(select_k(10, 5.0), 2u);
  EXPECT_EQ(select_k(6, 1.0), 1u);
}

TEST(SelectKTest, TableOracle) {
  // floor(eps / 2.5) for each budget, tabulated by hand.
  const std::vector<std::pair<double, std::size_t>> floors = {
      {0.1, 0}, {1.0, 0}, {2.5, 1}, {5.0, 2}, {10.0, 4}, {20.0, 8}, {30.0, 12}};
  for (std::size_t n = 1; n <= 20; ++n) {
    for (const auto& [eps, fl] : floors) {
      const std::size_t expected = std::max<std::size_t>(1, std::min(n, fl));
      EXPECT_EQ(select_k(n, eps), expected) << "n=" << n << " eps=" << eps;
      EXPECT_EQ(select_k(n, eps), select_k(n, eps));
    }
  }
}

FeatureSchema mixed_schema() {
  return FeatureSchema({
      {"age", FeatureKind::kNumerical, 1, {}, true, 0, 100},
      {"gender", FeatureKind::kCategorical, 2, {"F", "M"}, false, 0, 0},
      {"score", FeatureKind::kNumerical, 1, {}, true, 0, 1},
      {"job", FeatureKind::kCategorical, 3, {"a", "b", "c"}, false, 0, 0},
  });
}

TEST(FeatureSchemaTest, OffsetsAndWidth) {
  const FeatureSchema s = mixed_schema();
  EXPECT_EQ(s.num_features(), 4u);
  EXPECT_EQ(s.encoded_width(), 7u);
  EXPECT_EQ(s.offset(1), 1u);
  EXPECT_EQ(s.offset(3), 4u);
  EXPECT_THROW(FeatureSchema({{"x", FeatureKind::kCategorical, 1, {"a"}, false, 0, 0}}),
               ConfigError);
}

TEST(PerturbFeaturesTest, SingleNumericalFeature) {
  const FeatureSchema s({{"x", FeatureKind::kNumerical, 1, {}, true, 0, 1}});
  FeatureVector x{&s, {0.25}};
  RandomStream rng(2);
  const double c = pm_range_constant(20.0);
  for (int i = 0; i < 1000; ++i) {
    const auto out = perturb_features(x, 20.0, rng);
    ASSERT_EQ(out.selected, std::vector<std::size_t>{0});
    EXPECT_DOUBLE_EQ(out.budget_per_feature, 20.0);
    EXPECT_LE(std::abs(out.values[0]), c);
  }
}

TEST(PerturbFeaturesTest, AllFeaturesSelectedWhenKEqualsN) {
  const FeatureSchema s = mixed_schema();
  FeatureVector x{&s, {0.2, 0, 1, -0.7, 1, 0, 0}};
  RandomStream rng(4);
  const auto out = perturb_features(x, 40.0, rng);
  EXPECT_EQ(out.selected, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(out.budget_per_feature, 10.0);
}

TEST(PerturbFeaturesTest, MasksUnselectedCategoricalBlocks) {
  const FeatureSchema s({
      {"a", FeatureKind::kCategorical, 2, {"0", "1"}, false, 0, 0},
      {"b", FeatureKind::kCategorical, 3, {"0", "1", "2"}, false, 0, 0},
      {"c", FeatureKind::kCategorical, 2, {"0", "1"}, false, 0, 0},
      {"d", FeatureKind::kCategorical, 4, {"0", "1", "2", "3"}, false, 0, 0},
  });
  FeatureVector x{&s, {1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1}};
  RandomStream rng(6);
  std::vector<std::size_t> picked(4, 0);
  for (int t = 0; t < 4000; ++t) {
    const auto out = perturb_features(x, 2.5, rng);
    ASSERT_EQ(out.selected.size(), 1u);
    EXPECT_DOUBLE_EQ(out.budget_per_feature, 2.5);
    ++picked[out.selected[0]];
    for (std::size_t f = 0; f < 4; ++f) {
      if (f == out.selected[0]) continue;
      for (std::size_t j = 0; j < s.entry(f).width(); ++j) {
        ASSERT_EQ(out.values[s.offset(f) + j], 0.0);
      }
    }
  }
  // Each feature is chosen with probability 1/4.
  for (std::size_t f = 0; f < 4; ++f) EXPECT_LE(std::abs(binomial_z(picked[f], 4000, 0.25)), kZ1e4);
}

TEST(PerturbFeaturesTest, OutputInvariantsOnRandomInputs) {
  const FeatureSchema s = mixed_schema();
  RandomStream rng(8);
  for (int t = 0; t < 5000; ++t) {
    const double eps1 = rng.uniform(0.5, 30.0);
    FeatureVector x{&s, std::vector<double>(7, 0.0)};
    x.values[0] = rng.uniform(-1, 1);
    x.values[1 + rng.index(2)] = 1.0;
    x.values[3] = rng.uniform(-1, 1);
    x.values[4 + rng.index(3)] = 1.0;
    const auto out = perturb_features(x, eps1, rng);
    const std::size_t k = select_k(4, eps1);
    ASSERT_EQ(out.selected.size(), k);
    const double bound = 4.0 / k * pm_range_constant(eps1 / k);
    std::vector<bool> sel(4, false);
    for (auto i : out.selected) sel[i] = true;
    for (std::size_t f = 0; f < 4; ++f) {
      const auto& e = s.entry(f);
      for (std::size_t j = 0; j < e.width(); ++j) {
        const double v = out.values[s.offset(f) + j];
        if (!sel[f]) {
          ASSERT_EQ(v, 0.0);
        } else if (e.kind == FeatureKind::kNumerical) {
          ASSERT_LE(std::abs(v), bound * (1 + 1e-12));
        } else {
          ASSERT_TRUE(v == 0.0 || v == 1.0);
        }
      }
    }
  }
}

TEST(PerturbFeaturesTest, DeterministicUnderSeed) {
  const FeatureSchema s = mixed_schema();
  FeatureVector x{&s, {0.2, 0, 1, -0.7, 1, 0, 0}};
  RandomStream a(77), b(77);
  for (int i = 0; i < 100; ++i) {
    const auto oa = perturb_features(x, 7.0, a);
    const auto ob = perturb_features(x, 7.0, b);
    EXPECT_EQ(oa.values, ob.values);
    EXPECT_EQ(oa.selected, ob.selected);
  }
}

TEST(PerturbFeaturesTest, RejectsInvalidVectors) {
  const FeatureSchema s = mixed_schema();
  RandomStream rng(1);
  FeatureVector unnormalized{&s, {3.0, 0, 1, 0, 1, 0, 0}};
  EXPECT_THROW(perturb_features(unnormalized, 20.0, rng), DomainError);
  FeatureVector two_hot{&s, {0.0, 1, 1, 0, 1, 0, 0}};
  EXPECT_THROW(perturb_features(two_hot, 20.0, rng), MalformedInputError);
  FeatureVector short_vec{&s, {0.0, 1}};
  EXPECT_THROW(perturb_features(short_vec, 20.0, rng), ConfigError);
}

}  // namespace
}  // namespace dipsgnn
