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

#include "dipsgnn/experiment.hpp"

#include <limits>
#include <sstream>

#include <gtest/gtest.h>

namespace dipsgnn {
namespace {

KeyValueConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in);
}

TEST(ExperimentConfigTest, ParsesAllKeys) {
  const auto cfg = experiment_config_from(parse_text(
      "interactions = data/log.tsv\n"
      "features = data/users.tsv\n"
      "delimiter = tab\n"
      "core = 5\n"
      "train_frac = 0.75\n"
      "valid_frac = 0.2\n"
      "max_length = 30\n"
      "split_seed = 3\n"
      "item_dim = 32\n"
      "user_dim = 16\n"
      "steps = 1, 2, 3\n"
      "embed_norm = 2\n"
      "loss = ce\n"
      "epsilon1 = 10, 20\n"
      "epsilon2 = 3, 5, inf\n"
      "delta = 1e-6\n"
      "methods = dipsgnn, edgerand, nonprivate\n"
      "seeds = 1, 2\n"
      "epochs = 4\n"
      "learning_rate = 0.01\n"
      "batch_size = 64\n"
      "ks = 1, 10\n"
      "exclude_seen = true\n"
      "threads = 2\n"
      "[features]\n"
      "age = numerical\n"
      "gender = categorical F M\n"));
  EXPECT_EQ(cfg.interactions_path, "data/log.tsv");
  EXPECT_EQ(cfg.delimiter, '\t');
  EXPECT_EQ(cfg.core, 5u);
  EXPECT_EQ(cfg.split.train_frac, 0.75);
  EXPECT_EQ(cfg.split.max_length, 30u);
  EXPECT_EQ(cfg.steps, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(cfg.loss, LossKind::kCategorical);
  EXPECT_EQ(cfg.epsilon2.size(), 3u);
  EXPECT_EQ(cfg.epsilon2[2], std::numeric_limits<double>::infinity());
  EXPECT_EQ(cfg.methods.size(), 3u);
  EXPECT_EQ(cfg.methods[1], Method::kEdgeRand);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(cfg.train.batch_size, 64u);
  EXPECT_EQ(cfg.train.ks, (std::vector<int>{1, 10}));
  EXPECT_TRUE(cfg.train.exclude_seen);
  EXPECT_EQ(cfg.threads, 2u);
  EXPECT_EQ(cfg.schema.encoded_width(), 3u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfigTest, RejectsBadInput) {
  EXPECT_THROW(experiment_config_from(parse_text("epoch = 3\n")), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("loss = mse\n")), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("methods = dpsgd\n")), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("delimiter = ::\n")), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("seeds = 1, 1\n")).validate(), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("ks = 5, 0\n")).validate(), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("epsilon2 = 0\n")).validate(), ConfigError);
  EXPECT_THROW(experiment_config_from(parse_text("steps = 0\n")).validate(), ConfigError);
}

Dataset small_dataset(std::uint64_t seed = 5) {
  SyntheticOptions opt;
  opt.num_users = 40;
  opt.num_items = 20;
  opt.min_length = 12;
  opt.max_length = 18;
  return generate_planted_markov(opt, seed);
}

ExperimentConfig small_config(const Dataset& data) {
  ExperimentConfig cfg;
  cfg.schema = data.schema;
  cfg.item_dim = 8;
  cfg.user_dim = 4;
  cfg.split.max_length = 10;
  cfg.train.epochs = 2;
  cfg.train.learning_rate = 0.01;
  cfg.seeds = {7};
  return cfg;
}

TEST(SyntheticDataTest, ShapeAndDeterminism) {
  const Dataset a = small_dataset(), b = small_dataset();
  EXPECT_EQ(a.log.records, b.log.records);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.features.size(), 40u);
  EXPECT_EQ(user_sequences(a.log).size(), 40u);
  for (const auto& [u, seq] : user_sequences(a.log)) {
    EXPECT_GE(seq.size(), 12u);
    EXPECT_LE(seq.size(), 18u);
  }
  EXPECT_NE(small_dataset(6).log.records, a.log.records);
}

TEST(RunExperimentTest, ReportInvariants) {
  const Dataset data = small_dataset();
  ExperimentConfig cfg = small_config(data);
  cfg.methods = {Method::kDipsgnn, Method::kEdgeRand, Method::kNonPrivate};
  cfg.seeds = {1, 2};
  const EvalReport report = run_experiment(cfg, data);
  ASSERT_EQ(report.cells.size(), 6u);
  EXPECT_DOUBLE_EQ(report.delta, 0.9 / static_cast<double>(report.num_edges));
  EXPECT_EQ(report.config_hash.size(), 16u);

  for (const auto& c : report.cells) {
    if (c.method == Method::kDipsgnn) {
      EXPECT_DOUBLE_EQ(c.privacy.sigma, calibrate_sigma(5.0, report.delta, 1, 1.0));
      EXPECT_GT(c.noisy_forward_passes, 0u);
    } else {
      EXPECT_EQ(c.privacy.sigma, 0.0);
      EXPECT_EQ(c.noisy_forward_passes, 0u);
    }
    EXPECT_EQ(c.edge_sigma > 0.0, c.method == Method::kEdgeRand);
    for (const char* split : {"valid", "test"}) {
      double prev = -1.0;
      for (const auto& [k, r] : c.recall.at(split)) {
        const double m = c.mrr.at(split).at(k);
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 100.0);
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, r + 1e-12);
        EXPECT_GE(r, prev);
        prev = r;
      }
    }
  }
  // 6 cells + 3 mean + 3 std groups, each 2 splits x 2 metrics x 3 K.
  EXPECT_EQ(report.rows.size(), 12u * 12u);
  std::size_t means = 0;
  for (const auto& row : report.rows) {
    if (row.seed != "mean") continue;
    ++means;
    EXPECT_NEAR(row.value,
                report.mean(parse_method(row.method), row.epsilon1, row.epsilon2, row.steps_T,
                            row.split, row.metric, row.k),
                1e-9);
  }
  EXPECT_EQ(means, 36u);

  const auto prov = provenance(cfg, report);
  EXPECT_EQ(prov.at("config_hash"), report.config_hash);
  EXPECT_EQ(prov.at("cells").size(), 6u);
  EXPECT_TRUE(prov.at("cells")[0].contains("noisy_forward_passes"));
}

std::string report_bytes(const ExperimentConfig& cfg, const Dataset& data) {
  std::ostringstream out;
  write_report(out, run_experiment(cfg, data));
  return out.str();
}

TEST(RunExperimentTest, BitIdenticalReports) {
  const Dataset data = small_dataset();
  ExperimentConfig cfg = small_config(data);
  cfg.methods = {Method::kDipsgnn, Method::kEdgeRand};
  const std::string a = report_bytes(cfg, data);
  EXPECT_EQ(a, report_bytes(cfg, data));
  cfg.threads = 2;
  EXPECT_EQ(a, report_bytes(cfg, data));
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "method,epsilon1,epsilon2,delta,steps_T,embed_norm_C,sigma,seed,epochs,split,metric,k,"
            "value");
  cfg.seeds = {8};
  EXPECT_NE(a, report_bytes(cfg, data));
}

TEST(RunExperimentTest, SigmaDecreasesAcrossBudgetSweep) {
  const Dataset data = small_dataset();
  ExperimentConfig cfg = small_config(data);
  cfg.train.epochs = 1;
  cfg.epsilon2 = {3, 4, 5};
  const EvalReport report = run_experiment(cfg, data);
  ASSERT_EQ(report.cells.size(), 3u);
  EXPECT_GT(report.cells[0].privacy.sigma, report.cells[1].privacy.sigma);
  EXPECT_GT(report.cells[1].privacy.sigma, report.cells[2].privacy.sigma);
  std::set<double> sigmas;
  for (const auto& row : report.rows) sigmas.insert(row.sigma);
  EXPECT_EQ(sigmas.size(), 3u);
}

TEST(RunExperimentTest, NonPrivateOverfitsPlantedCycle) {
  Dataset data;
  for (int u = 0; u < 20; ++u) {
    for (int t = 0; t < 15; ++t) {
      data.log.records.push_back({"u" + std::to_string(u), "i" + std::to_string((u + t) % 10), t});
    }
  }
  ExperimentConfig cfg;
  cfg.item_dim = 16;
  cfg.user_dim = 4;
  cfg.split.max_length = 8;
  cfg.split.valid_frac = 0.0;
  cfg.methods = {Method::kNonPrivate};
  cfg.train.epochs = 10;
  cfg.train.learning_rate = 0.01;
  cfg.train.batch_size = 16;
  cfg.train.ks = {1, 5};
  cfg.seeds = {3};
  const EvalReport report = run_experiment(cfg, data);
  const auto& log = report.cells.at(0).log;
  ASSERT_EQ(log.back().split, "train");
  EXPECT_GE(log.back().recall.at(1), 90.0);
}

TEST(RunExperimentTest, RejectsKLargerThanVocabulary) {
  const Dataset data = small_dataset();
  ExperimentConfig cfg = small_config(data);
  cfg.train.ks = {500};
  EXPECT_THROW(run_experiment(cfg, data), ConfigError);
}

}  // namespace
}  // namespace dipsgnn
