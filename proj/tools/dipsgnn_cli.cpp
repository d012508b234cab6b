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

// Command-line front end: generate, ingest, calibrate, train, evaluate,
// sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dipsgnn/dipsgnn.hpp"

namespace fs = std::filesystem;

namespace dipsgnn {
namespace {

// Config keys whose values are file paths, resolved against the config
// file's directory.
constexpr const char* kPathKeys[] = {"interactions", "features"};

struct ExperimentFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// Registers one "--flag" per config key; given flags override the file.
void add_experiment_flags(CLI::App* app, ExperimentFlags& flags) {
  app->add_option("--config", flags.config_path, "Key-value experiment config file")
      ->check(CLI::ExistingFile);
  const std::vector<std::pair<const char*, const char*>> keys = {
      {"interactions", "Interaction file (user_id, item_id, timestamp)"},
      {"features", "User feature file"},
      {"delimiter", "Field delimiter of the input files ('tab' for tabs)"},
      {"core", "Minimum interactions per user and item"},
      {"train_frac", "Fraction of each sequence in the training pool"},
      {"valid_frac", "Fraction of training samples held out for validation"},
      {"max_length", "Maximum prefix length"},
      {"split_seed", "Seed of the validation hold-out"},
      {"item_dim", "Item embedding width d"},
      {"user_dim", "User embedding width d'"},
      {"steps", "Propagation steps T (list)"},
      {"embed_norm", "Row norm bound C"},
      {"loss", "bce or ce"},
      {"epsilon1", "Feature budget(s)"},
      {"epsilon2", "Interaction budget(s); 'inf' disables noise"},
      {"delta", "delta; omit for 0.9 / transitions"},
      {"methods", "dipsgnn, edgerand, nonprivate (list)"},
      {"epochs", "Training epochs"},
      {"learning_rate", "Adam learning rate"},
      {"batch_size", "Mini-batch size"},
      {"ks", "Cutoffs K (list)"},
      {"exclude_seen", "Exclude the input sequence's items from ranking (true/false)"},
      {"threads", "Worker threads for independent cells"},
  };
  for (const auto& [key, help] : keys) {
    std::string flag = std::string("--") + key;
    for (char& c : flag) {
      if (c == '_') c = '-';
    }
    const std::string k = key;
    app->add_option_function<std::string>(
        flag, [&flags, k](const std::string& v) { flags.overrides[k] = v; }, help);
  }
}

ExperimentConfig load_experiment_config(const ExperimentFlags& flags) {
  KeyValueConfig kv;
  if (!flags.config_path.empty()) {
    kv = KeyValueConfig::load(flags.config_path);
    const fs::path base = fs::path(flags.config_path).parent_path();
    for (const char* key : kPathKeys) {
      if (auto v = kv.get(key); v && !v->empty() && fs::path(*v).is_relative()) {
        kv.set(key, (base / *v).lexically_normal().string());
      }
    }
  }
  for (const auto& [k, v] : flags.overrides) kv.set(k, v);
  ExperimentConfig cfg = experiment_config_from(kv);
  if (cfg.interactions_path.empty()) throw ConfigError("no interaction file given");
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json privacy_json(const PrivacySpec& p) {
  return {{"epsilon1", format_number(p.epsilon1)}, {"epsilon2", format_number(p.epsilon2)},
          {"delta", p.delta},                      {"T", p.steps_T},
          {"C", p.embed_norm_C},                   {"sigma", p.sigma}};
}

// Training log records tagged with the cell they belong to.
void append_cell_log(const fs::path& path, const CellResult& c) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string());
  for (const auto& r : c.log) {
    nlohmann::json j = to_json(r);
    j["method"] = method_name(c.method);
    j["epsilon1"] = format_number(c.epsilon1);
    j["epsilon2"] = format_number(c.epsilon2);
    j["steps_T"] = c.steps_T;
    j["seed"] = c.seed;
    out << j.dump() << '\n';
  }
}

void print_summary(const CellResult& c) {
  std::printf("%s eps1=%s eps2=%s T=%d seed=%llu sigma=%.6g", method_name(c.method).c_str(),
              format_number(c.epsilon1).c_str(), format_number(c.epsilon2).c_str(), c.steps_T,
              static_cast<unsigned long long>(c.seed),
              c.method == Method::kEdgeRand ? c.edge_sigma : c.privacy.sigma);
  if (auto it = c.recall.find("test"); it != c.recall.end()) {
    for (const auto& [k, v] : it->second) std::printf(" R@%d=%.2f", k, v);
    for (const auto& [k, v] : c.mrr.at("test")) std::printf(" M@%d=%.2f", k, v);
  }
  std::printf("\n");
}

// A single value for commands that train exactly one cell.
template <typename T>
T single(const std::vector<T>& values, const char* what) {
  if (values.size() != 1) throw ConfigError(std::string(what) + " must be a single value here");
  return values.front();
}

int cmd_generate(const fs::path& out_dir, std::uint64_t seed, const SyntheticOptions& opt) {
  fs::create_directories(out_dir);
  const Dataset d = generate_planted_markov(opt, seed);
  {
    std::ofstream out(out_dir / "interactions.csv");
    write_interactions(out, d.log);
  }
  {
    std::ofstream out(out_dir / "features.csv");
    write_feature_file(out, d);
  }
  std::ostringstream cfg;
  cfg << "# Synthetic planted-Markov dataset (seed " << seed << ")\n"
      << "interactions = interactions.csv\n"
      << "features = features.csv\n"
      << "max_length = 30\n"
      << "item_dim = 16\n"
      << "user_dim = 8\n"
      << "learning_rate = 0.005\n\n";
  write_schema(cfg, d.schema);
  write_text(out_dir / "config.ini", cfg.str());
  std::printf("wrote %s\n", (out_dir / "config.ini").string().c_str());
  return 0;
}

int cmd_ingest(const ExperimentFlags& flags, std::uint64_t seed, const fs::path& out_dir) {
  ExperimentConfig cfg = load_experiment_config(flags);
  cfg.split.seed = seed;
  fs::create_directories(out_dir);
  const InteractionLog log = read_interactions(cfg.interactions_path, cfg.delimiter);
  const InteractionLog kept = ten_core_filter(log, cfg.core);
  if (kept.records.empty()) throw ConfigError("dataset is empty after core filtering");
  const SplitDataset ds = chronological_split(kept, cfg.split);
  {
    std::ofstream out(out_dir / "interactions.filtered.csv");
    write_interactions(out, kept, cfg.delimiter);
  }
  save_split_manifest((out_dir / "split.json").string(), ds);
  const std::size_t transitions = count_transitions(kept);
  const nlohmann::json stats = {{"interactions_in", log.records.size()},
                                {"interactions_kept", kept.records.size()},
                                {"users", ds.users.size()},
                                {"items", ds.items.size()},
                                {"transitions", transitions},
                                {"delta_default", delta_default(transitions)},
                                {"train", ds.train.size()},
                                {"valid", ds.valid.size()},
                                {"test", ds.test.size()},
                                {"split_seed", seed}};
  write_text(out_dir / "ingest.json", json_text(stats));
  std::cout << stats.dump(2) << '\n';
  return 0;
}

int cmd_calibrate(double epsilon2, double delta, std::size_t num_edges, int steps, double c) {
  if (delta <= 0.0) {
    if (num_edges == 0) throw ConfigError("give --delta or --num-edges");
    delta = delta_default(num_edges);
  }
  PrivacySpec spec;
  spec.epsilon2 = epsilon2;
  spec.delta = delta;
  spec.steps_T = steps;
  spec.embed_norm_C = c;
  spec = calibrated(spec);
  const nlohmann::json j = {{"epsilon2", format_number(spec.epsilon2)},
                            {"delta", spec.delta},
                            {"T", spec.steps_T},
                            {"C", spec.embed_norm_C},
                            {"sigma", spec.sigma}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_train(const ExperimentFlags& flags, std::uint64_t seed, const fs::path& out_dir) {
  ExperimentConfig cfg = load_experiment_config(flags);
  cfg.seeds = {seed};
  cfg.validate();
  fs::create_directories(out_dir);
  const Method method = single(cfg.methods, "methods");
  const double eps1 = single(cfg.epsilon1, "epsilon1");
  const double eps2 = single(cfg.epsilon2, "epsilon2");
  const int steps = single(cfg.steps, "steps");
  const PreparedData data = prepare_data(cfg, load_dataset(cfg));
  const double delta = cfg.delta > 0.0 ? cfg.delta : delta_default(data.num_edges);

  ModelParams params;
  const CellResult cell = run_cell(cfg, data, method, eps1, eps2, steps, seed, delta, &params);
  const CellInputs in = prepare_cell(cfg, data, method, eps1, eps2, steps, seed, delta);
  save_checkpoint((out_dir / "model.ckpt").string(), in.model, cell.privacy, params, method);
  append_cell_log(out_dir / "training_log.jsonl", cell);
  nlohmann::json record = privacy_json(cell.privacy);
  record["method"] = method_name(method);
  record["seed"] = seed;
  record["edge_sigma"] = cell.edge_sigma;
  record["noisy_forward_passes"] = cell.noisy_forward_passes;
  record["config_hash"] = config_hash(cfg);
  write_text(out_dir / "train.json", json_text(record));
  print_summary(cell);
  return 0;
}

int cmd_evaluate(const ExperimentFlags& flags, const std::string& checkpoint, std::uint64_t seed,
                 const fs::path& out_dir) {
  ExperimentConfig cfg = load_experiment_config(flags);
  cfg.seeds = {seed};
  const Checkpoint ck = load_checkpoint(checkpoint);
  cfg.methods = {ck.method};
  cfg.epsilon1 = {ck.privacy.epsilon1};
  cfg.epsilon2 = {ck.privacy.epsilon2};
  cfg.steps = {ck.privacy.steps_T};
  cfg.delta = ck.privacy.delta;
  cfg.embed_norm = ck.privacy.embed_norm_C;
  cfg.item_dim = ck.config.item_dim;
  cfg.user_dim = ck.config.user_dim;
  cfg.loss = ck.config.loss;
  cfg.validate();
  fs::create_directories(out_dir);

  const PreparedData data = prepare_data(cfg, load_dataset(cfg));
  const CellInputs in = prepare_cell(cfg, data, ck.method, ck.privacy.epsilon1,
                                     ck.privacy.epsilon2, ck.privacy.steps_T, seed,
                                     ck.privacy.delta);
  if (in.model.num_items != ck.config.num_items ||
      in.model.feature_width != ck.config.feature_width) {
    throw ConfigError("checkpoint does not match the dataset's item vocabulary or feature schema");
  }
  EvalReport report;
  report.delta = ck.privacy.delta;
  report.num_edges = data.num_edges;
  report.config_hash = config_hash(cfg);
  CellResult cell = cell_header(in, seed);
  evaluate_cell(cfg, in, ck.params, seed, cell);
  report.cells.push_back(cell);
  assemble_rows(cfg, report);
  {
    std::ofstream out(out_dir / "report.csv");
    write_report(out, report);
  }
  write_text(out_dir / "provenance.json", json_text(provenance(cfg, report)));
  print_summary(cell);
  return 0;
}

int cmd_sweep(const ExperimentFlags& flags, const std::vector<std::uint64_t>& seeds,
              const fs::path& out_dir) {
  ExperimentConfig cfg = load_experiment_config(flags);
  cfg.seeds = seeds;
  fs::create_directories(out_dir);
  const EvalReport report = run_experiment(cfg);
  {
    std::ofstream out(out_dir / "report.csv");
    write_report(out, report);
  }
  write_text(out_dir / "provenance.json", json_text(provenance(cfg, report)));
  const fs::path log = out_dir / "training_log.jsonl";
  fs::remove(log);
  for (const auto& c : report.cells) {
    append_cell_log(log, c);
    print_summary(c);
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Differentially private sequential recommendation with graph neural networks"};
  app.require_subcommand(1);

  fs::path out_dir;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  ExperimentFlags flags;

  auto* gen = app.add_subcommand("generate", "Write a synthetic planted-Markov dataset");
  SyntheticOptions syn;
  gen->add_option("--out-dir", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--users", syn.num_users, "Number of users")->capture_default_str();
  gen->add_option("--items", syn.num_items, "Number of items")->capture_default_str();
  gen->add_option("--groups", syn.num_groups, "Latent user groups")->capture_default_str();
  gen->add_option("--successors", syn.successors, "Successors per item and group")
      ->capture_default_str();
  gen->add_option("--feature-signal", syn.feature_signal,
                  "Probability that a group-linked feature reflects the group")
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Filter and split interactions into a manifest");
  auto* calibrate = app.add_subcommand("calibrate", "Noise scale for a target epsilon2");
  auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint");
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  auto* sweep = app.add_subcommand("sweep", "Run methods x budgets x steps x seeds");

  for (auto* sub : {ingest, train_cmd, eval_cmd}) {
    add_experiment_flags(sub, flags);
    sub->add_option("--seed", seed, "Random seed")->required();
    sub->add_option("--out-dir", out_dir, "Output directory")->required();
  }
  add_experiment_flags(sweep, flags);
  sweep->add_option("--seed", seeds, "Random seeds (one or more)")->required()->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();

  std::string checkpoint;
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint written by train")
      ->required()
      ->check(CLI::ExistingFile);

  std::string epsilon2_text;
  double delta = 0.0;
  std::size_t num_edges = 0;
  int steps = 1;
  double embed_norm = 1.0;
  calibrate->add_option("--epsilon2", epsilon2_text, "Target epsilon2 ('inf' for no noise)")
      ->required();
  calibrate->add_option("--delta", delta, "delta in (0, 1)");
  calibrate->add_option("--num-edges", num_edges, "Edge count for the default delta");
  calibrate->add_option("--steps", steps, "Aggregation steps T")->capture_default_str();
  calibrate->add_option("--embed-norm", embed_norm, "Row norm bound C")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*gen) return cmd_generate(out_dir, seed, syn);
  if (*ingest) return cmd_ingest(flags, seed, out_dir);
  if (*calibrate) {
    return cmd_calibrate(parse_double(epsilon2_text, "epsilon2"), delta, num_edges, steps,
                         embed_norm);
  }
  if (*train_cmd) return cmd_train(flags, seed, out_dir);
  if (*eval_cmd) return cmd_evaluate(flags, checkpoint, seed, out_dir);
  if (*sweep) return cmd_sweep(flags, seeds, out_dir);
  return 1;
}

}  // namespace
}  // namespace dipsgnn

int main(int argc, char** argv) {
  try {
    return dipsgnn::run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
