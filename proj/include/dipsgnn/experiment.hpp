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

// Experiment orchestration: methods x privacy budgets x propagation depths
// x seeds, each cell trained and evaluated independently, merged into one
// report.

#ifndef DIPSGNN_EXPERIMENT_HPP_
#define DIPSGNN_EXPERIMENT_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsgnn/common.hpp"
#include "dipsgnn/config.hpp"
#include "dipsgnn/feature_io.hpp"
#include "dipsgnn/graph_pipeline.hpp"
#include "dipsgnn/ldp_feature.hpp"
#include "dipsgnn/privacy_accountant.hpp"
#include "dipsgnn/trainer.hpp"

namespace dipsgnn {

struct ExperimentConfig {
  std::string interactions_path;
  std::string features_path;
  char delimiter = ',';
  FeatureSchema schema;

  std::size_t core = 10;
  SplitOptions split;  // split.seed fixes the validation hold-out

  std::size_t item_dim = 100;
  std::size_t user_dim = 50;
  std::vector<int> steps = {1};
  double embed_norm = 1.0;
  LossKind loss = LossKind::kBinaryCrossEntropy;

  std::vector<double> epsilon1 = {20.0};
  std::vector<double> epsilon2 = {5.0};
  // Non-positive means 0.9 / (number of transitions in the filtered log).
  double delta = 0.0;

  std::vector<Method> methods = {Method::kDipsgnn};
  std::vector<std::uint64_t> seeds = {0};
  TrainConfig train;
  std::size_t threads = 1;

  void validate() const {
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (seeds.empty() || uniq.size() != seeds.size()) {
      throw ConfigError("seeds must be a non-empty list of distinct values");
    }
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (train.ks.empty()) throw ConfigError("at least one K is required");
    for (int k : train.ks) check_k(k);
    for (int t : steps) {
      if (t <= 0) throw ConfigError("propagation steps must be positive");
    }
    if (!(embed_norm > 0.0)) throw ConfigError("embed_norm must be positive");
    for (double e : epsilon1) {
      if (!(e > 0.0)) throw ConfigError("epsilon1 values must be positive");
    }
    for (double e : epsilon2) {
      if (!(e > 0.0)) throw ConfigError("epsilon2 values must be positive");
    }
  }

  /// Canonical text form; its hash identifies the configuration in reports.
  std::string canonical() const {
    std::ostringstream o;
    o.precision(17);
    o << "interactions=" << interactions_path << ";features=" << features_path
      << ";core=" << core << ";train_frac=" << split.train_frac
      << ";valid_frac=" << split.valid_frac << ";max_length=" << split.max_length
      << ";split_seed=" << split.seed << ";d=" << item_dim << ";d_user=" << user_dim
      << ";C=" << embed_norm << ";loss=" << (loss == LossKind::kCategorical ? "ce" : "bce")
      << ";delta=" << delta << ";epochs=" << train.epochs << ";lr=" << train.learning_rate
      << ";batch=" << train.batch_size << ";exclude_seen=" << train.exclude_seen;
    o << ";T=";
    for (int t : steps) o << t << ',';
    o << ";eps1=";
    for (double e : epsilon1) o << e << ',';
    o << ";eps2=";
    for (double e : epsilon2) o << e << ',';
    o << ";methods=";
    for (auto m : methods) o << method_name(m) << ',';
    o << ";seeds=";
    for (auto s : seeds) o << s << ',';
    o << ";ks=";
    for (int k : train.ks) o << k << ',';
    o << ";schema=";
    for (const auto& e : schema.entries()) {
      o << e.name << ':' << (e.kind == FeatureKind::kNumerical ? "num" : "cat") << ':'
        << e.cardinality << ',';
    }
    return o.str();
  }
};

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  for (const auto& tok : split(text, ',')) {
    const std::string t = trim(tok);
    if (!t.empty()) out.push_back(parse(t));
  }
  return out;
}

/// Builds an ExperimentConfig from the key-value format. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
inline ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
  ExperimentConfig c;
  static const std::set<std::string> known = {
      "interactions", "features",   "delimiter",  "core",     "train_frac", "valid_frac",
      "max_length",   "split_seed", "item_dim",   "user_dim", "steps",      "embed_norm",
      "loss",         "epsilon1",   "epsilon2",   "delta",    "methods",    "seeds",
      "epochs",       "learning_rate", "batch_size", "ks",    "exclude_seen", "threads"};
  for (const auto& [key, value] : kv.section("")) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  auto get = [&](const char* k) { return kv.get(k); };
  auto to_size = [](const std::string& s, const char* what) {
    const long long v = parse_int(s, what);
    if (v < 0) throw ConfigError(std::string(what) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  if (auto v = get("interactions")) c.interactions_path = *v;
  if (auto v = get("features")) c.features_path = *v;
  if (auto v = get("delimiter")) {
    if (*v == "tab" || *v == "\\t") c.delimiter = '\t';
    else if (v->size() == 1) c.delimiter = (*v)[0];
    else throw ConfigError("delimiter must be a single character or 'tab'");
  }
  if (auto v = get("core")) c.core = to_size(*v, "core");
  if (auto v = get("train_frac")) c.split.train_frac = parse_double(*v, "train_frac");
  if (auto v = get("valid_frac")) c.split.valid_frac = parse_double(*v, "valid_frac");
  if (auto v = get("max_length")) c.split.max_length = to_size(*v, "max_length");
  if (auto v = get("split_seed")) c.split.seed = to_size(*v, "split_seed");
  if (auto v = get("item_dim")) c.item_dim = to_size(*v, "item_dim");
  if (auto v = get("user_dim")) c.user_dim = to_size(*v, "user_dim");
  if (auto v = get("steps")) {
    c.steps = parse_list<int>(*v, [](const std::string& s) {
      return static_cast<int>(parse_int(s, "steps"));
    });
  }
  if (auto v = get("embed_norm")) c.embed_norm = parse_double(*v, "embed_norm");
  if (auto v = get("loss")) {
    if (*v == "bce") c.loss = LossKind::kBinaryCrossEntropy;
    else if (*v == "ce") c.loss = LossKind::kCategorical;
    else throw ConfigError("loss must be 'bce' or 'ce'");
  }
  auto reals = [](const std::string& s) { return parse_double(s, "budget"); };
  if (auto v = get("epsilon1")) c.epsilon1 = parse_list<double>(*v, reals);
  if (auto v = get("epsilon2")) c.epsilon2 = parse_list<double>(*v, reals);
  if (auto v = get("delta")) c.delta = parse_double(*v, "delta");
  if (auto v = get("methods")) c.methods = parse_list<Method>(*v, parse_method);
  if (auto v = get("seeds")) {
    c.seeds = parse_list<std::uint64_t>(*v, [&](const std::string& s) {
      return static_cast<std::uint64_t>(to_size(s, "seed"));
    });
  }
  if (auto v = get("epochs")) c.train.epochs = static_cast<int>(parse_int(*v, "epochs"));
  if (auto v = get("learning_rate")) c.train.learning_rate = parse_double(*v, "learning_rate");
  if (auto v = get("batch_size")) c.train.batch_size = to_size(*v, "batch_size");
  if (auto v = get("ks")) {
    c.train.ks = parse_list<int>(*v, [](const std::string& s) {
      return static_cast<int>(parse_int(s, "ks"));
    });
  }
  if (auto v = get("exclude_seen")) c.train.exclude_seen = *v == "true" || *v == "1";
  if (auto v = get("threads")) c.threads = std::max<std::size_t>(1, to_size(*v, "threads"));
  if (kv.has_section("features")) c.schema = schema_from_config(kv.section("features"));
  return c;
}

/// Raw inputs of an experiment.
struct Dataset {
  InteractionLog log;
  FeatureSchema schema;
  RawFeatureTable features;
};

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset d;
  d.log = read_interactions(cfg.interactions_path, cfg.delimiter);
  d.schema = cfg.schema;
  if (!cfg.features_path.empty()) {
    d.features = read_feature_file(cfg.features_path, d.schema, cfg.delimiter);
  }
  return d;
}

// Synthetic planted-Markov data: users belong to latent groups, each group
// walks its own sparse random transition matrix over the items, and the
// user features carry a noisy signal of the group.

struct SyntheticOptions {
  std::size_t num_users = 200;
  std::size_t num_items = 50;
  // With groups * successors above 20, the last item alone does not
  // determine the top-20 candidates, so Recall@20 depends on history.
  std::size_t num_groups = 8;
  std::size_t successors = 4;  // nonzero transitions per item and group
  std::size_t min_length = 30;
  std::size_t max_length = 50;
  // Probability that each group-linked feature (age band, occupation)
  // reflects the user's group; otherwise it is drawn uniformly.
  double feature_signal = 0.7;
};

inline Dataset generate_planted_markov(const SyntheticOptions& opt, std::uint64_t seed) {
  if (opt.num_items < 2 || opt.successors == 0 || opt.successors > opt.num_items ||
      opt.num_groups == 0 || opt.min_length < 2 || opt.max_length < opt.min_length ||
      !(opt.feature_signal >= 0.0 && opt.feature_signal <= 1.0)) {
    throw ConfigError("invalid synthetic dataset options");
  }
  RandomStream rng(seed);
  RandomStream trans_rng = rng.derive("transitions");
  // succ[g][i] lists (next item, cumulative probability).
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> succ(opt.num_groups);
  for (auto& group : succ) {
    group.resize(opt.num_items);
    for (std::size_t i = 0; i < opt.num_items; ++i) {
      std::vector<std::size_t> pool(opt.num_items);
      for (std::size_t j = 0; j < pool.size(); ++j) pool[j] = j;
      double total = 0.0;
      std::vector<std::pair<std::size_t, double>> row;
      for (std::size_t k = 0; k < opt.successors; ++k) {
        std::swap(pool[k], pool[k + trans_rng.index(pool.size() - k)]);
        const double w = std::pow(0.6, static_cast<double>(k));
        total += w;
        row.emplace_back(pool[k], total);
      }
      for (auto& [item, cum] : row) cum /= total;
      group[i] = std::move(row);
    }
  }

  Dataset d;
  d.schema = FeatureSchema({
      {"age", FeatureKind::kNumerical, 1, {}, false, 0.0, 0.0},
      {"gender", FeatureKind::kCategorical, 2, {"F", "M"}, false, 0.0, 0.0},
      {"occupation", FeatureKind::kCategorical, opt.num_groups + 1, {}, false, 0.0, 0.0},
  });
  {
    std::vector<std::string> occ;
    for (std::size_t g = 0; g <= opt.num_groups; ++g) occ.push_back("occ" + std::to_string(g));
    d.schema.mutable_entry(2).categories = occ;
  }

  RandomStream user_rng = rng.derive("users");
  for (std::size_t u = 0; u < opt.num_users; ++u) {
    const std::string uid = "u" + std::to_string(u);
    const std::size_t group = user_rng.index(opt.num_groups);
    const std::size_t len =
        opt.min_length + user_rng.index(opt.max_length - opt.min_length + 1);
    std::size_t item = user_rng.index(opt.num_items);
    for (std::size_t s = 0; s < len; ++s) {
      d.log.records.push_back({uid, "i" + std::to_string(item),
                               static_cast<std::int64_t>(1'000'000'000 + 3600 * s + u)});
      const double r = user_rng.uniform();
      const auto& row = succ[group][item];
      item = row.back().first;
      for (const auto& [next, cum] : row) {
        if (r < cum) {
          item = next;
          break;
        }
      }
    }
    const std::size_t age_band =
        user_rng.bernoulli(opt.feature_signal) ? group : user_rng.index(opt.num_groups);
    const double age = 20.0 + 10.0 * static_cast<double>(age_band) + user_rng.normal(0.0, 4.0);
    const std::string gender = user_rng.bernoulli(0.5) ? "F" : "M";
    const std::size_t occ = user_rng.bernoulli(opt.feature_signal)
                                ? group
                                : user_rng.index(opt.num_groups + 1);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", age);
    d.features[uid] = {buf, gender, "occ" + std::to_string(occ)};
  }
  return d;
}

inline void write_feature_file(std::ostream& out, const Dataset& d, char delim = ',') {
  out << "user_id";
  for (const auto& e : d.schema.entries()) out << delim << e.name;
  out << '\n';
  for (const auto& [user, cols] : d.features) {
    out << user;
    for (const auto& c : cols) out << delim << c;
    out << '\n';
  }
}

struct ReportRow {
  std::string method;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double delta = 0.0;
  int steps_T = 1;
  double embed_norm_C = 0.0;
  double sigma = 0.0;
  std::string seed;  // numeric seed, or "mean" / "std"
  int epochs = 0;
  std::string split;
  std::string metric;  // "recall" or "mrr"
  int k = 0;
  double value = 0.0;  // percent
};

/// One trained (method, eps1, eps2, T, seed) combination.
struct CellResult {
  Method method = Method::kDipsgnn;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  int steps_T = 1;
  std::uint64_t seed = 0;
  PrivacySpec privacy;         // sigma = aggregation noise actually used
  double edge_sigma = 0.0;     // adjacency noise (EdgeRand only)
  std::size_t noisy_forward_passes = 0;
  std::map<std::string, std::map<int, double>> recall;  // split -> K -> percent
  std::map<std::string, std::map<int, double>> mrr;
  std::vector<EpochRecord> log;
};

struct EvalReport {
  std::vector<CellResult> cells;
  std::vector<ReportRow> rows;
  double delta = 0.0;
  std::size_t num_edges = 0;
  std::string config_hash;

  /// Mean over seeds of a metric for the matching cells.
  double mean(Method m, double eps1, double eps2, int steps, const std::string& split,
              const std::string& metric, int k) const {
    double total = 0.0;
    int n = 0;
    for (const auto& c : cells) {
      if (c.method != m || c.epsilon1 != eps1 || c.epsilon2 != eps2 || c.steps_T != steps) continue;
      const auto& tbl = metric == "recall" ? c.recall : c.mrr;
      total += tbl.at(split).at(k);
      ++n;
    }
    if (n == 0) throw ConfigError("no report cells match the query");
    return total / n;
  }
};

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Prepared, method-independent state shared by all cells.
struct PreparedData {
  SplitDataset split;
  FeatureSchema schema;  // with fitted normalization ranges
  std::vector<FeatureVector> encoded;  // per user index; empty values if no schema
  std::vector<Sample> train, valid, test;
  std::size_t num_edges = 0;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg, const Dataset& data) {
  PreparedData p;
  const InteractionLog filtered = ten_core_filter(data.log, cfg.core);
  if (filtered.records.empty()) throw ConfigError("dataset is empty after core filtering");
  p.num_edges = count_transitions(filtered);
  p.split = chronological_split(filtered, cfg.split);
  p.schema = data.schema;
  if (!p.schema.empty()) {
    std::vector<std::string> training_users;
    std::set<std::size_t> seen;
    for (const auto& s : p.split.train) {
      if (seen.insert(s.user).second) training_users.push_back(p.split.users.id_of(s.user));
    }
    fit_normalization(p.schema, data.features, training_users);
  }
  p.encoded.resize(p.split.users.size());
  for (std::size_t u = 0; u < p.split.users.size(); ++u) {
    p.encoded[u].schema = &p.schema;
    if (p.schema.empty()) continue;
    auto it = data.features.find(p.split.users.id_of(u));
    if (it == data.features.end()) {
      throw MalformedInputError("no features for user '" + p.split.users.id_of(u) + "'");
    }
    p.encoded[u] = encode_features(p.schema, it->second);
  }
  p.train = prepare_samples(p.split.train);
  p.valid = prepare_samples(p.split.valid);
  p.test = prepare_samples(p.split.test);
  return p;
}

namespace internal {

inline UserFeatures perturbed_features(const PreparedData& p, double epsilon1, bool perturb,
                                       RandomStream rng) {
  UserFeatures f(p.encoded.size());
  for (std::size_t u = 0; u < p.encoded.size(); ++u) {
    if (p.schema.empty()) continue;
    if (perturb && std::isfinite(epsilon1)) {
      RandomStream ur = rng.derive("user", u);
      // Rebind to this object's schema; the stored pointer may predate a move.
      const FeatureVector x{&p.schema, p.encoded[u].values};
      f[u] = perturb_features(x, epsilon1, ur).values;
    } else {
      f[u] = p.encoded[u].values;
    }
  }
  return f;
}

inline std::vector<Sample> perturbed_graphs(const std::vector<Sample>& in, double sigma,
                                            RandomStream rng) {
  std::vector<Sample> out;
  out.reserve(in.size());
  for (const auto& s : in) out.push_back({edgerand_perturb(s.graph, sigma, rng), s.user, s.label});
  return out;
}

}  // namespace internal

/// Everything one cell trains and evaluates on: perturbed user features,
/// the (possibly EdgeRand-perturbed) sample sets and the model shape.
struct CellInputs {
  Method method = Method::kDipsgnn;
  PrivacySpec privacy;  // sigma = aggregation noise actually used
  double edge_sigma = 0.0;
  ModelConfig model;
  UserFeatures features;
  const std::vector<Sample>* train = nullptr;
  const std::vector<Sample>* valid = nullptr;
  const std::vector<Sample>* test = nullptr;
  // Backing storage for perturbed graphs; shared so moves keep the pointers valid.
  std::shared_ptr<std::array<std::vector<Sample>, 3>> owned;
};

inline CellInputs prepare_cell(const ExperimentConfig& cfg, const PreparedData& data,
                               Method method, double eps1, double eps2, int steps,
                               std::uint64_t seed, double delta) {
  CellInputs in;
  in.method = method;
  in.privacy = {eps1, eps2, delta, steps, cfg.embed_norm, 0.0};
  if (method == Method::kDipsgnn) {
    in.privacy.sigma = calibrate_sigma(eps2, delta, steps, cfg.embed_norm);
  } else if (method == Method::kEdgeRand) {
    // One edge changes one adjacency entry by 1; the graph is released once.
    in.edge_sigma = calibrate_sigma(eps2, delta, 1, 1.0);
  }
  const RandomStream rng(seed);
  in.features = internal::perturbed_features(data, eps1, method != Method::kNonPrivate,
                                             rng.derive("features"));
  in.train = &data.train;
  in.valid = &data.valid;
  in.test = &data.test;
  if (method == Method::kEdgeRand && in.edge_sigma > 0.0) {
    in.owned = std::make_shared<std::array<std::vector<Sample>, 3>>();
    auto& [tr, va, te] = *in.owned;
    tr = internal::perturbed_graphs(data.train, in.edge_sigma, rng.derive("edgerand-train"));
    va = internal::perturbed_graphs(data.valid, in.edge_sigma, rng.derive("edgerand-valid"));
    te = internal::perturbed_graphs(data.test, in.edge_sigma, rng.derive("edgerand-test"));
    in.train = &tr;
    in.valid = &va;
    in.test = &te;
  }
  in.model.num_items = data.split.items.size();
  in.model.feature_width = data.schema.encoded_width();
  in.model.item_dim = cfg.item_dim;
  in.model.user_dim = cfg.user_dim;
  in.model.steps = steps;
  in.model.embed_norm = cfg.embed_norm;
  in.model.loss = cfg.loss;
  return in;
}

/// Evaluates trained parameters on the validation and test sets of a cell
/// and stores the metrics in `r`.
inline void evaluate_cell(const ExperimentConfig& cfg, const CellInputs& in,
                          const ModelParams& params, std::uint64_t seed, CellResult& r) {
  const RandomStream rng(seed);
  for (const auto& [name, set] :
       {std::pair<std::string, const std::vector<Sample>*>{"valid", in.valid}, {"test", in.test}}) {
    const EvalResult ev = evaluate(params, in.model, *set, in.features, in.privacy.sigma,
                                   rng.derive("eval-noise-" + name), cfg.train.ks,
                                   cfg.train.exclude_seen);
    r.noisy_forward_passes += ev.noisy_passes;
    r.recall[name] = ev.metrics.recall_map();
    r.mrr[name] = ev.metrics.mrr_map();
  }
}

inline CellResult cell_header(const CellInputs& in, std::uint64_t seed) {
  CellResult r;
  r.method = in.method;
  r.epsilon1 = in.privacy.epsilon1;
  r.epsilon2 = in.privacy.epsilon2;
  r.steps_T = in.privacy.steps_T;
  r.seed = seed;
  r.privacy = in.privacy;
  r.edge_sigma = in.edge_sigma;
  return r;
}

/// Trains and evaluates one cell. With `params_out`, the trained
/// parameters are also returned.
inline CellResult run_cell(const ExperimentConfig& cfg, const PreparedData& data, Method method,
                           double eps1, double eps2, int steps, std::uint64_t seed, double delta,
                           ModelParams* params_out = nullptr) {
  const CellInputs in = prepare_cell(cfg, data, method, eps1, eps2, steps, seed, delta);
  CellResult r = cell_header(in, seed);
  TrainResult tr = train(in.model, cfg.train, *in.train, *in.valid, in.features,
                         in.privacy.sigma, RandomStream(seed).derive("train"));
  r.log = std::move(tr.log);
  r.noisy_forward_passes = tr.noisy_forward_passes;
  evaluate_cell(cfg, in, tr.params, seed, r);
  if (params_out != nullptr) *params_out = std::move(tr.params);
  return r;
}

namespace internal {

inline void append_rows(const ExperimentConfig& cfg, const CellResult& c, const std::string& seed,
                        const std::map<std::string, std::map<int, double>>& recall,
                        const std::map<std::string, std::map<int, double>>& mrr,
                        std::vector<ReportRow>& rows) {
  for (const auto& [metric, tbl] : {std::pair{std::string("recall"), &recall},
                                    std::pair{std::string("mrr"), &mrr}}) {
    for (const auto& [split_name, by_k] : *tbl) {
      for (const auto& [k, v] : by_k) {
        rows.push_back({method_name(c.method), c.epsilon1, c.epsilon2, c.privacy.delta, c.steps_T,
                        c.privacy.embed_norm_C,
                        c.method == Method::kEdgeRand ? c.edge_sigma : c.privacy.sigma, seed,
                        cfg.train.epochs, split_name, metric, k, v});
      }
    }
  }
}

}  // namespace internal

inline std::string config_hash(const ExperimentConfig& cfg) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.canonical())));
  return hash;
}

/// Fills report.rows from report.cells: per-seed rows, then mean and
/// standard deviation rows for each run of cfg.seeds.size() consecutive
/// cells.
inline void assemble_rows(const ExperimentConfig& cfg, EvalReport& report) {
  report.rows.clear();
  for (const auto& c : report.cells) {
    internal::append_rows(cfg, c, std::to_string(c.seed), c.recall, c.mrr, report.rows);
  }
  // Aggregate groups of cells that differ only by seed; seeds are innermost.
  const std::size_t ns = cfg.seeds.size();
  if (ns == 0 || report.cells.size() % ns != 0) {
    throw ConfigError("report cells do not form whole seed groups");
  }
  for (std::size_t g = 0; g < report.cells.size(); g += ns) {
    std::map<std::string, std::map<int, double>> mean_r, mean_m, std_r, std_m;
    auto aggregate = [&](bool recall, auto& mean_out, auto& std_out) {
      const auto& first = recall ? report.cells[g].recall : report.cells[g].mrr;
      for (const auto& [split_name, by_k] : first) {
        for (const auto& [k, unused] : by_k) {
          double sum = 0.0, sq = 0.0;
          for (std::size_t s = 0; s < ns; ++s) {
            const auto& c = report.cells[g + s];
            const double v = (recall ? c.recall : c.mrr).at(split_name).at(k);
            sum += v;
            sq += v * v;
          }
          const double mean = sum / static_cast<double>(ns);
          const double var =
              ns > 1 ? std::max(0.0, (sq - static_cast<double>(ns) * mean * mean) /
                                         static_cast<double>(ns - 1))
                     : 0.0;
          mean_out[split_name][k] = mean;
          std_out[split_name][k] = std::sqrt(var);
        }
      }
    };
    aggregate(true, mean_r, std_r);
    aggregate(false, mean_m, std_m);
    internal::append_rows(cfg, report.cells[g], "mean", mean_r, mean_m, report.rows);
    internal::append_rows(cfg, report.cells[g], "std", std_r, std_m, report.rows);
  }
}

/// Runs every (method, eps1, eps2, T, seed) cell and assembles the report:
/// per-seed rows, then mean and standard deviation rows per group.
inline EvalReport run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const PreparedData prepared = prepare_data(cfg, data);
  for (int k : cfg.train.ks) {
    if (static_cast<std::size_t>(k) > prepared.split.items.size()) {
      throw ConfigError("K = " + std::to_string(k) + " exceeds the number of items");
    }
  }
  EvalReport report;
  report.num_edges = prepared.num_edges;
  report.delta = cfg.delta > 0.0 ? cfg.delta : delta_default(prepared.num_edges);
  report.config_hash = config_hash(cfg);

  struct Job {
    Method method;
    double eps1, eps2;
    int steps;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Method m : cfg.methods) {
    for (double e1 : cfg.epsilon1) {
      for (double e2 : cfg.epsilon2) {
        for (int t : cfg.steps) {
          for (auto s : cfg.seeds) jobs.push_back({m, e1, e2, t, s});
        }
      }
    }
  }
  report.cells.resize(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      try {
        report.cells[i] = run_cell(cfg, prepared, j.method, j.eps1, j.eps2, j.steps, j.seed,
                                   report.delta);
      } catch (const std::exception& e) {
        errors[i] = method_name(j.method) + " seed " + std::to_string(j.seed) + ": " + e.what();
      }
    }
  };
  const std::size_t nthreads = std::min(cfg.threads, jobs.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("experiment cell failed: " + e);
  }

  assemble_rows(cfg, report);
  return report;
}

inline EvalReport run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, load_dataset(cfg));
}

inline void write_report(std::ostream& out, const EvalReport& report) {
  out << "method,epsilon1,epsilon2,delta,steps_T,embed_norm_C,sigma,seed,epochs,split,metric,k,"
         "value\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << format_number(r.epsilon1) << ',' << format_number(r.epsilon2) << ','
        << format_number(r.delta) << ',' << r.steps_T << ',' << format_number(r.embed_norm_C)
        << ',' << format_number(r.sigma) << ',' << r.seed << ',' << r.epochs << ',' << r.split
        << ',' << r.metric << ',' << r.k << ',' << format_number(r.value) << '\n';
  }
}

/// Provenance record written next to the report.
inline nlohmann::json provenance(const ExperimentConfig& cfg, const EvalReport& report) {
  nlohmann::json j;
  j["config_hash"] = report.config_hash;
  j["config"] = cfg.canonical();
  j["delta"] = report.delta;
  j["num_edges"] = report.num_edges;
  auto cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"method", method_name(c.method)},
                     {"epsilon1", format_number(c.epsilon1)},
                     {"epsilon2", format_number(c.epsilon2)},
                     {"steps_T", c.steps_T},
                     {"embed_norm_C", c.privacy.embed_norm_C},
                     {"seed", c.seed},
                     {"sigma", c.privacy.sigma},
                     {"edge_sigma", c.edge_sigma},
                     {"noisy_forward_passes", c.noisy_forward_passes}});
  }
  j["cells"] = cells;
  return j;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_EXPERIMENT_HPP_
