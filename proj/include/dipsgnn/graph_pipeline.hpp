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

// Interaction ingestion, k-core filtering, chronological splitting into
// (prefix, next item) samples and conversion of a prefix into its directed
// weighted behavior graph.

#ifndef DIPSGNN_GRAPH_PIPELINE_HPP_
#define DIPSGNN_GRAPH_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsgnn/common.hpp"
#include "dipsgnn/config.hpp"

namespace dipsgnn {

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

struct InteractionLog {
  std::vector<Interaction> records;
};

/// Reads `user_id, item_id, timestamp` rows after a one-line header.
inline InteractionLog read_interactions(std::istream& in, char delim = ',') {
  InteractionLog log;
  std::string line;
  std::getline(in, line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(line, delim);
    if (cols.size() != 3) {
      throw MalformedInputError("interaction line " + std::to_string(lineno) +
                                ": expected 3 columns");
    }
    log.records.push_back({trim(cols[0]), trim(cols[1]), parse_int(cols[2], "timestamp")});
  }
  return log;
}

inline InteractionLog read_interactions(const std::string& path, char delim = ',') {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interaction file " + path);
  return read_interactions(in, delim);
}

inline void write_interactions(std::ostream& out, const InteractionLog& log, char delim = ',') {
  out << "user_id" << delim << "item_id" << delim << "timestamp\n";
  for (const auto& r : log.records) {
    out << r.user_id << delim << r.item_id << delim << r.timestamp << '\n';
  }
}

/// Iteratively drops users and items with fewer than `min_count`
/// interactions until every survivor meets the threshold. Surviving records
/// keep their input order. An empty result is reported on stderr.
inline InteractionLog ten_core_filter(const InteractionLog& log, std::size_t min_count = 10) {
  std::unordered_map<std::string, std::size_t> user_idx, item_idx;
  std::vector<std::size_t> ru(log.records.size()), ri(log.records.size());
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    ru[k] = user_idx.try_emplace(log.records[k].user_id, user_idx.size()).first->second;
    ri[k] = item_idx.try_emplace(log.records[k].item_id, item_idx.size()).first->second;
  }
  std::vector<std::size_t> user_count(user_idx.size(), 0), item_count(item_idx.size(), 0);
  std::vector<std::vector<std::size_t>> by_user(user_idx.size()), by_item(item_idx.size());
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    ++user_count[ru[k]];
    ++item_count[ri[k]];
    by_user[ru[k]].push_back(k);
    by_item[ri[k]].push_back(k);
  }

  // Peel below-threshold vertices of the user-item bipartite multigraph.
  std::vector<char> alive(log.records.size(), 1), user_dead(user_count.size(), 0),
      item_dead(item_count.size(), 0);
  std::vector<std::pair<bool, std::size_t>> queue;  // (is_user, index)
  for (std::size_t u = 0; u < user_count.size(); ++u) {
    if (user_count[u] < min_count) {
      user_dead[u] = 1;
      queue.emplace_back(true, u);
    }
  }
  for (std::size_t i = 0; i < item_count.size(); ++i) {
    if (item_count[i] < min_count) {
      item_dead[i] = 1;
      queue.emplace_back(false, i);
    }
  }
  while (!queue.empty()) {
    const auto [is_user, v] = queue.back();
    queue.pop_back();
    for (std::size_t k : is_user ? by_user[v] : by_item[v]) {
      if (!alive[k]) continue;
      alive[k] = 0;
      if (is_user) {
        const std::size_t i = ri[k];
        if (--item_count[i] < min_count && !item_dead[i]) {
          item_dead[i] = 1;
          queue.emplace_back(false, i);
        }
      } else {
        const std::size_t u = ru[k];
        if (--user_count[u] < min_count && !user_dead[u]) {
          user_dead[u] = 1;
          queue.emplace_back(true, u);
        }
      }
    }
  }

  InteractionLog out;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    if (alive[k]) out.records.push_back(log.records[k]);
  }
  if (out.records.empty() && !log.records.empty()) {
    std::cerr << "warning: " << min_count << "-core filter left an empty dataset\n";
  }
  return out;
}

/// Per-user chronological sequences. Users appear in order of first
/// appearance; timestamp ties keep input order.
inline std::vector<std::pair<std::string, std::vector<std::string>>> user_sequences(
    const InteractionLog& log) {
  std::unordered_map<std::string, std::size_t> idx;
  std::vector<std::pair<std::string, std::vector<const Interaction*>>> groups;
  for (const auto& r : log.records) {
    auto [it, inserted] = idx.try_emplace(r.user_id, groups.size());
    if (inserted) groups.emplace_back(r.user_id, std::vector<const Interaction*>{});
    groups[it->second].second.push_back(&r);
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  out.reserve(groups.size());
  for (auto& [user, recs] : groups) {
    std::stable_sort(recs.begin(), recs.end(), [](const Interaction* a, const Interaction* b) {
      return a->timestamp < b->timestamp;
    });
    std::vector<std::string> items;
    items.reserve(recs.size());
    for (const auto* r : recs) items.push_back(r->item_id);
    out.emplace_back(user, std::move(items));
  }
  return out;
}

/// Number of consecutive-interaction transitions over all users.
inline std::size_t count_transitions(const InteractionLog& log) {
  std::size_t n = 0;
  for (const auto& [user, seq] : user_sequences(log)) {
    if (!seq.empty()) n += seq.size() - 1;
  }
  return n;
}

/// Bidirectional id <-> dense index map.
class Vocabulary {
 public:
  std::size_t add(const std::string& id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw VocabularyError("unknown id '" + id + "'");
    return it->second;
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const std::string& id_of(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> ids_;
};

/// One labeled sample: a user's chronological prefix and the item that
/// followed it. Items and user are vocabulary indices.
struct LabeledSequence {
  std::size_t user = 0;
  std::vector<std::size_t> items;
  std::size_t label = 0;

  bool operator==(const LabeledSequence&) const = default;
};

struct SplitOptions {
  double train_frac = 0.8;
  double valid_frac = 0.1;
  std::size_t max_length = 50;
  std::uint64_t seed = 0;
};

struct SplitDataset {
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> valid;
  std::vector<LabeledSequence> test;
  Vocabulary items;
  Vocabulary users;
};

/// Splits each user's sequence chronologically: the first
/// ceil(train_frac * n_u) interactions form the training pool, the rest the
/// test pool. Every position j >= 1 yields the sample (prefix S[0..j), S[j]),
/// assigned to train or test by the pool of S[j]; prefixes keep at most
/// `max_length` most recent items. A seeded random `valid_frac` of the
/// training samples is held out as the validation set.
///
/// Item indices follow first appearance in the training pools, then in the
/// test pools.
inline SplitDataset chronological_split(const InteractionLog& log, const SplitOptions& opt) {
  if (!(opt.train_frac > 0.0 && opt.train_frac < 1.0)) {
    throw ConfigError("train_frac must lie in (0, 1)");
  }
  if (!(opt.valid_frac >= 0.0 && opt.valid_frac < 1.0)) {
    throw ConfigError("valid_frac must lie in [0, 1)");
  }
  if (opt.max_length == 0) throw ConfigError("max_length must be positive");

  const auto seqs = user_sequences(log);
  SplitDataset ds;
  std::vector<std::size_t> cut(seqs.size());
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    ds.users.add(seqs[u].first);
    const auto n = static_cast<double>(seqs[u].second.size());
    // Guard against 0.8 * 5 landing a hair above 4.
    cut[u] = static_cast<std::size_t>(std::ceil(opt.train_frac * n - 1e-9));
    for (std::size_t j = 0; j < cut[u]; ++j) ds.items.add(seqs[u].second[j]);
  }
  for (const auto& [user, seq] : seqs) {
    for (const auto& item : seq) ds.items.add(item);
  }

  for (std::size_t u = 0; u < seqs.size(); ++u) {
    const auto& seq = seqs[u].second;
    std::vector<std::size_t> idx(seq.size());
    for (std::size_t j = 0; j < seq.size(); ++j) idx[j] = ds.items.index_of(seq[j]);
    for (std::size_t j = 1; j < seq.size(); ++j) {
      const std::size_t begin = j > opt.max_length ? j - opt.max_length : 0;
      LabeledSequence s{u, std::vector<std::size_t>(idx.begin() + static_cast<long>(begin),
                                                    idx.begin() + static_cast<long>(j)),
                        idx[j]};
      (j < cut[u] ? ds.train : ds.test).push_back(std::move(s));
    }
  }

  const auto n_valid = static_cast<std::size_t>(
      std::llround(opt.valid_frac * static_cast<double>(ds.train.size())));
  if (n_valid > 0) {
    RandomStream rng = RandomStream(opt.seed).derive("validation");
    std::vector<std::size_t> order(ds.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < n_valid; ++i) {
      std::swap(order[i], order[i + rng.index(order.size() - i)]);
    }
    std::vector<char> held(ds.train.size(), 0);
    for (std::size_t i = 0; i < n_valid; ++i) held[order[i]] = 1;
    std::vector<LabeledSequence> kept;
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      (held[i] ? ds.valid : kept).push_back(std::move(ds.train[i]));
    }
    ds.train = std::move(kept);
  }
  return ds;
}

/// Directed weighted graph of one prefix over its own distinct items.
/// Weights are raw transition counts (no degree normalization); a_in is the
/// transpose of a_out. EdgeRand produces real-valued weights in the same
/// structure.
struct BehaviorGraph {
  // Global item index of each local node, in order of first appearance.
  std::vector<std::size_t> node_ids;
  // Local node index of each sequence position.
  std::vector<std::size_t> positions;
  Matrix a_out;
  Matrix a_in;

  std::size_t num_nodes() const { return node_ids.size(); }
};

inline BehaviorGraph build_graph(std::span<const std::size_t> sequence) {
  if (sequence.empty()) throw MalformedInputError("cannot build a graph from an empty sequence");
  BehaviorGraph g;
  std::unordered_map<std::size_t, std::size_t> local;
  g.positions.reserve(sequence.size());
  for (std::size_t item : sequence) {
    auto [it, inserted] = local.try_emplace(item, g.node_ids.size());
    if (inserted) g.node_ids.push_back(item);
    g.positions.push_back(it->second);
  }
  const auto n = static_cast<Eigen::Index>(g.node_ids.size());
  g.a_out = Matrix::Zero(n, n);
  for (std::size_t s = 1; s < g.positions.size(); ++s) {
    g.a_out(static_cast<Eigen::Index>(g.positions[s - 1]),
            static_cast<Eigen::Index>(g.positions[s])) += 1.0;
  }
  g.a_in = g.a_out.transpose();
  return g;
}

inline BehaviorGraph build_graph(const std::vector<std::string>& sequence,
                                 const Vocabulary& vocab) {
  std::vector<std::size_t> idx;
  idx.reserve(sequence.size());
  for (const auto& id : sequence) idx.push_back(vocab.index_of(id));
  return build_graph(idx);
}

// Split manifest persistence (JSON).

inline nlohmann::json samples_to_json(const std::vector<LabeledSequence>& samples) {
  auto arr = nlohmann::json::array();
  for (const auto& s : samples) {
    arr.push_back({{"user", s.user}, {"items", s.items}, {"label", s.label}});
  }
  return arr;
}

inline std::vector<LabeledSequence> samples_from_json(const nlohmann::json& arr) {
  std::vector<LabeledSequence> out;
  for (const auto& j : arr) {
    out.push_back({j.at("user").get<std::size_t>(), j.at("items").get<std::vector<std::size_t>>(),
                   j.at("label").get<std::size_t>()});
  }
  return out;
}

inline void save_split_manifest(const std::string& path, const SplitDataset& ds) {
  nlohmann::json j;
  j["format"] = "dipsgnn-split";
  j["version"] = 1;
  j["items"] = ds.items.ids();
  j["users"] = ds.users.ids();
  j["train"] = samples_to_json(ds.train);
  j["valid"] = samples_to_json(ds.valid);
  j["test"] = samples_to_json(ds.test);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest " + path);
  out << j.dump() << '\n';
}

inline SplitDataset load_split_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError("split manifest " + path + ": " + e.what());
  }
  if (j.value("format", "") != "dipsgnn-split") {
    throw MalformedInputError(path + " is not a split manifest");
  }
  SplitDataset ds;
  for (const auto& id : j.at("items")) ds.items.add(id.get<std::string>());
  for (const auto& id : j.at("users")) ds.users.add(id.get<std::string>());
  ds.train = samples_from_json(j.at("train"));
  ds.valid = samples_from_json(j.at("valid"));
  ds.test = samples_from_json(j.at("test"));
  for (const auto* part : {&ds.train, &ds.valid, &ds.test}) {
    for (const auto& s : *part) {
      if (s.label >= ds.items.size() || s.user >= ds.users.size()) {
        throw VocabularyError("split manifest references an index outside its vocabulary");
      }
      for (auto i : s.items) {
        if (i >= ds.items.size()) throw VocabularyError("split manifest item out of range");
      }
    }
  }
  return ds;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_GRAPH_PIPELINE_HPP_
