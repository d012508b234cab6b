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

// Feature schema parsing, user feature files and min-max encoding.
//
// Schema section (config):
//   [features]
//   age = numerical            # range fitted on training users
//   income = numerical 0 1e6   # explicit range
//   gender = categorical F M
//
// Feature file: delimited text with a one-line header, then
//   user_id<delim>raw_1<delim>...<delim>raw_n
// with columns in schema order.

#ifndef DIPSGNN_FEATURE_IO_HPP_
#define DIPSGNN_FEATURE_IO_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "dipsgnn/common.hpp"
#include "dipsgnn/config.hpp"
#include "dipsgnn/ldp_feature.hpp"

namespace dipsgnn {

inline FeatureSchema schema_from_config(const KeyValueConfig::Section& section) {
  std::vector<FeatureEntry> entries;
  for (const auto& [name, spec] : section) {
    const auto tok = split_whitespace(spec);
    if (tok.empty()) throw ConfigError("feature '" + name + "' has no kind");
    FeatureEntry e;
    e.name = name;
    if (tok[0] == "numerical") {
      e.kind = FeatureKind::kNumerical;
      e.cardinality = 1;
      if (tok.size() == 3) {
        e.has_range = true;
        e.min_value = parse_double(tok[1], name + " min");
        e.max_value = parse_double(tok[2], name + " max");
        if (!(e.max_value > e.min_value)) {
          throw ConfigError("feature '" + name + "' has an empty range");
        }
      } else if (tok.size() != 1) {
        throw ConfigError("numerical feature '" + name + "' expects 'numerical [min max]'");
      }
    } else if (tok[0] == "categorical") {
      e.kind = FeatureKind::kCategorical;
      e.categories.assign(tok.begin() + 1, tok.end());
      e.cardinality = e.categories.size();
    } else {
      throw ConfigError("feature '" + name + "' has unknown kind '" + tok[0] + "'");
    }
    entries.push_back(std::move(e));
  }
  return FeatureSchema(std::move(entries));
}

inline void write_schema(std::ostream& out, const FeatureSchema& schema) {
  out << "[features]\n";
  for (const auto& e : schema.entries()) {
    out << e.name << " = ";
    if (e.kind == FeatureKind::kNumerical) {
      out << "numerical";
      if (e.has_range) out << ' ' << e.min_value << ' ' << e.max_value;
    } else {
      out << "categorical";
      for (const auto& c : e.categories) out << ' ' << c;
    }
    out << '\n';
  }
}

/// Raw feature columns keyed by user id.
using RawFeatureTable = std::map<std::string, std::vector<std::string>>;

inline RawFeatureTable read_feature_file(const std::string& path, const FeatureSchema& schema,
                                         char delim = ',') {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file " + path);
  RawFeatureTable table;
  std::string line;
  std::getline(in, line);  // header
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, delim);
    if (cols.size() != schema.num_features() + 1) {
      throw MalformedInputError(path + ":" + std::to_string(lineno) + ": expected " +
                                std::to_string(schema.num_features() + 1) + " columns");
    }
    for (auto& c : cols) c = trim(c);
    std::string user = cols.front();
    cols.erase(cols.begin());
    table[user] = std::move(cols);
  }
  return table;
}

/// Fills missing numerical ranges from the given (training) users only.
inline void fit_normalization(FeatureSchema& schema, const RawFeatureTable& table,
                              const std::vector<std::string>& training_users) {
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    FeatureEntry& e = schema.mutable_entry(i);
    if (e.kind != FeatureKind::kNumerical || e.has_range) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& u : training_users) {
      auto it = table.find(u);
      if (it == table.end()) continue;
      const double v = parse_double(it->second[i], e.name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
      throw ConfigError("no training values to normalize feature '" + e.name + "'");
    }
    e.has_range = true;
    e.min_value = lo;
    // A constant column maps to -1; widen so the division is defined.
    e.max_value = hi > lo ? hi : lo + 1.0;
  }
}

/// Min-max normalizes numerical columns into [-1, 1] (clamped) and one-hot
/// encodes categorical ones.
inline FeatureVector encode_features(const FeatureSchema& schema,
                                     const std::vector<std::string>& raw) {
  if (raw.size() != schema.num_features()) {
    throw MalformedInputError("raw feature row has wrong column count");
  }
  FeatureVector x;
  x.schema = &schema;
  x.values.assign(schema.encoded_width(), 0.0);
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const auto& e = schema.entry(i);
    const std::size_t off = schema.offset(i);
    if (e.kind == FeatureKind::kNumerical) {
      if (!e.has_range) throw ConfigError("feature '" + e.name + "' has no normalization range");
      const double v = parse_double(raw[i], e.name);
      const double z = 2.0 * (v - e.min_value) / (e.max_value - e.min_value) - 1.0;
      x.values[off] = std::clamp(z, -1.0, 1.0);
    } else {
      auto it = std::find(e.categories.begin(), e.categories.end(), raw[i]);
      if (it == e.categories.end()) {
        throw MalformedInputError("unknown category '" + raw[i] + "' for feature '" + e.name +
                                  "'");
      }
      x.values[off + static_cast<std::size_t>(it - e.categories.begin())] = 1.0;
    }
  }
  return x;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_FEATURE_IO_HPP_
