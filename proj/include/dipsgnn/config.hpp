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

// Minimal key-value configuration format:
//
//   # comment
//   key = value
//   [section]
//   key = value
//
// Keys before the first section header live in the unnamed section "".
// Entry order is preserved within a section.

#ifndef DIPSGNN_CONFIG_HPP_
#define DIPSGNN_CONFIG_HPP_

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dipsgnn/common.hpp"

namespace dipsgnn {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

/// Parses a real number; accepts "inf"/"infinity" (any case).
inline double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::string lower;
  for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "inf" || lower == "infinity" || lower == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ConfigError("cannot parse '" + text + "' as a number for " + what);
  }
  return v;
}

inline long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ConfigError("cannot parse '" + text + "' as an integer for " + what);
  }
  return v;
}

class KeyValueConfig {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::string section;
    cfg.sections_.emplace_back("", Section{});
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']') {
          throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
        }
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        cfg.section_ref(section);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
      }
      std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) {
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      }
      cfg.section_ref(section).emplace_back(std::move(key),
                                            trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    return parse(in);
  }

  std::optional<std::string> get(const std::string& key, const std::string& section = "") const {
    for (const auto& [name, entries] : sections_) {
      if (name != section) continue;
      for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->first == key) return it->second;
      }
    }
    return std::nullopt;
  }

  const Section& section(const std::string& name) const {
    static const Section kEmpty;
    for (const auto& [n, entries] : sections_) {
      if (n == name) return entries;
    }
    return kEmpty;
  }

  /// Adds an entry that takes precedence over earlier ones with the same key.
  void set(const std::string& key, const std::string& value, const std::string& section = "") {
    section_ref(section).emplace_back(key, value);
  }

  bool has_section(const std::string& name) const {
    for (const auto& s : sections_) {
      if (s.first == name) return true;
    }
    return false;
  }

 private:
  Section& section_ref(const std::string& name) {
    for (auto& [n, entries] : sections_) {
      if (n == name) return entries;
    }
    sections_.emplace_back(name, Section{});
    return sections_.back().second;
  }

  std::vector<std::pair<std::string, Section>> sections_;
};

}  // namespace dipsgnn

#endif  // DIPSGNN_CONFIG_HPP_
