// Copyright (c) 2026 The emorec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Nested key-value configuration text:
//
//   seed = 0
//   [ser.train]
//   lr = 0.0001
//   batch = 2
//
// Keys may also be dotted (ser.train.lr = 0.0001). Values are JSON scalars or
// arrays; anything that does not parse as JSON is taken as a bare string.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/strings.hpp"
#include "json.hpp"

namespace emorec::pipeline {

namespace detail {

inline nlohmann::json parse_value(std::string_view raw) {
  const std::string s(trim(raw));
  if (s.empty()) return std::string();
  auto j = nlohmann::json::parse(s, nullptr, false);
  if (j.is_discarded() || j.is_object()) return s;
  return j;
}

inline bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

inline void set_path(nlohmann::json& root, const std::string& dotted, nlohmann::json value, const std::string& where) {
  const auto parts = split(dotted, '.');
  nlohmann::json* node = &root;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string k(trim(parts[i]));
    if (!valid_key(k)) throw UsageError(where + ": bad key '" + dotted + "'");
    if (i + 1 == parts.size()) {
      (*node)[k] = std::move(value);
      return;
    }
    auto& next = (*node)[k];
    if (next.is_null()) next = nlohmann::json::object();
    if (!next.is_object()) throw UsageError(where + ": '" + dotted + "' nests under a value");
    node = &next;
  }
}

inline std::string format_value(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    const bool bare = !s.empty() && trim(s) == s && s.find('#') == std::string::npos &&
                      parse_value(s).is_string();
    return bare ? s : v.dump();
  }
  return v.dump();
}

inline void emit(std::ostringstream& o, const nlohmann::json& node, const std::string& prefix) {
  bool header = false;
  for (const auto& [k, v] : node.items()) {
    if (v.is_object()) continue;
    if (!header && !prefix.empty()) {
      o << "\n[" << prefix << "]\n";
      header = true;
    }
    o << k << " = " << format_value(v) << "\n";
  }
  for (const auto& [k, v] : node.items())
    if (v.is_object()) emit(o, v, prefix.empty() ? k : prefix + "." + k);
}


// Drops a trailing "# ..." comment that follows whitespace outside quotes.
inline std::string_view strip_comment(std::string_view l) {
  bool quoted = false;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == '"' && (i == 0 || l[i - 1] != '\\')) quoted = !quoted;
    if (!quoted && l[i] == '#' && i > 0 && (l[i - 1] == ' ' || l[i - 1] == '\t')) return trim(l.substr(0, i));
  }
  return l;
}

}  // namespace detail

inline nlohmann::json parse_kv_config(std::string_view text, const std::string& source = "config") {
  nlohmann::json root = nlohmann::json::object();
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string_view l = trim(line);
    if (l.empty() || l[0] == '#' || l[0] == ';') continue;
    if (l.front() == '[') {
      if (l.back() != ']') throw UsageError(where + ": unterminated section header");
      section = std::string(trim(l.substr(1, l.size() - 2)));
      for (const auto& p : split(section, '.'))
        if (!detail::valid_key(trim(p))) throw UsageError(where + ": bad section '" + section + "'");
      continue;
    }
    l = detail::strip_comment(l);
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw UsageError(where + ": expected key = value");
    const std::string key(trim(l.substr(0, eq)));
    detail::set_path(root, section.empty() ? key : section + "." + key, detail::parse_value(l.substr(eq + 1)), where);
  }
  return root;
}

inline nlohmann::json read_kv_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kv_config(ss.str(), path.string());
}

inline std::string format_kv_config(const nlohmann::json& root) {
  std::ostringstream o;
  detail::emit(o, root, "");
  std::string s = o.str();
  if (!s.empty() && s[0] == '\n') s.erase(0, 1);
  return s;
}

// Applies "a.b.c=value" overrides in order.
inline void apply_overrides(nlohmann::json& root, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + o + "' is not key=value");
    detail::set_path(root, std::string(trim(o.substr(0, eq))), detail::parse_value(o.substr(eq + 1)),
                     "override '" + o + "'");
  }
}

}  // namespace emorec::pipeline
