// Copyright 2026 The DocDS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "docds/config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "docds/errors.h"

namespace docds {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_bare_key(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// Strips a trailing comment that is not inside a string literal.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

ConfigTable::Value parse_value(std::string_view raw, std::size_t line_no) {
  if (raw.empty()) throw ParseError("missing value", line_no);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ParseError("unterminated string", line_no);
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      char c = raw[i];
      if (c == '\\' && i + 2 < raw.size()) {
        const char e = raw[++i];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: throw ParseError("unsupported escape", line_no);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '[' || raw.front() == '{') {
    throw ParseError("arrays and inline tables are not supported", line_no);
  }
  std::string digits;
  for (char c : raw) {
    if (c != '_') digits.push_back(c);
  }
  const bool looks_float = digits.find_first_of(".eE") != std::string::npos ||
                           digits == "inf" || digits == "nan";
  if (!looks_float) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return v;
  }
  double d = 0.0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw ParseError("cannot parse value '" + std::string(raw) + "'", line_no);
  }
  return d;
}

}  // namespace

ConfigTable ConfigTable::parse(std::string_view text) {
  ConfigTable table;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw_line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3 || line[1] == '[') {
        throw ParseError("malformed section header", line_no);
      }
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!is_bare_key(name)) throw ParseError("invalid section name", line_no);
      section = std::string(name);
      table.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const std::string_view key = trim(line.substr(0, eq));
    if (!is_bare_key(key)) throw ParseError("invalid key '" + std::string(key) + "'", line_no);
    auto& entries = table.sections_[section];
    if (entries.contains(std::string(key))) {
      throw ParseError("duplicate key '" + std::string(key) + "'", line_no);
    }
    entries.emplace(std::string(key), parse_value(trim(line.substr(eq + 1)), line_no));
  }
  return table;
}

ConfigTable ConfigTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ConfigTable::Value* ConfigTable::find(const std::string& section,
                                            const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool ConfigTable::contains(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::optional<double> ConfigTable::get_double(const std::string& section,
                                              const std::string& key) const {
  const Value* v = find(section, key);
  if (v == nullptr) return std::nullopt;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
  throw ConfigError(section + "." + key + ": expected a number");
}

std::optional<std::int64_t> ConfigTable::get_int(const std::string& section,
                                                 const std::string& key) const {
  const Value* v = find(section, key);
  if (v == nullptr) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  throw ConfigError(section + "." + key + ": expected an integer");
}

std::optional<bool> ConfigTable::get_bool(const std::string& section,
                                          const std::string& key) const {
  const Value* v = find(section, key);
  if (v == nullptr) return std::nullopt;
  if (const auto* b = std::get_if<bool>(v)) return *b;
  throw ConfigError(section + "." + key + ": expected a boolean");
}

std::optional<std::string> ConfigTable::get_string(const std::string& section,
                                                   const std::string& key) const {
  const Value* v = find(section, key);
  if (v == nullptr) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  throw ConfigError(section + "." + key + ": expected a string");
}

void ConfigTable::set(const std::string& section, const std::string& key, Value value) {
  sections_[section][key] = std::move(value);
}

}  // namespace docds
