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

#ifndef DOCDS_CONFIG_H_
#define DOCDS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

namespace docds {

// Reader for the flat TOML subset used by run configs:
//
//   # comment
//   [section]
//   key = 1            # integer
//   key = 3e-5         # float
//   key = true         # bool
//   key = "entity"     # basic string
//
// Arrays, inline tables and dotted keys are rejected with a ParseError.
class ConfigTable {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string>;

  static ConfigTable parse(std::string_view text);
  static ConfigTable load(const std::filesystem::path& path);

  bool contains(const std::string& section, const std::string& key) const;

  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
  std::optional<std::string> get_string(const std::string& section,
                                        const std::string& key) const;

  void set(const std::string& section, const std::string& key, Value value);

  // Overwrites `out` when the key is present; throws ConfigError on type mismatch.
  template <typename T>
  void read(const std::string& section, const std::string& key, T& out) const;

  const std::map<std::string, std::map<std::string, Value>>& sections() const {
    return sections_;
  }

 private:
  const Value* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, Value>> sections_;
};

template <typename T>
void ConfigTable::read(const std::string& section, const std::string& key, T& out) const {
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = get_bool(section, key)) out = *v;
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = get_int(section, key)) out = static_cast<T>(*v);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = get_double(section, key)) out = static_cast<T>(*v);
  } else {
    if (auto v = get_string(section, key)) out = *v;
  }
}

}  // namespace docds

#endif  // DOCDS_CONFIG_H_
