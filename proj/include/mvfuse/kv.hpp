// Copyright 2026 The mvfuse Authors
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

#ifndef MVFUSE_KV_HPP_
#define MVFUSE_KV_HPP_

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mvfuse
{

/// Plain `key = value` documents. Blank lines and lines starting with '#'
/// are ignored; section headers `[name]` prefix the keys that follow with
/// `name.`.
class KeyValues
{
public:
  static KeyValues parse(std::string_view text)
  {
    KeyValues kv;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) {
        end = text.size();
      }
      std::string_view line = trim(text.substr(pos, end - pos));
      ++line_no;
      pos = end + 1;
      if (line.empty() || line.front() == '#') {
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw std::runtime_error("key/value line " + std::to_string(line_no) +
                                   ": unterminated section header");
        }
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw std::runtime_error("key/value line " + std::to_string(line_no) + ": missing '='");
      }
      std::string key(trim(line.substr(0, eq)));
      if (key.empty()) {
        throw std::runtime_error("key/value line " + std::to_string(line_no) + ": empty key");
      }
      if (!section.empty()) {
        key = section + "." + key;
      }
      kv.set(key, std::string(trim(line.substr(eq + 1))));
    }
    return kv;
  }

  void set(const std::string & key, std::string value)
  {
    if (values_.find(key) == values_.end()) {
      order_.push_back(key);
    }
    values_[key] = std::move(value);
  }

  bool has(const std::string & key) const { return values_.count(key) != 0; }

  const std::string & get(const std::string & key) const
  {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      throw std::runtime_error("missing key '" + key + "'");
    }
    return it->second;
  }

  double get_double(const std::string & key) const { return to_double(get(key), key); }
  double get_double(const std::string & key, double fallback) const
  {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string & key) const { return to_int(get(key), key); }
  long long get_int(const std::string & key, long long fallback) const
  {
    return has(key) ? get_int(key) : fallback;
  }

  const std::vector<std::string> & keys() const { return order_; }

  /// One `key = value` line per entry, in insertion order.
  std::string to_text() const
  {
    std::string out;
    for (const auto & k : order_) {
      out += k;
      out += " = ";
      out += values_.at(k);
      out += '\n';
    }
    return out;
  }

  static double to_double(const std::string & s, const std::string & key)
  {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) {
        throw std::invalid_argument(s);
      }
      return v;
    } catch (const std::exception &) {
      throw std::runtime_error("key '" + key + "': not a number: '" + s + "'");
    }
  }

  static long long to_int(const std::string & s, const std::string & key)
  {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw std::runtime_error("key '" + key + "': not an integer: '" + s + "'");
    }
    return v;
  }

  static std::string_view trim(std::string_view s)
  {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
      return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed-precision rendering for human-facing reports.
inline std::string format_fixed(double v, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace mvfuse

#endif  // MVFUSE_KV_HPP_
