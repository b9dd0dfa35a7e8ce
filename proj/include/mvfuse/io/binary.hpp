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

#ifndef MVFUSE_IO_BINARY_HPP_
#define MVFUSE_IO_BINARY_HPP_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvfuse::io
{

using Bytes = std::vector<std::uint8_t>;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::uint8_t * data, std::size_t n)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const Bytes & b) { return fnv1a(b.data(), b.size()); }

inline std::string hex64(std::uint64_t v)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

inline void put_u32_le(Bytes & out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_u64_le(Bytes & out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline std::uint32_t get_u32_le(const std::uint8_t * p)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  }
  return v;
}

inline std::uint64_t get_u64_le(const std::uint8_t * p)
{
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

inline void put_f32(Bytes & out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(Bytes & out, double v) { put_u64_le(out, std::bit_cast<std::uint64_t>(v)); }
inline float get_f32(const std::uint8_t * p) { return std::bit_cast<float>(get_u32_le(p)); }
inline double get_f64(const std::uint8_t * p) { return std::bit_cast<double>(get_u64_le(p)); }

inline Bytes read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path & path, const Bytes & data)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw std::runtime_error("short write to '" + path.string() + "'");
  }
}

inline void write_text(const std::filesystem::path & path, const std::string & text)
{
  write_file(path, Bytes(text.begin(), text.end()));
}

inline std::string read_text(const std::filesystem::path & path)
{
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

}  // namespace mvfuse::io

#endif  // MVFUSE_IO_BINARY_HPP_
