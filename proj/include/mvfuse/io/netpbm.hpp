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

#ifndef MVFUSE_IO_NETPBM_HPP_
#define MVFUSE_IO_NETPBM_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mvfuse/camera.hpp"
#include "mvfuse/feature_map.hpp"
#include "mvfuse/io/binary.hpp"

namespace mvfuse::io
{

inline Bytes encode_ppm(const Image & img)
{
  const std::string head =
    "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

namespace detail
{

/// Reads the next whitespace-separated header token, skipping comments.
inline std::string next_token(const Bytes & b, std::size_t & pos)
{
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') {
        ++pos;
      }
    } else if (std::isspace(b[pos]) != 0) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && std::isspace(b[pos]) == 0) {
    tok.push_back(static_cast<char>(b[pos++]));
  }
  if (tok.empty()) {
    throw std::runtime_error("netpbm: truncated header");
  }
  return tok;
}

inline int header_int(const Bytes & b, std::size_t & pos)
{
  const std::string t = next_token(b, pos);
  try {
    return std::stoi(t);
  } catch (const std::exception &) {
    throw std::runtime_error("netpbm: bad header field '" + t + "'");
  }
}

}  // namespace detail

inline Image decode_ppm(const Bytes & b)
{
  std::size_t pos = 0;
  if (detail::next_token(b, pos) != "P6") {
    throw std::runtime_error("ppm: not a binary pixmap");
  }
  const int w = detail::header_int(b, pos);
  const int h = detail::header_int(b, pos);
  const int maxval = detail::header_int(b, pos);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw std::runtime_error("ppm: unsupported dimensions or depth");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (b.size() < pos + n) {
    throw std::runtime_error("ppm: truncated raster");
  }
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.assign(b.begin() + static_cast<std::ptrdiff_t>(pos),
                 b.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

inline Bytes encode_pgm(int width, int height, const std::vector<std::uint8_t> & gray)
{
  if (gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pgm: pixel count mismatch");
  }
  const std::string head =
    "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), gray.begin(), gray.end());
  return out;
}

/// One channel as 8-bit gray: -1 maps to 0, 1 to 255, clamped in between.
template <typename T>
Bytes channel_to_pgm(const BasicFeatureMap<T> & m, int ch)
{
  std::vector<std::uint8_t> g(static_cast<std::size_t>(m.height()) * m.width());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const double v = std::clamp(static_cast<double>(m.at(r, c, ch)), -1.0, 1.0);
      g[static_cast<std::size_t>(r) * m.width() + c] =
        static_cast<std::uint8_t>(std::lround((v + 1.0) * 127.5));
    }
  }
  return encode_pgm(m.width(), m.height(), g);
}

}  // namespace mvfuse::io

#endif  // MVFUSE_IO_NETPBM_HPP_
