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

#ifndef MVFUSE_WEIGHTS_HPP_
#define MVFUSE_WEIGHTS_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/conv.hpp"
#include "mvfuse/rng.hpp"

namespace mvfuse
{

struct WeightBlock
{
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;

  std::size_t expected_size() const
  {
    std::size_t n = 1;
    for (int d : shape) {
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  friend bool operator==(const WeightBlock &, const WeightBlock &) = default;
};

/// Ordered parameter blocks. Convolution layers contribute `<name>.kernel`
/// with shape [kh, kw, in, out] and `<name>.bias` with shape [out].
struct NetworkWeights
{
  std::string scheme{"external"};
  std::uint64_t seed{0};
  std::vector<WeightBlock> blocks;

  const WeightBlock & find(const std::string & name) const
  {
    for (const auto & b : blocks) {
      if (b.name == name) {
        return b;
      }
    }
    throw std::runtime_error("weights: missing block '" + name + "'");
  }

  ConvParams<float> conv(const std::string & layer, const ConvLayerSpec & spec) const
  {
    const auto & k = find(layer + ".kernel");
    const auto & b = find(layer + ".bias");
    const std::vector<int> kshape{spec.kernel_h, spec.kernel_w, spec.in_channels,
                                  spec.out_channels};
    if (k.shape != kshape || b.shape != std::vector<int>{spec.out_channels}) {
      throw std::runtime_error("weights: block shapes for '" + layer +
                               "' do not match the topology");
    }
    return {k.values, b.values};
  }

  friend bool operator==(const NetworkWeights &, const NetworkWeights &) = default;
};

struct NamedLayer
{
  std::string name;
  ConvLayerSpec spec;
  bool transposed{false};
};

/// Glorot-uniform kernels, limit sqrt(6 / (fan_in + fan_out)) with fans
/// counted over the kernel window; zero biases.
inline NetworkWeights generate_weights(const std::vector<NamedLayer> & layers, std::uint64_t seed)
{
  NetworkWeights w;
  w.scheme = "glorot-uniform";
  w.seed = seed;
  Rng rng(seed);
  for (const auto & l : layers) {
    const auto & s = l.spec;
    const double window = static_cast<double>(s.kernel_h) * s.kernel_w;
    const double limit = std::sqrt(6.0 / (window * s.in_channels + window * s.out_channels));
    WeightBlock k{l.name + ".kernel", {s.kernel_h, s.kernel_w, s.in_channels, s.out_channels}, {}};
    k.values.resize(s.kernel_size());
    for (auto & v : k.values) {
      v = static_cast<float>(rng.uniform(-limit, limit));
    }
    WeightBlock b{l.name + ".bias", {s.out_channels}, std::vector<float>(
                                                        static_cast<std::size_t>(s.out_channels),
                                                        0.0F)};
    w.blocks.push_back(std::move(k));
    w.blocks.push_back(std::move(b));
  }
  return w;
}

namespace detail
{

inline void put_f32_le(std::string & out, float v)
{
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFU));
  }
}

inline float get_f32_le(const unsigned char * p)
{
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace detail

inline constexpr const char * kWeightsMagic = "mvfuse-weights";
inline constexpr int kWeightsVersion = 1;

/// Text manifest (one `block <name> <rank> <dims...>` line per block), a
/// `data` line, then every block's values as little-endian float32 in
/// manifest order.
inline std::string serialize_weights(const NetworkWeights & w)
{
  std::string s = std::string(kWeightsMagic) + " " + std::to_string(kWeightsVersion) + "\n";
  s += "scheme " + w.scheme + "\n";
  s += "seed " + std::to_string(w.seed) + "\n";
  for (const auto & b : w.blocks) {
    s += "block " + b.name + " " + std::to_string(b.shape.size());
    for (int d : b.shape) {
      s += " " + std::to_string(d);
    }
    s += "\n";
  }
  s += "data\n";
  for (const auto & b : w.blocks) {
    if (b.values.size() != b.expected_size()) {
      throw std::invalid_argument("serialize_weights: block '" + b.name + "' has wrong size");
    }
    for (float v : b.values) {
      detail::put_f32_le(s, v);
    }
  }
  return s;
}

inline NetworkWeights parse_weights(const std::string & bytes)
{
  std::size_t pos = 0;
  auto next_line = [&]() {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) {
      throw std::runtime_error("weights: truncated manifest");
    }
    std::string line = bytes.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };
  NetworkWeights w;
  {
    std::istringstream hdr(next_line());
    std::string magic;
    int version = 0;
    hdr >> magic >> version;
    if (magic != kWeightsMagic) {
      throw std::runtime_error("weights: bad magic");
    }
    if (version != kWeightsVersion) {
      throw std::runtime_error("weights: unsupported version " + std::to_string(version));
    }
  }
  for (;;) {
    const std::string line = next_line();
    if (line == "data") {
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "scheme") {
      ls >> w.scheme;
    } else if (key == "seed") {
      ls >> w.seed;
    } else if (key == "block") {
      WeightBlock b;
      std::size_t rank = 0;
      ls >> b.name >> rank;
      b.shape.resize(rank);
      for (auto & d : b.shape) {
        ls >> d;
      }
      if (!ls) {
        throw std::runtime_error("weights: malformed block line '" + line + "'");
      }
      w.blocks.push_back(std::move(b));
    } else {
      throw std::runtime_error("weights: unknown manifest line '" + line + "'");
    }
  }
  std::size_t total = 0;
  for (const auto & b : w.blocks) {
    total += b.expected_size();
  }
  if (bytes.size() - pos != total * 4) {
    throw std::runtime_error("weights: payload size " + std::to_string(bytes.size() - pos) +
                             " does not match manifest (" + std::to_string(total * 4) + ")");
  }
  const auto * p = reinterpret_cast<const unsigned char *>(bytes.data() + pos);
  for (auto & b : w.blocks) {
    b.values.resize(b.expected_size());
    for (auto & v : b.values) {
      v = detail::get_f32_le(p);
      p += 4;
    }
  }
  return w;
}

inline void save_weights(const std::string & path, const NetworkWeights & w)
{
  std::ofstream f(path, std::ios::binary);
  const std::string s = serialize_weights(w);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) {
    throw std::runtime_error("save_weights: cannot write " + path);
  }
}

inline NetworkWeights load_weights(const std::string & path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("load_weights: cannot open " + path);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_weights(ss.str());
}

}  // namespace mvfuse

#endif  // MVFUSE_WEIGHTS_HPP_
