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

#ifndef MVFUSE_RNG_HPP_
#define MVFUSE_RNG_HPP_

#include <cstdint>
#include <random>

namespace mvfuse
{

/// Seeded generator with platform-independent real and integer draws.
/// std::uniform_*_distribution is implementation-defined, so draws are built
/// directly from the 64-bit engine output.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace mvfuse

#endif  // MVFUSE_RNG_HPP_
