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

#ifndef MVFUSE_TIMING_HPP_
#define MVFUSE_TIMING_HPP_

#include <algorithm>
#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/kv.hpp"

namespace mvfuse
{

struct Stage
{
  std::string name;
  std::function<void()> run;
};

struct StageTiming
{
  std::string name;
  double median_ms{0.0};
  double min_ms{0.0};
  double max_ms{0.0};
};

struct TimingReport
{
  std::vector<StageTiming> stages;
  double total_median_ms{0.0};  // median over repetitions of the per-repetition sum
  int repetitions{0};

  double stage_sum_ms() const
  {
    double s = 0.0;
    for (const auto & st : stages) {
      s += st.median_ms;
    }
    return s;
  }

  std::string to_text() const
  {
    KeyValues kv;
    kv.set("repetitions", std::to_string(repetitions));
    for (const auto & s : stages) {
      kv.set("latency." + s.name + "_ms", format_fixed(s.median_ms, 3));
    }
    kv.set("latency.total_ms", format_fixed(total_median_ms, 3));
    return kv.to_text();
  }
};

inline double median(std::vector<double> v)
{
  if (v.empty()) {
    throw std::invalid_argument("median: empty sample");
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Runs every stage in order `repetitions` times on a monotonic clock.
inline TimingReport time_pipeline(const std::vector<Stage> & stages, int repetitions = 20)
{
  if (repetitions <= 0) {
    throw std::invalid_argument("time_pipeline: repetitions must be positive");
  }
  using Clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> samples(stages.size());
  std::vector<double> totals;
  for (int r = 0; r < repetitions; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const auto t0 = Clock::now();
      stages[i].run();
      const auto t1 = Clock::now();
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      samples[i].push_back(ms);
      total += ms;
    }
    totals.push_back(total);
  }
  TimingReport rep;
  rep.repetitions = repetitions;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto [lo, hi] = std::minmax_element(samples[i].begin(), samples[i].end());
    rep.stages.push_back({stages[i].name, median(samples[i]), *lo, *hi});
  }
  rep.total_median_ms = median(totals);
  return rep;
}

}  // namespace mvfuse

#endif  // MVFUSE_TIMING_HPP_
