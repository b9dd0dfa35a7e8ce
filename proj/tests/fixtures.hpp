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

// Random inputs shared by the unit tests and the acceptance run.

#ifndef MVFUSE_TESTS_FIXTURES_HPP_
#define MVFUSE_TESTS_FIXTURES_HPP_

#include <cmath>
#include <vector>

#include "mvfuse.hpp"

namespace fixture
{

using namespace mvfuse;

/// Random returns; azimuths stay at least 1% of a bin away from bin edges.
inline std::vector<LidarPoint> random_points(Rng & rng, std::size_t n, int lasers, int bins, double x0,
                                      double x1, double y0, double y1)
{
  std::vector<LidarPoint> pts(n);
  for (auto & p : pts) {
    p.x = rng.uniform(x0, x1);
    p.y = rng.uniform(y0, y1);
    p.z = rng.uniform(-1.0, 3.0);
    p.range = std::hypot(p.x, p.y);
    p.intensity = rng.uniform();
    p.laser_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(lasers)));
    const double bin = static_cast<double>(rng.below(static_cast<std::uint64_t>(bins)));
    p.azimuth = (bin + rng.uniform(0.01, 0.99)) * kTwoPi / bins;
  }
  return pts;
}

template <typename T>
BasicFeatureMap<T> random_map(Rng & rng, ViewTag tag, CellIndex ext, int channels, ViewGeometry g)
{
  BasicFeatureMap<T> m(tag, ext.row, ext.col, channels, T{}, std::move(g));
  for (auto & v : m.data()) {
    v = static_cast<T>(rng.uniform(-1.0, 1.0));
  }
  return m;
}

template <typename T>
ConvParams<T> random_params(const ConvLayerSpec & s, Rng & rng)
{
  ConvParams<T> p;
  p.kernel.resize(s.kernel_size());
  for (auto & v : p.kernel) {
    v = static_cast<T>(rng.uniform(-1.0, 1.0));
  }
  p.bias.resize(static_cast<std::size_t>(s.out_channels));
  for (auto & v : p.bias) {
    v = static_cast<T>(rng.uniform(-0.5, 0.5));
  }
  return p;
}

template <typename T>
BasicFeatureMap<T> random_input(int h, int w, int c, double zeros, Rng & rng)
{
  BasicFeatureMap<T> m(ViewTag::kBev, h, w, c);
  for (auto & v : m.data()) {
    v = rng.uniform() < zeros ? T(0) : static_cast<T>(rng.uniform(-1.0, 1.0));
  }
  return m;
}

inline ConvLayerSpec random_spec(Rng & rng)
{
  ConvLayerSpec s;
  s.in_channels = 1 + static_cast<int>(rng.below(9));
  s.out_channels = 1 + static_cast<int>(rng.below(9));
  s.kernel_h = 1 + static_cast<int>(rng.below(5));
  s.kernel_w = 1 + static_cast<int>(rng.below(5));
  s.stride_h = 1 + static_cast<int>(rng.below(3));
  s.stride_w = 1 + static_cast<int>(rng.below(3));
  s.activation = rng.bernoulli(0.5) ? Activation::kRelu : Activation::kIdentity;
  return s;
}

/// Labels of `n` actors with random classes, boxes and straight-line motion,
/// centered within `reach` of the origin.
inline LabelSet random_labels(Rng & rng, int n, int horizon, double reach)
{
  LabelSet l;
  l.horizon = horizon;
  for (int i = 0; i < n; ++i) {
    ActorLabel a;
    a.id = i;
    a.cls = kAllClasses[rng.below(kNumClasses)];
    a.box = RotatedBox2D::make(rng.uniform(-reach, reach), rng.uniform(-reach, reach),
                               rng.uniform(0.8, 4.5), rng.uniform(0.5, 2.0), rng.uniform(-kPi, kPi));
    const double vx = rng.uniform(-8.0, 8.0);
    const double vy = rng.uniform(-2.0, 2.0);
    const double w = rng.uniform(-0.3, 0.3);
    for (int h = 1; h <= horizon; ++h) {
      const double t = 0.1 * h;
      a.waypoints.push_back({a.box.cx + vx * t, a.box.cy + vy * t, a.box.heading + w * t});
    }
    l.actors.push_back(std::move(a));
  }
  return l;
}

/// Outputs with probabilities in [0.05, 0.95] and every fg regression
/// residual at least 0.05 away from the smooth-l1 kink.
inline CellOutputs random_outputs(const CellTargets & t, Rng & rng)
{
  CellOutputs o(t.grid, t.layout);
  const OutputLayout & L = o.layout;
  for (auto & v : o.values) {
    v = rng.uniform(-3.0, 3.0);
  }
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      for (int k = 0; k < L.num_classes; ++k) {
        o.at(r, c, L.prob(k)) = rng.uniform(0.05, 0.95);
      }
    }
  }
  for (const auto & fg : t.fg) {
    double * blk = o.cell(fg.row, fg.col) + L.block(fg.cls);
    for (int ch = 1; ch < L.per_class(); ++ch) {
      const double m = rng.bernoulli(0.5) ? rng.uniform(0.05, 0.95) : rng.uniform(1.05, 3.0);
      blk[ch] = fg.target[static_cast<std::size_t>(ch)] + (rng.bernoulli(0.5) ? m : -m);
    }
  }
  return o;
}

}  // namespace fixture

#endif  // MVFUSE_TESTS_FIXTURES_HPP_
