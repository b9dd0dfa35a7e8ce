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

// Independent oracles for the test suites. Nothing here calls the library
// routine it checks; cell indexing, convolution and sampling are rewritten
// from their definitions.

#ifndef MVFUSE_TESTS_ORACLES_HPP_
#define MVFUSE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "mvfuse.hpp"

namespace oracle
{

using mvfuse::BasicFeatureMap;
using mvfuse::ConvLayerSpec;
using mvfuse::ConvParams;

/// Row-major, channel-last dense tensor used by the convolution oracles.
struct Tensor
{
  int h{0};
  int w{0};
  int c{0};
  std::vector<double> v;

  Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, 0.0) {}

  double & at(int y, int x, int k) { return v[(static_cast<std::size_t>(y) * w + x) * c + k]; }
  double at(int y, int x, int k) const { return v[(static_cast<std::size_t>(y) * w + x) * c + k]; }
};

template <typename T>
Tensor to_tensor(const BasicFeatureMap<T> & m)
{
  Tensor t(m.height(), m.width(), m.channels());
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.v[i] = static_cast<double>(m.data()[i]);
  }
  return t;
}

/// out[y][x][o] = b[o] + sum over (ky, kx, i) of in[y*s - p + ky][x*s - p + kx][i] * K[ky][kx][i][o]
/// with p = (k - 1) / 2 and zero outside the input.
template <typename T>
Tensor conv2d(const Tensor & in, const ConvLayerSpec & s, const ConvParams<T> & prm)
{
  const int ho = (in.h + s.stride_h - 1) / s.stride_h;
  const int wo = (in.w + s.stride_w - 1) / s.stride_w;
  const int ph = (s.kernel_h - 1) / 2;
  const int pw = (s.kernel_w - 1) / 2;
  Tensor out(ho, wo, s.out_channels);
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      for (int o = 0; o < s.out_channels; ++o) {
        double acc = static_cast<double>(prm.bias[static_cast<std::size_t>(o)]);
        for (int ky = 0; ky < s.kernel_h; ++ky) {
          for (int kx = 0; kx < s.kernel_w; ++kx) {
            const int iy = y * s.stride_h - ph + ky;
            const int ix = x * s.stride_w - pw + kx;
            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) {
              continue;
            }
            for (int i = 0; i < s.in_channels; ++i) {
              const std::size_t k =
                ((static_cast<std::size_t>(ky) * s.kernel_w + kx) * s.in_channels + i) *
                  s.out_channels + o;
              acc += in.at(iy, ix, i) * static_cast<double>(prm.kernel[k]);
            }
          }
        }
        out.at(y, x, o) = s.activation == mvfuse::Activation::kRelu ? std::max(acc, 0.0) : acc;
      }
    }
  }
  return out;
}

/// Gradient-of-convolution form: every output pixel gathers the inputs whose
/// scatter footprint covers it. Output is in * stride, padding (k - s) / 2.
template <typename T>
Tensor conv_transpose2d(const Tensor & in, const ConvLayerSpec & s, const ConvParams<T> & prm)
{
  const int ho = in.h * s.stride_h;
  const int wo = in.w * s.stride_w;
  const int ph = (s.kernel_h - s.stride_h) / 2;
  const int pw = (s.kernel_w - s.stride_w) / 2;
  Tensor out(ho, wo, s.out_channels);
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      for (int o = 0; o < s.out_channels; ++o) {
        double acc = static_cast<double>(prm.bias[static_cast<std::size_t>(o)]);
        for (int ky = 0; ky < s.kernel_h; ++ky) {
          for (int kx = 0; kx < s.kernel_w; ++kx) {
            const int ny = y + ph - ky;
            const int nx = x + pw - kx;
            if (ny < 0 || nx < 0 || ny % s.stride_h != 0 || nx % s.stride_w != 0) {
              continue;
            }
            const int iy = ny / s.stride_h;
            const int ix = nx / s.stride_w;
            if (iy >= in.h || ix >= in.w) {
              continue;
            }
            for (int i = 0; i < s.in_channels; ++i) {
              const std::size_t k =
                ((static_cast<std::size_t>(ky) * s.kernel_w + kx) * s.in_channels + i) *
                  s.out_channels + o;
              acc += in.at(iy, ix, i) * static_cast<double>(prm.kernel[k]);
            }
          }
        }
        out.at(y, x, o) = s.activation == mvfuse::Activation::kRelu ? std::max(acc, 0.0) : acc;
      }
    }
  }
  return out;
}

template <typename T>
double max_abs_diff(const Tensor & a, const BasicFeatureMap<T> & b)
{
  if (a.h != b.height() || a.w != b.width() || a.c != b.channels()) {
    return INFINITY;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    worst = std::max(worst, std::abs(a.v[i] - static_cast<double>(b.data()[i])));
  }
  return worst;
}

// --- cell indexing --------------------------------------------------------

using Cell = std::pair<int, int>;

inline std::optional<Cell> bev_cell(double x, double y, const mvfuse::GridSpec & g)
{
  const double x_hi = g.x_min + g.length;
  const double y_hi = g.y_min + g.width;
  if (x < g.x_min || x >= x_hi || y < g.y_min || y >= y_hi) {
    return std::nullopt;
  }
  const int r = static_cast<int>(std::floor((x - g.x_min) / g.voxel_length));
  const int c = static_cast<int>(std::floor((y - g.y_min) / g.voxel_width));
  const int rows = static_cast<int>(std::ceil(g.length / g.voxel_length - 1e-9));
  const int cols = static_cast<int>(std::ceil(g.width / g.voxel_width - 1e-9));
  if (r >= rows || c >= cols) {
    return std::nullopt;
  }
  return Cell{r, c};
}

/// Azimuth bin by plain flooring; callers draw azimuths away from bin edges.
inline Cell rv_cell(int laser, double azimuth, int cols)
{
  int c = static_cast<int>(std::floor(azimuth / (2.0 * std::numbers::pi) * cols));
  c = std::clamp(c, 0, cols - 1);
  return {laser, c};
}

/// Pinhole camera at the ego origin looking along +x, no mount rotation.
inline std::optional<Cell> camera_cell(double x, double y, double z,
                                       const mvfuse::CameraModel & cam, int stride)
{
  if (!(x > 0.0)) {
    return std::nullopt;
  }
  const double u = cam.cx - cam.fx * y / x;
  const double v = cam.cy - cam.fy * (z - cam.mount_height) / x;
  if (!(u >= 0.0 && u < cam.width && v >= cam.crop_top && v < cam.height)) {
    return std::nullopt;
  }
  return Cell{(static_cast<int>(std::floor(v)) - cam.crop_top) / stride,
              static_cast<int>(std::floor(u)) / stride};
}

/// Mean of gathered source features per target cell, written as the literal
/// double loop over target cells and points. Cells are precomputed per point.
template <typename T>
BasicFeatureMap<T> gather_mean(const BasicFeatureMap<T> & source, const std::vector<std::optional<Cell>> & src,
                               const std::vector<std::optional<Cell>> & tgt, int rows, int cols,
                               mvfuse::ViewTag tag)
{
  BasicFeatureMap<T> out(tag, rows, cols, source.channels(), T{});
  std::vector<double> acc(static_cast<std::size_t>(source.channels()));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int n = 0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (!tgt[i] || !src[i] || tgt[i]->first != r || tgt[i]->second != c) {
          continue;
        }
        for (int k = 0; k < source.channels(); ++k) {
          acc[static_cast<std::size_t>(k)] +=
            static_cast<double>(source.at(src[i]->first, src[i]->second, k));
        }
        ++n;
      }
      if (n > 0) {
        for (int k = 0; k < source.channels(); ++k) {
          out.at(r, c, k) = static_cast<T>(acc[static_cast<std::size_t>(k)] / n);
        }
      }
    }
  }
  return out;
}

template <typename T>
bool bit_equal(const BasicFeatureMap<T> & a, const BasicFeatureMap<T> & b)
{
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
    return false;
  }
  return std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

// --- boxes ----------------------------------------------------------------

inline bool inside(const mvfuse::RotatedBox2D & b, double x, double y)
{
  const double dx = x - b.cx;
  const double dy = y - b.cy;
  const double lx = std::cos(b.heading) * dx + std::sin(b.heading) * dy;
  const double ly = -std::sin(b.heading) * dx + std::cos(b.heading) * dy;
  return std::abs(lx) <= 0.5 * b.length && std::abs(ly) <= 0.5 * b.width;
}

/// IoU by uniform sampling over the axis-aligned hull of both boxes.
inline double sampled_iou(const mvfuse::RotatedBox2D & a, const mvfuse::RotatedBox2D & b,
                          int samples, std::uint64_t seed)
{
  auto reach = [](const mvfuse::RotatedBox2D & r) { return 0.5 * std::hypot(r.length, r.width); };
  const double x0 = std::min(a.cx - reach(a), b.cx - reach(b));
  const double x1 = std::max(a.cx + reach(a), b.cx + reach(b));
  const double y0 = std::min(a.cy - reach(a), b.cy - reach(b));
  const double y1 = std::max(a.cy + reach(a), b.cy + reach(b));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  long long both = 0;
  long long any = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(gen);
    const double y = uy(gen);
    const bool ia = inside(a, x, y);
    const bool ib = inside(b, x, y);
    both += (ia && ib) ? 1 : 0;
    any += (ia || ib) ? 1 : 0;
  }
  return any == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(any);
}

// --- loss -----------------------------------------------------------------

/// Central differences of total_loss against every output value; returns the
/// largest relative error, counting pairs where both sides are below
/// `zero_tol` as exact.
inline double max_gradient_error(const mvfuse::CellOutputs & out, const mvfuse::CellTargets & t,
                                 const std::vector<double> & analytic, double step = 1e-4,
                                 double zero_tol = 1e-12)
{
  mvfuse::CellOutputs probe = out;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.values.size(); ++i) {
    const double v = probe.values[i];
    probe.values[i] = v + step;
    const double up = mvfuse::total_loss(probe, t).total;
    probe.values[i] = v - step;
    const double down = mvfuse::total_loss(probe, t).total;
    probe.values[i] = v;
    const double fd = (up - down) / (2.0 * step);
    const double scale = std::max(std::abs(fd), std::abs(analytic[i]));
    if (scale >= zero_tol) {
      worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
    }
  }
  return worst;
}

/// Center term of one fg cell whose x-center is off by `e` at every horizon:
/// sum over h = 0..H of decay^h * 0.5 * e^2, for |e| < 1.
inline double constant_error_center_term(double e, double decay, int horizon)
{
  double s = 0.0;
  double w = 1.0;
  for (int h = 0; h <= horizon; ++h) {
    s += w * 0.5 * e * e;
    w *= decay;
  }
  return s;
}

}  // namespace oracle

#endif  // MVFUSE_TESTS_ORACLES_HPP_
