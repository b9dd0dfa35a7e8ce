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

#ifndef MVFUSE_REFERENCE_HPP_
#define MVFUSE_REFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvfuse/conv.hpp"
#include "mvfuse/feature_map.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/projection.hpp"
#include "mvfuse/rng.hpp"

/// Slow, direct implementations used as oracles by the self-check.
namespace mvfuse::reference
{

template <typename T>
BasicFeatureMap<T> conv2d(const BasicFeatureMap<T> & in, const ConvLayerSpec & s,
                          const ConvParams<T> & prm)
{
  const int ho = s.out_height(in.height());
  const int wo = s.out_width(in.width());
  BasicFeatureMap<T> out(in.view(), ho, wo, s.out_channels, T{}, in.geometry());
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      for (int o = 0; o < s.out_channels; ++o) {
        T acc = prm.bias[static_cast<std::size_t>(o)];
        for (int ky = 0; ky < s.kernel_h; ++ky) {
          for (int kx = 0; kx < s.kernel_w; ++kx) {
            const int iy = oy * s.stride_h - s.pad_top() + ky;
            const int ix = ox * s.stride_w - s.pad_left() + kx;
            if (iy < 0 || ix < 0 || iy >= in.height() || ix >= in.width()) {
              continue;
            }
            for (int c = 0; c < s.in_channels; ++c) {
              acc += in.at(iy, ix, c) *
                     prm.kernel[((static_cast<std::size_t>(ky) * s.kernel_w + kx) * s.in_channels +
                                 c) * s.out_channels + o];
            }
          }
        }
        if (s.activation == Activation::kRelu && acc < T(0)) {
          acc = T(0);
        }
        out.at(oy, ox, o) = acc;
      }
    }
  }
  return out;
}

template <typename T>
BasicFeatureMap<T> conv_transpose2d(const BasicFeatureMap<T> & in, const ConvLayerSpec & s,
                                    const ConvParams<T> & prm)
{
  const int ho = in.height() * s.stride_h;
  const int wo = in.width() * s.stride_w;
  const int ph = (s.kernel_h - s.stride_h) / 2;
  const int pw = (s.kernel_w - s.stride_w) / 2;
  BasicFeatureMap<T> out(in.view(), ho, wo, s.out_channels, T{}, in.geometry());
  for (int iy = 0; iy < in.height(); ++iy) {
    for (int ix = 0; ix < in.width(); ++ix) {
      for (int ky = 0; ky < s.kernel_h; ++ky) {
        for (int kx = 0; kx < s.kernel_w; ++kx) {
          const int oy = iy * s.stride_h - ph + ky;
          const int ox = ix * s.stride_w - pw + kx;
          if (oy < 0 || ox < 0 || oy >= ho || ox >= wo) {
            continue;
          }
          for (int c = 0; c < s.in_channels; ++c) {
            for (int o = 0; o < s.out_channels; ++o) {
              out.at(oy, ox, o) +=
                in.at(iy, ix, c) *
                prm.kernel[((static_cast<std::size_t>(ky) * s.kernel_w + kx) * s.in_channels + c) *
                             s.out_channels + o];
            }
          }
        }
      }
    }
  }
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      for (int o = 0; o < s.out_channels; ++o) {
        T v = out.at(y, x, o) + prm.bias[static_cast<std::size_t>(o)];
        if (s.activation == Activation::kRelu && v < T(0)) {
          v = T(0);
        }
        out.at(y, x, o) = v;
      }
    }
  }
  return out;
}

/// Mean of gathered source features per target cell: an outer loop over
/// target cells and an inner loop over all points.
template <typename T>
BasicFeatureMap<T> project_brute_force(const BasicFeatureMap<T> & source,
                                       std::span<const LidarPoint> points,
                                       const ViewGeometry & target)
{
  const CellIndex ext = view_extent(target);
  std::vector<std::optional<CellIndex>> tgt(points.size());
  std::vector<std::optional<CellIndex>> src(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    tgt[i] = project_point(target, points[i]);
    src[i] = project_point(source.geometry(), points[i]);
  }
  BasicFeatureMap<T> out(view_tag_of(target), ext.row, ext.col, source.channels(), T{}, target);
  std::vector<double> acc(static_cast<std::size_t>(source.channels()));
  for (int r = 0; r < ext.row; ++r) {
    for (int c = 0; c < ext.col; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int n = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!tgt[i] || !src[i] || tgt[i]->row != r || tgt[i]->col != c) {
          continue;
        }
        for (int k = 0; k < source.channels(); ++k) {
          acc[static_cast<std::size_t>(k)] += static_cast<double>(source.at(src[i]->row, src[i]->col, k));
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

/// IoU estimated by uniform sampling over the joint bounding rectangle.
inline double monte_carlo_iou(const RotatedBox2D & a, const RotatedBox2D & b, int samples,
                              Rng & rng)
{
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto & box : {a, b}) {
    for (const auto & p : box_corners(box)) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  long long inter = 0;
  long long uni = 0;
  for (int i = 0; i < samples; ++i) {
    const Point2 p{rng.uniform(x0, x1), rng.uniform(y0, y1)};
    const bool ia = point_in_box(p, a);
    const bool ib = point_in_box(p, b);
    inter += (ia && ib) ? 1 : 0;
    uni += (ia || ib) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace mvfuse::reference

#endif  // MVFUSE_REFERENCE_HPP_
