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

#ifndef MVFUSE_RASTER_HPP_
#define MVFUSE_RASTER_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mvfuse/feature_map.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/projection.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/sensor.hpp"
#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

/// Height layer of z, or -1 outside [z_min, z_max).
inline int bev_layer_of(double z, const GridSpec & grid)
{
  if (!(z >= grid.z_min && z < grid.z_max())) {
    return -1;
  }
  const int layer = static_cast<int>(std::floor((z - grid.z_min) / grid.voxel_height));
  return layer < grid.layers() ? layer : -1;
}

/// Sets binary occupancy for every point into channels
/// [channel_offset, channel_offset + layers) of `map`.
template <typename PointT>
void voxelize_into(std::span<const PointT> points, const GridSpec & grid, FeatureMap & map,
                   int channel_offset = 0)
{
  for (const auto & p : points) {
    const auto cell = bev_cell_of(Point3{p.x, p.y, p.z}, grid);
    if (!cell) {
      continue;
    }
    const int layer = bev_layer_of(p.z, grid);
    if (layer < 0) {
      continue;
    }
    map.at(cell->row, cell->col, channel_offset + layer) = 1.0F;
  }
}

inline FeatureMap voxelize_sweep_bev(const Sweep & sweep, const GridSpec & grid)
{
  grid.validate();
  FeatureMap map(ViewTag::kBev, grid.rows(), grid.cols(), grid.layers(), 0.0F, grid);
  voxelize_into(std::span<const LidarPoint>(sweep.points), grid, map);
  return map;
}

/// Multi-sweep occupancy stack. Every sweep is moved into the ego frame of
/// the newest sweep before voxelization; channel blocks run oldest first.
inline FeatureMap stack_history_bev(std::span<const Sweep> sweeps, const GridSpec & grid, int T)
{
  if (static_cast<int>(sweeps.size()) != T || T <= 0) {
    throw std::invalid_argument("stack_history_bev: expected " + std::to_string(T) +
                                " sweeps, got " + std::to_string(sweeps.size()));
  }
  grid.validate();
  const int layers = grid.layers();
  FeatureMap map(ViewTag::kBev, grid.rows(), grid.cols(), T * layers, 0.0F, grid);
  const Pose2 to_current = se2_inverse(sweeps.back().ego_pose);
  for (int i = 0; i < T; ++i) {
    const Sweep & s = sweeps[static_cast<std::size_t>(i)];
    const Pose2 rel = se2_compose(to_current, s.ego_pose);
    const auto pts = transform_points(std::span<const LidarPoint>(s.points), rel);
    voxelize_into(std::span<const LidarPoint>(pts), grid, map, i * layers);
  }
  return map;
}

inline constexpr double kDefaultMapLineWidth = 0.2;

namespace detail
{

struct CellRange
{
  int r0, r1, c0, c1;  // inclusive; empty when r0 > r1 or c0 > c1
};

inline CellRange cells_overlapping(const GridSpec & g, double x0, double x1, double y0, double y1)
{
  auto clamp_idx = [](double v, int n) {
    return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(n)));
  };
  return {clamp_idx(std::floor((x0 - g.x_min) / g.voxel_length), g.rows()),
          std::min(clamp_idx(std::floor((x1 - g.x_min) / g.voxel_length), g.rows()), g.rows() - 1),
          clamp_idx(std::floor((y0 - g.y_min) / g.voxel_width), g.cols()),
          std::min(clamp_idx(std::floor((y1 - g.y_min) / g.voxel_width), g.cols()), g.cols() - 1)};
}

}  // namespace detail

/// One binary channel per map layer, in MapGeometry layer order. A cell is set
/// when its center lies inside a polygon of the layer or within half the line
/// width of a polyline of the layer.
inline FeatureMap rasterize_map(const MapGeometry & map, const GridSpec & grid,
                                double line_width = kDefaultMapLineWidth)
{
  grid.validate();
  FeatureMap out(ViewTag::kBev, grid.rows(), grid.cols(), kNumMapLayers, 0.0F, grid);
  const double half = 0.5 * line_width;
  for (int layer = 0; layer < kNumMapLayers; ++layer) {
    for (const auto & el : map.layers[static_cast<std::size_t>(layer)]) {
      if (el.points.empty()) {
        continue;
      }
      if (el.closed) {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto & p : el.points) {
          x0 = std::min(x0, p.x);
          x1 = std::max(x1, p.x);
          y0 = std::min(y0, p.y);
          y1 = std::max(y1, p.y);
        }
        const auto cr = detail::cells_overlapping(grid, x0, x1, y0, y1);
        for (int r = std::max(cr.r0, 0); r <= cr.r1; ++r) {
          for (int c = std::max(cr.c0, 0); c <= cr.c1; ++c) {
            if (point_in_polygon(grid.cell_center(r, c), el.points)) {
              out.at(r, c, layer) = 1.0F;
            }
          }
        }
        continue;
      }
      const std::size_t segments = el.points.size() > 1 ? el.points.size() - 1 : 1;
      for (std::size_t i = 0; i < segments; ++i) {
        const Point2 a = el.points[i];
        const Point2 b = el.points.size() > 1 ? el.points[i + 1] : a;
        const auto cr = detail::cells_overlapping(grid, std::min(a.x, b.x) - half,
                                                  std::max(a.x, b.x) + half,
                                                  std::min(a.y, b.y) - half,
                                                  std::max(a.y, b.y) + half);
        for (int r = std::max(cr.r0, 0); r <= cr.r1; ++r) {
          for (int c = std::max(cr.c0, 0); c <= cr.c1; ++c) {
            if (segment_distance(grid.cell_center(r, c), a, b) <= half) {
              out.at(r, c, layer) = 1.0F;
            }
          }
        }
      }
    }
  }
  return out;
}

enum RvChannel : int { kRvRange = 0, kRvHeight = 1, kRvIntensity = 2, kRvValid = 3 };
inline constexpr int kRvChannels = 4;

/// Four-channel range image of the current sweep: range, height above ground,
/// intensity, validity. Empty pixels hold (-1, -1, -1, 0). When several points
/// share a pixel the nearest range wins; equal ranges keep the lower index.
inline FeatureMap build_rv_image(const Sweep & sweep, const RvSpec & rv)
{
  FeatureMap out(ViewTag::kRv, rv.rows, rv.cols, kRvChannels, -1.0F, rv);
  std::vector<double> best(static_cast<std::size_t>(rv.rows) * rv.cols,
                           std::numeric_limits<double>::infinity());
  for (const auto & p : sweep.points) {
    const CellIndex cell = rv_cell_of(p, rv);
    const std::size_t i = static_cast<std::size_t>(cell.row) * rv.cols + cell.col;
    if (!(p.range < best[i])) {
      continue;
    }
    best[i] = p.range;
    out.at(cell.row, cell.col, kRvRange) = static_cast<float>(p.range);
    out.at(cell.row, cell.col, kRvHeight) = static_cast<float>(p.z);
    out.at(cell.row, cell.col, kRvIntensity) = static_cast<float>(p.intensity);
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    out.data()[i * kRvChannels + kRvValid] = std::isinf(best[i]) ? 0.0F : 1.0F;
  }
  return out;
}

}  // namespace mvfuse

#endif  // MVFUSE_RASTER_HPP_
