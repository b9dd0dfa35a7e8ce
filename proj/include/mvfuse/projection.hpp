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

#ifndef MVFUSE_PROJECTION_HPP_
#define MVFUSE_PROJECTION_HPP_

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/feature_map.hpp"
#include "mvfuse/sensor.hpp"
#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

/// BEV cell containing the point, or nothing when it lies outside the
/// half-open extent [x_min, x_max) x [y_min, y_max). Height is ignored.
inline std::optional<CellIndex> bev_cell_of(Point3 p, const GridSpec & grid)
{
  if (!(p.x >= grid.x_min && p.x < grid.x_max() && p.y >= grid.y_min && p.y < grid.y_max())) {
    return std::nullopt;
  }
  const int row = static_cast<int>(std::floor((p.x - grid.x_min) / grid.voxel_length));
  const int col = static_cast<int>(std::floor((p.y - grid.y_min) / grid.voxel_width));
  if (row < 0 || row >= grid.rows() || col < 0 || col >= grid.cols()) {
    return std::nullopt;
  }
  return CellIndex{row, col};
}

/// Bin-edge snap tolerance in bins; covers float32 storage of azimuths.
inline constexpr double kAzimuthSnapBins = 1e-3;

/// Azimuth bin of an angle in [0, 2pi). Positions within kAzimuthSnapBins of
/// a bin edge snap to it, so rays cast on bin edges land in their own bin.
inline int azimuth_column(double azimuth, int cols)
{
  const double q = azimuth / kTwoPi * cols;
  const double r = std::round(q);
  int col = std::abs(q - r) <= kAzimuthSnapBins ? static_cast<int>(r)
                                                : static_cast<int>(std::floor(q));
  // The edge at 2pi is the edge at 0.
  return ((col % cols) + cols) % cols;
}

/// Range-view cell: row = laser ID, column = azimuth bin. Total for valid IDs.
inline CellIndex rv_cell_of(const LidarPoint & p, const RvSpec & rv)
{
  if (p.laser_id < 0 || p.laser_id >= rv.rows) {
    throw std::out_of_range("rv_cell_of: laser ID outside the range-view rows");
  }
  return {p.laser_id, azimuth_column(p.azimuth, rv.cols)};
}

/// Pixel of the cropped camera image, or nothing when the point is behind the
/// camera, outside the sensor, or inside the cropped band.
inline std::optional<CellIndex> camera_pixel_of(Point3 p, const CameraModel & cam)
{
  const auto uv = cam.project(p);
  if (!uv) {
    return std::nullopt;
  }
  const double u = (*uv)[0];
  const double v = (*uv)[1];
  if (!(u >= 0.0 && u < cam.width && v >= cam.crop_top && v < cam.height)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(std::floor(v)) - cam.crop_top,
                   static_cast<int>(std::floor(u))};
}

/// Spatial size of a map living in the given geometry.
inline CellIndex view_extent(const ViewGeometry & g)
{
  if (const auto * grid = std::get_if<GridSpec>(&g)) {
    return {grid->rows(), grid->cols()};
  }
  if (const auto * rv = std::get_if<RvSpec>(&g)) {
    return {rv->rows, rv->cols};
  }
  if (const auto * cv = std::get_if<CameraView>(&g)) {
    const int s = cv->stride;
    return {(cv->camera.cropped_height() + s - 1) / s, (cv->camera.width + s - 1) / s};
  }
  throw std::invalid_argument("view_extent: geometry not set");
}

inline ViewTag view_tag_of(const ViewGeometry & g)
{
  if (std::holds_alternative<GridSpec>(g)) {
    return ViewTag::kBev;
  }
  if (std::holds_alternative<RvSpec>(g)) {
    return ViewTag::kRv;
  }
  if (std::holds_alternative<CameraView>(g)) {
    return ViewTag::kCamera;
  }
  throw std::invalid_argument("view_tag_of: geometry not set");
}

/// Per-view point projector: the cell a LiDAR point falls into, if any.
inline std::optional<CellIndex> project_point(const ViewGeometry & g, const LidarPoint & p)
{
  if (const auto * grid = std::get_if<GridSpec>(&g)) {
    return bev_cell_of(p.position(), *grid);
  }
  if (const auto * rv = std::get_if<RvSpec>(&g)) {
    return rv_cell_of(p, *rv);
  }
  if (const auto * cv = std::get_if<CameraView>(&g)) {
    const auto px = camera_pixel_of(p.position(), cv->camera);
    if (!px) {
      return std::nullopt;
    }
    return CellIndex{px->row / cv->stride, px->col / cv->stride};
  }
  throw std::invalid_argument("project_point: geometry not set");
}

template <typename T>
struct ProjectionResult
{
  BasicFeatureMap<T> features;
  BasicFeatureMap<T> validity;  // 1 where at least one point contributed, -1 elsewhere
};

/// Point-based feature projection. Each target cell receives the mean of the
/// source features gathered at the points that land in it; points without a
/// source cell contribute to neither sum nor count. Sums run in double over
/// ascending point index and are divided once.
template <typename T>
ProjectionResult<T> project_features(const BasicFeatureMap<T> & source,
                                     std::span<const LidarPoint> points,
                                     const ViewGeometry & target, int declared_channels = -1)
{
  const int channels = source.channels();
  if (declared_channels >= 0 && declared_channels != channels) {
    throw std::invalid_argument("project_features: declared channels differ from the source");
  }
  const CellIndex src_extent = view_extent(source.geometry());
  if (src_extent.row != source.height() || src_extent.col != source.width()) {
    throw std::invalid_argument("project_features: source size does not match its geometry");
  }
  const CellIndex extent = view_extent(target);
  const std::size_t cells = static_cast<std::size_t>(extent.row) * extent.col;
  std::vector<double> sums(cells * channels, 0.0);
  std::vector<int> counts(cells, 0);

  for (const auto & p : points) {
    const auto tgt = project_point(target, p);
    if (!tgt) {
      continue;
    }
    const auto src = project_point(source.geometry(), p);
    if (!src) {
      continue;
    }
    const std::size_t cell = static_cast<std::size_t>(tgt->row) * extent.col + tgt->col;
    const auto f = source.pixel(src->row, src->col);
    double * acc = sums.data() + cell * channels;
    for (int c = 0; c < channels; ++c) {
      acc[c] += static_cast<double>(f[c]);
    }
    ++counts[cell];
  }

  const ViewTag tag = view_tag_of(target);
  ProjectionResult<T> out{BasicFeatureMap<T>(tag, extent.row, extent.col, channels, T{}, target),
                          BasicFeatureMap<T>(tag, extent.row, extent.col, 1, T(-1), target)};
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (counts[cell] == 0) {
      continue;
    }
    const double n = counts[cell];
    T * dst = out.features.data().data() + cell * channels;
    const double * acc = sums.data() + cell * channels;
    for (int c = 0; c < channels; ++c) {
      dst[c] = static_cast<T>(acc[c] / n);
    }
    out.validity.data()[cell] = T(1);
  }
  return out;
}

template <typename T>
ProjectionResult<T> project_features(const BasicFeatureMap<T> & source,
                                     const std::vector<LidarPoint> & points,
                                     const ViewGeometry & target, int declared_channels = -1)
{
  return project_features(source, std::span<const LidarPoint>(points), target, declared_channels);
}

}  // namespace mvfuse

#endif  // MVFUSE_PROJECTION_HPP_
