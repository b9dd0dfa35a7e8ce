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

#ifndef MVFUSE_VIEW_SPECS_HPP_
#define MVFUSE_VIEW_SPECS_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/sensor.hpp"

namespace mvfuse
{

/// Number of cells of size `cell` covering `extent`, rounded up. Quotients
/// within 1e-9 of an integer are snapped first so that e.g. 3.2 / 0.2 is 16.
inline int cell_count(double extent, double cell)
{
  const double q = extent / cell;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) {
    return static_cast<int>(r);
  }
  return static_cast<int>(std::ceil(q));
}

/// Metric BEV voxel grid. Rows run along x, columns along y, layers along z;
/// cell (row, col) covers [x_min + row*dl, x_min + (row+1)*dl) and likewise
/// for y. The covered extent is [x_min, x_min + length).
struct GridSpec
{
  double length{150.0};  // L, along x
  double width{100.0};   // W, along y
  double height{3.2};    // V, along z
  double voxel_length{0.16};
  double voxel_width{0.16};
  double voxel_height{0.2};
  double x_min{-50.0};
  double y_min{-50.0};
  double z_min{-0.1};

  /// Grid with `forward_fraction` of the length ahead of the SDV and y centered.
  static GridSpec centered(double length, double width, double height, double dl, double dw,
                           double dv, double forward_fraction = 2.0 / 3.0, double z_min = -0.1)
  {
    GridSpec g{length, width, height, dl, dw, dv, -length * (1.0 - forward_fraction),
               -0.5 * width, z_min};
    g.validate();
    return g;
  }

  int rows() const { return cell_count(length, voxel_length); }
  int cols() const { return cell_count(width, voxel_width); }
  int layers() const { return cell_count(height, voxel_height); }

  double x_max() const { return x_min + length; }
  double y_max() const { return y_min + width; }
  double z_max() const { return z_min + height; }

  Point2 cell_center(int row, int col) const
  {
    return {x_min + (row + 0.5) * voxel_length, y_min + (col + 0.5) * voxel_width};
  }

  /// Same extent with cells `stride` times larger in x and y.
  GridSpec coarsened(int stride) const
  {
    GridSpec g = *this;
    g.voxel_length *= stride;
    g.voxel_width *= stride;
    return g;
  }

  void validate() const
  {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0) || !(voxel_length > 0.0) ||
        !(voxel_width > 0.0) || !(voxel_height > 0.0)) {
      throw std::invalid_argument("GridSpec: extents and voxel sizes must be positive");
    }
  }

  friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

/// Range-view raster: one row per laser, `cols` azimuth bins over 360 degrees.
struct RvSpec
{
  int rows{64};
  int cols{2048};
  std::vector<double> elevations;

  static RvSpec from_sensor(const LidarSensorSpec & sensor)
  {
    return {sensor.beams(), sensor.azimuth_bins, sensor.elevations};
  }

  friend bool operator==(const RvSpec &, const RvSpec &) = default;
};

/// Camera geometry of a (possibly downsampled) camera-view feature map.
struct CameraView
{
  CameraModel camera{};
  int stride{1};
};

enum class ViewTag { kBev, kRv, kCamera };

inline std::string_view view_name(ViewTag v)
{
  switch (v) {
    case ViewTag::kBev: return "bev";
    case ViewTag::kRv: return "rv";
    case ViewTag::kCamera: return "camera";
  }
  return "unknown";
}

using ViewGeometry = std::variant<std::monostate, GridSpec, RvSpec, CameraView>;

struct CellIndex
{
  int row{0};
  int col{0};

  friend bool operator==(const CellIndex &, const CellIndex &) = default;
};

}  // namespace mvfuse

#endif  // MVFUSE_VIEW_SPECS_HPP_
