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

#ifndef MVFUSE_SENSOR_HPP_
#define MVFUSE_SENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mvfuse/geometry.hpp"

namespace mvfuse
{

/// One LiDAR return, expressed in the ego frame of its sweep.
struct LidarPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};
  double range{0.0};      // distance from the sensor origin, meters
  double intensity{0.0};  // [0, 1]
  double azimuth{0.0};    // [0, 2pi)
  int laser_id{0};        // row index, 0 = top beam

  Point3 position() const { return {x, y, z}; }

  friend bool operator==(const LidarPoint &, const LidarPoint &) = default;
};

/// All returns of one 360 degree rotation. `ego_pose` is the world pose of
/// the ego frame the points are expressed in.
struct Sweep
{
  double timestamp{0.0};
  Pose2 ego_pose{};
  std::vector<LidarPoint> points;

  std::vector<Point3> positions() const
  {
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto & p : points) {
      out.push_back(p.position());
    }
    return out;
  }
};

struct IntensityModel
{
  double vehicle{0.8};
  double pedestrian{0.4};
  double bicyclist{0.6};
  double ground{0.2};
};

struct LidarSensorSpec
{
  /// Elevation per beam in radians, strictly decreasing with row index.
  std::vector<double> elevations;
  int azimuth_bins{2048};
  double max_range{120.0};
  double mount_height{1.8};
  bool ground_returns{true};
  IntensityModel intensity{};

  int beams() const { return static_cast<int>(elevations.size()); }
  double azimuth_step() const { return kTwoPi / azimuth_bins; }

  /// Beam origin in the ego frame.
  Point3 origin() const { return {0.0, 0.0, mount_height}; }

  void validate() const
  {
    if (elevations.empty()) {
      throw std::invalid_argument("LidarSensorSpec: no beams");
    }
    for (std::size_t i = 1; i < elevations.size(); ++i) {
      if (!(elevations[i] < elevations[i - 1])) {
        throw std::invalid_argument("LidarSensorSpec: elevations must strictly decrease by row");
      }
    }
    if (azimuth_bins <= 0 || !(max_range > 0.0)) {
      throw std::invalid_argument("LidarSensorSpec: bad azimuth bins or max range");
    }
  }

  /// Beams with elevations evenly spaced from `top_deg` (row 0) down to `bottom_deg`.
  static LidarSensorSpec uniform(int beams, double top_deg, double bottom_deg, int azimuth_bins)
  {
    LidarSensorSpec spec;
    spec.azimuth_bins = azimuth_bins;
    spec.elevations.resize(static_cast<std::size_t>(beams));
    for (int i = 0; i < beams; ++i) {
      const double f = beams == 1 ? 0.0 : static_cast<double>(i) / (beams - 1);
      spec.elevations[static_cast<std::size_t>(i)] =
        (top_deg + f * (bottom_deg - top_deg)) * kPi / 180.0;
    }
    return spec;
  }

  static LidarSensorSpec beams64() { return uniform(64, 2.0, -25.0, 2048); }
  static LidarSensorSpec beams32() { return uniform(32, 10.0, -30.0, 2048); }
};

}  // namespace mvfuse

#endif  // MVFUSE_SENSOR_HPP_
