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

#ifndef MVFUSE_PRESETS_HPP_
#define MVFUSE_PRESETS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/eval.hpp"
#include "mvfuse/network.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/sensor.hpp"
#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

/// Sensor, grid and timing configuration of one dataset-like setup.
struct Preset
{
  std::string name;
  GridSpec grid;
  LidarSensorSpec lidar;
  CameraModel camera;
  int sweeps{10};
  double sweep_period{0.1};  // seconds between sweeps
  int horizon{30};
  int output_stride{4};
  std::vector<RangeBand> bands;
  SceneConfig scene;

  /// Timestamp of the newest sweep; the oldest is at 0.
  double reference_time() const { return (sweeps - 1) * sweep_period; }

  RvSpec rv() const { return RvSpec::from_sensor(lidar); }

  NetworkConfig network(bool use_camera = true) const
  {
    NetworkConfig c;
    c.lidar_channels = sweeps * grid.layers();
    c.use_camera = use_camera;
    c.output_stride = output_stride;
    c.layout = OutputLayout{horizon, kNumClasses};
    return c;
  }
};

/// 150 x 100 m grid at 0.16 m, 64 beams, 1920 x 1200 forward camera with a
/// 90 degree field of view, 10 sweeps at 10 Hz.
inline Preset atg4d_preset()
{
  Preset p;
  p.name = "atg4d";
  p.grid = GridSpec::centered(150.0, 100.0, 3.2, 0.16, 0.16, 0.2);
  p.lidar = LidarSensorSpec::beams64();
  p.camera = CameraModel::from_fov(1920, 1200, 90.0, 438, Pose2::identity(), 1.6);
  p.sweeps = 10;
  p.sweep_period = 0.1;
  p.bands = {{0.0, 75.0}, {0.0, 25.0}, {25.0, 50.0}, {50.0, 75.0}};
  p.scene.x_min = -45.0;
  p.scene.x_max = 95.0;
  p.scene.y_min = -45.0;
  p.scene.y_max = 45.0;
  return p;
}

/// 100 x 100 m grid at 0.125 m, 32 beams, 1600 x 900 forward camera with a
/// 70 degree field of view, 10 sweeps at 20 Hz.
inline Preset nuscenes_preset()
{
  Preset p;
  p.name = "nuscenes";
  p.grid = GridSpec::centered(100.0, 100.0, 8.0, 0.125, 0.125, 0.2, 0.5);
  p.lidar = LidarSensorSpec::beams32();
  p.camera = CameraModel::from_fov(1600, 900, 70.0, 0, Pose2::identity(), 1.6);
  p.sweeps = 10;
  p.sweep_period = 0.05;
  p.bands = {{0.0, 50.0}, {0.0, 25.0}, {25.0, 50.0}};
  p.scene.x_min = -45.0;
  p.scene.x_max = 45.0;
  p.scene.y_min = -45.0;
  p.scene.y_max = 45.0;
  return p;
}

/// Small 40 x 40 m setup with a low-resolution sensor rig for quick runs.
inline Preset desk_preset()
{
  Preset p;
  p.name = "desk";
  p.grid = GridSpec::centered(40.0, 40.0, 3.2, 0.16, 0.16, 0.2);
  p.lidar = LidarSensorSpec::uniform(32, 2.0, -25.0, 512);
  p.camera = CameraModel::from_fov(320, 200, 90.0, 40, Pose2::identity(), 1.6);
  p.sweeps = 10;
  p.sweep_period = 0.1;
  p.bands = {{0.0, 25.0}, {0.0, 10.0}, {10.0, 25.0}};
  p.scene.vehicles = 5;
  p.scene.pedestrians = 4;
  p.scene.bicyclists = 2;
  p.scene.x_min = -12.0;
  p.scene.x_max = 25.0;
  p.scene.y_min = -18.0;
  p.scene.y_max = 18.0;
  return p;
}

inline std::vector<std::string> preset_names() { return {"atg4d", "nuscenes", "desk"}; }

inline Preset preset_by_name(std::string_view name)
{
  if (name == "atg4d") {
    return atg4d_preset();
  }
  if (name == "nuscenes") {
    return nuscenes_preset();
  }
  if (name == "desk") {
    return desk_preset();
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

}  // namespace mvfuse

#endif  // MVFUSE_PRESETS_HPP_
