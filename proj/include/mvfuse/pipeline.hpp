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

#ifndef MVFUSE_PIPELINE_HPP_
#define MVFUSE_PIPELINE_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mvfuse/eval.hpp"
#include "mvfuse/io/bundle.hpp"
#include "mvfuse/network.hpp"
#include "mvfuse/presets.hpp"
#include "mvfuse/raster.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/timing.hpp"

namespace mvfuse
{

/// Simulates one frame: T sweeps ending at the preset reference time, the map
/// and labels in the newest ego frame, and the full camera image.
inline io::FrameBundle make_bundle(const Preset & preset, std::uint64_t seed)
{
  SceneConfig cfg = preset.scene;
  cfg.seed = seed;
  const double t_ref = preset.reference_time();
  cfg.duration = std::max(cfg.duration, t_ref + preset.horizon * kWaypointPeriod);
  const Scene scene = build_scene(cfg, seed);
  io::FrameBundle b;
  b.preset = preset.name;
  b.reference_time = t_ref;
  for (int i = 0; i < preset.sweeps; ++i) {
    const double t = i == preset.sweeps - 1 ? t_ref : i * preset.sweep_period;
    Sweep s = simulate_sweep(scene, preset.lidar, t);
    io::quantize_points(s);
    b.sweeps.push_back(std::move(s));
  }
  b.map = transform_map(scene.map, se2_inverse(ego_pose_at(scene, t_ref)));
  b.camera = render_camera(scene, preset.camera, t_ref);
  b.labels = scene_labels(scene, t_ref, preset.horizon);
  return b;
}

struct FrameInputs
{
  FeatureMap lidar_bev;
  FeatureMap map_raster;
  FeatureMap rv_image;
  std::optional<FeatureMap> camera;  // cropped, normalised image
  std::vector<LidarPoint> points;    // newest sweep
};

inline FeatureMap camera_input(const io::FrameBundle & b, const Preset & preset)
{
  return image_to_features(crop_image(b.camera, preset.camera), preset.camera);
}

inline FrameInputs prepare_inputs(const io::FrameBundle & b, const Preset & preset,
                                  bool use_camera)
{
  FrameInputs in;
  in.lidar_bev = stack_history_bev(b.sweeps, preset.grid, preset.sweeps);
  in.map_raster = rasterize_map(b.map, preset.grid);
  in.rv_image = build_rv_image(b.sweeps.back(), preset.rv());
  if (use_camera) {
    in.camera = camera_input(b, preset);
  }
  in.points = b.sweeps.back().points;
  return in;
}

inline ForwardTrace run_forward(const MultiViewNet & net, const FrameInputs & in)
{
  return net.forward(in.lidar_bev, in.map_raster, in.rv_image, in.camera ? &*in.camera : nullptr,
                     in.points);
}

inline BasicFeatureMap<double> outputs_to_map(const CellOutputs & o)
{
  BasicFeatureMap<double> m(ViewTag::kBev, o.rows, o.cols, o.channels(), 0.0, o.grid);
  std::copy(o.values.begin(), o.values.end(), m.data().begin());
  return m;
}

/// Inverse of outputs_to_map; the horizon is recovered from the channel count.
inline CellOutputs outputs_from_map(const BasicFeatureMap<double> & m)
{
  const auto * grid = std::get_if<GridSpec>(&m.geometry());
  if (grid == nullptr) {
    throw std::invalid_argument("outputs_from_map: map carries no grid");
  }
  const int per_class = m.channels() / kNumClasses;
  const int horizon = (per_class - 3) / 4 - 1;
  const OutputLayout layout{horizon, kNumClasses};
  if (horizon < 0 || layout.channels() != m.channels() || grid->rows() != m.height() ||
      grid->cols() != m.width()) {
    throw std::invalid_argument("outputs_from_map: map is not a per-cell output grid");
  }
  CellOutputs o(*grid, layout);
  std::copy(m.data().begin(), m.data().end(), o.values.begin());
  return o;
}

/// Ground truth whose box center lies inside the grid extent.
inline std::vector<GtBox> ground_truth_in_grid(const LabelSet & labels, const GridSpec & grid)
{
  std::vector<GtBox> out;
  for (const auto & g : gt_boxes_from_labels(labels)) {
    if (g.box.cx >= grid.x_min && g.box.cx < grid.x_max() && g.box.cy >= grid.y_min &&
        g.box.cy < grid.y_max()) {
      out.push_back(g);
    }
  }
  return out;
}

inline EvalOptions eval_options(const Preset & preset)
{
  EvalOptions opt;
  opt.camera = preset.camera;
  opt.bands = preset.bands;
  return opt;
}

/// Per-stage latency of one frame, from bundle to decoded detections.
inline TimingReport time_frame(const MultiViewNet & net, const io::FrameBundle & b,
                               const Preset & preset, int repetitions, double score_floor)
{
  const bool cam = net.config().use_camera;
  FrameInputs in;
  ForwardTrace tr;
  FeatureMap cam_feat;
  std::vector<Stage> stages;
  stages.push_back({"raster", [&] { in = prepare_inputs(b, preset, cam); }});
  if (cam) {
    stages.push_back({"camera", [&] { cam_feat = net.camera_net_forward(*in.camera); }});
  }
  stages.push_back({"rv_branch", [&] {
                      tr.rv_features = net.rv_branch_forward(in.rv_image, cam ? &cam_feat : nullptr,
                                                             in.points);
                    }});
  stages.push_back({"rv_to_bev", [&] {
                      auto p = project_features(tr.rv_features, in.points, in.lidar_bev.geometry());
                      tr.rv_in_bev = std::move(p.features);
                      tr.rv_bev_validity = std::move(p.validity);
                    }});
  stages.push_back(
    {"bev_branch", [&] { tr.bev_features = net.bev_branch_forward(in.lidar_bev, in.map_raster); }});
  stages.push_back({"fuse_head", [&] {
                      tr.outputs = net.fuse_and_head_forward(tr.bev_features, tr.rv_in_bev,
                                                             tr.rv_bev_validity);
                    }});
  stages.push_back({"decode", [&] { (void)decode_detections(tr.outputs, score_floor); }});
  return time_pipeline(stages, repetitions);
}

}  // namespace mvfuse

#endif  // MVFUSE_PIPELINE_HPP_
