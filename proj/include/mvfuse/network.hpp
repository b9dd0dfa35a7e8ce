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

#ifndef MVFUSE_NETWORK_HPP_
#define MVFUSE_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/cell_outputs.hpp"
#include "mvfuse/conv.hpp"
#include "mvfuse/feature_map.hpp"
#include "mvfuse/projection.hpp"
#include "mvfuse/sensor.hpp"
#include "mvfuse/weights.hpp"

namespace mvfuse
{

/// Channel plan of the multi-view network. Everything except the head layout
/// is a free choice; defaults favour CPU-scale runtimes.
struct NetworkConfig
{
  int lidar_channels{160};  // T * ceil(V / dV)
  int map_channels{7};
  int rv_channels{4};
  bool use_camera{true};
  std::array<int, 6> camera_widths{16, 16, 32, 32, 64, 64};
  int rv_stem_width{32};
  int unet_width{32};  // full-resolution level; the half-width level doubles it
  int rv_out_width{32};
  int bev_width{64};
  std::array<int, 6> backbone_widths{32, 32, 64, 64, 64, 64};
  int output_stride{4};
  OutputLayout layout{};

  int camera_out_width() const { return camera_widths[5]; }
  static constexpr int kCameraStride = 8;

  /// Stem output, plus projected camera features and their validity flag.
  int rv_concat_width() const
  {
    return rv_stem_width + (use_camera ? camera_out_width() + 1 : 0);
  }

  int fused_width() const { return bev_width + rv_out_width + 1; }

  /// Per-layer strides of the BEV backbone; alternate layers halve the grid
  /// until the product reaches `output_stride`.
  std::array<int, 6> backbone_strides() const
  {
    if (output_stride != 1 && output_stride != 2 && output_stride != 4 && output_stride != 8) {
      throw std::invalid_argument("NetworkConfig: output stride must be 1, 2, 4 or 8");
    }
    std::array<int, 6> s{1, 1, 1, 1, 1, 1};
    int remaining = output_stride;
    for (std::size_t i = 0; i < s.size() && remaining > 1; i += 2) {
      s[i] = 2;
      remaining /= 2;
    }
    return s;
  }

  std::vector<NamedLayer> layers() const
  {
    std::vector<NamedLayer> out;
    auto conv = [&](std::string name, int in, int o, int sh = 1, int sw = 1,
                    Activation act = Activation::kRelu) {
      out.push_back({std::move(name), {in, o, 3, 3, sh, sw, act}, false});
    };
    if (use_camera) {
      int in = 3;
      for (int i = 0; i < 6; ++i) {
        const int stride = (i % 2 == 1) ? 2 : 1;
        conv("camera.conv" + std::to_string(i + 1), in, camera_widths[static_cast<std::size_t>(i)],
             stride, stride);
        in = camera_widths[static_cast<std::size_t>(i)];
      }
    }
    const int u = unet_width;
    conv("rv.stem1", rv_channels, rv_stem_width);
    conv("rv.stem2", rv_stem_width, rv_stem_width);
    conv("rv.unet.in", rv_concat_width(), u);
    conv("rv.unet.level1.res_a", u, u);
    conv("rv.unet.level1.res_b", u, u, 1, 1, Activation::kIdentity);
    conv("rv.unet.down", u, 2 * u, 1, 2);
    conv("rv.unet.level2.res_a", 2 * u, 2 * u);
    conv("rv.unet.level2.res_b", 2 * u, 2 * u, 1, 1, Activation::kIdentity);
    out.push_back({"rv.unet.up", {2 * u, u, 1, 4, 1, 2, Activation::kRelu}, true});
    conv("rv.unet.fuse", 2 * u, u);
    conv("rv.unet.out", u, rv_out_width);
    conv("bev.lidar1", lidar_channels, bev_width);
    conv("bev.lidar2", bev_width, bev_width);
    conv("bev.map1", map_channels, bev_width);
    conv("bev.map2", bev_width, bev_width);
    const auto strides = backbone_strides();
    int in = fused_width();
    for (std::size_t i = 0; i < 6; ++i) {
      conv("backbone.conv" + std::to_string(i + 1), in, backbone_widths[i], strides[i], strides[i]);
      in = backbone_widths[i];
    }
    out.push_back({"head", {in, layout.channels(), 1, 1, 1, 1, Activation::kIdentity}, false});
    return out;
  }
};

/// Converts a cropped RGB image into a 3-channel camera-view map in [0, 1].
inline FeatureMap image_to_features(const Image & cropped, const CameraModel & cam)
{
  if (cropped.width != cam.width || cropped.height != cam.cropped_height()) {
    throw std::invalid_argument("image_to_features: image is not the cropped camera size");
  }
  FeatureMap out(ViewTag::kCamera, cropped.height, cropped.width, 3, 0.0F, CameraView{cam, 1});
  for (std::size_t i = 0; i < cropped.rgb.size(); ++i) {
    out.data()[i] = static_cast<float>(cropped.rgb[i]) / 255.0F;
  }
  return out;
}

/// Intermediate maps of one forward pass, kept for inspection and shape checks.
struct ForwardTrace
{
  std::optional<FeatureMap> camera_features;
  std::optional<FeatureMap> camera_in_rv;
  std::optional<FeatureMap> camera_rv_validity;
  FeatureMap rv_features;
  FeatureMap rv_level2;
  FeatureMap rv_in_bev;
  FeatureMap rv_bev_validity;
  FeatureMap bev_features;
  CellOutputs outputs;
};

/// Forward-only multi-view network: camera sub-net, range-view branch with a
/// two-level U-shaped refinement, BEV branch summing LiDAR and map
/// embeddings, and a fused stride-reducing head.
class MultiViewNet
{
public:
  MultiViewNet(NetworkConfig config, NetworkWeights weights)
  : config_(config), weights_(std::move(weights))
  {
    for (const auto & l : config_.layers()) {
      params_.emplace_back(l, weights_.conv(l.name, l.spec));
    }
  }

  static MultiViewNet seeded(const NetworkConfig & config, std::uint64_t seed)
  {
    return {config, generate_weights(config.layers(), seed)};
  }

  const NetworkConfig & config() const { return config_; }
  const NetworkWeights & weights() const { return weights_; }

  /// Six 3x3 convolutions, stride 2 on layers 2, 4 and 6.
  FeatureMap camera_net_forward(const FeatureMap & image) const
  {
    if (!config_.use_camera) {
      throw std::logic_error("camera_net_forward: network built without the camera branch");
    }
    const auto * view = std::get_if<CameraView>(&image.geometry());
    if (view == nullptr || image.channels() != 3) {
      throw std::invalid_argument("camera_net_forward: expected a 3-channel camera-view image");
    }
    FeatureMap x = image;
    for (int i = 1; i <= 6; ++i) {
      x = run("camera.conv" + std::to_string(i), x);
    }
    x.set_geometry(CameraView{view->camera, view->stride * NetworkConfig::kCameraStride});
    return x;
  }

  /// Range-view branch. `camera_features` must be null exactly when the
  /// network was built without the camera branch. `points` are the sweep the
  /// RV image was built from.
  FeatureMap rv_branch_forward(const FeatureMap & rv_image, const FeatureMap * camera_features,
                               std::span<const LidarPoint> points,
                               ForwardTrace * trace = nullptr) const
  {
    const auto * rv = std::get_if<RvSpec>(&rv_image.geometry());
    if (rv == nullptr) {
      throw std::invalid_argument("rv_branch_forward: input is not a range-view map");
    }
    if (rv_image.height() != rv->rows || rv_image.width() != rv->cols) {
      throw std::invalid_argument("rv_branch_forward: RV image size does not match its RvSpec");
    }
    if ((camera_features != nullptr) != config_.use_camera) {
      throw std::invalid_argument("rv_branch_forward: camera input does not match the config");
    }
    FeatureMap stem = run("rv.stem2", run("rv.stem1", rv_image));
    FeatureMap concat;
    if (camera_features != nullptr) {
      auto proj = project_features(*camera_features, points, rv_image.geometry());
      concat = concat_channels<float>({&stem, &proj.features, &proj.validity});
      if (trace != nullptr) {
        trace->camera_in_rv = std::move(proj.features);
        trace->camera_rv_validity = std::move(proj.validity);
      }
    } else {
      concat = std::move(stem);
    }
    FeatureMap level1 = residual("rv.unet.level1", run("rv.unet.in", concat));
    FeatureMap level2 = residual("rv.unet.level2", run("rv.unet.down", level1));
    FeatureMap up = run_transposed("rv.unet.up", level2);
    up = crop_spatial(up, level1.height(), level1.width());
    FeatureMap merged = concat_channels<float>({&up, &level1});
    FeatureMap out = run("rv.unet.out", run("rv.unet.fuse", merged));
    out.set_geometry(rv_image.geometry());
    if (trace != nullptr) {
      trace->rv_level2 = std::move(level2);
    }
    return out;
  }

  /// Separate two-layer embeddings of the LiDAR stack and the map raster,
  /// summed elementwise.
  FeatureMap bev_branch_forward(const FeatureMap & lidar_bev, const FeatureMap & map_raster) const
  {
    if (lidar_bev.height() != map_raster.height() || lidar_bev.width() != map_raster.width()) {
      throw std::invalid_argument("bev_branch_forward: LiDAR and map grids differ");
    }
    FeatureMap lidar = run("bev.lidar2", run("bev.lidar1", lidar_bev));
    const FeatureMap map = run("bev.map2", run("bev.map1", map_raster));
    add_inplace(lidar, map);
    return lidar;
  }

  CellOutputs fuse_and_head_forward(const FeatureMap & bev_features, const FeatureMap & rv_in_bev,
                                    const FeatureMap & rv_validity) const
  {
    if (bev_features.height() != rv_in_bev.height() || bev_features.width() != rv_in_bev.width() ||
        rv_validity.height() != bev_features.height() ||
        rv_validity.width() != bev_features.width()) {
      throw std::invalid_argument("fuse_and_head_forward: inputs are on different grids");
    }
    const auto * grid = std::get_if<GridSpec>(&bev_features.geometry());
    if (grid == nullptr) {
      throw std::invalid_argument("fuse_and_head_forward: BEV features carry no grid");
    }
    FeatureMap x = concat_channels<float>({&bev_features, &rv_in_bev, &rv_validity});
    for (int i = 1; i <= 6; ++i) {
      x = run("backbone.conv" + std::to_string(i), x);
    }
    const FeatureMap raw = run("head", x);
    const GridSpec out_grid = grid->coarsened(config_.output_stride);
    if (raw.height() != out_grid.rows() || raw.width() != out_grid.cols()) {
      throw std::logic_error("fuse_and_head_forward: head size disagrees with the output grid");
    }
    CellOutputs out(out_grid, config_.layout);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = raw.data()[i];
    }
    for (int r = 0; r < out.rows; ++r) {
      for (int c = 0; c < out.cols; ++c) {
        for (int k = 0; k < config_.layout.num_classes; ++k) {
          double & p = out.at(r, c, config_.layout.prob(k));
          p = sigmoid(p);
        }
      }
    }
    return out;
  }

  /// Full pass. `camera_image` is the cropped camera view, ignored (and may
  /// be null) without the camera branch.
  ForwardTrace forward(const FeatureMap & lidar_bev, const FeatureMap & map_raster,
                       const FeatureMap & rv_image, const FeatureMap * camera_image,
                       std::span<const LidarPoint> points) const
  {
    ForwardTrace trace;
    const FeatureMap * cam = nullptr;
    if (config_.use_camera) {
      if (camera_image == nullptr) {
        throw std::invalid_argument("forward: camera image required");
      }
      trace.camera_features = camera_net_forward(*camera_image);
      cam = &*trace.camera_features;
    } else if (camera_image != nullptr) {
      throw std::invalid_argument("forward: camera image given to a LiDAR-only network");
    }
    trace.rv_features = rv_branch_forward(rv_image, cam, points, &trace);
    auto rv_bev = project_features(trace.rv_features, points, lidar_bev.geometry());
    trace.rv_in_bev = std::move(rv_bev.features);
    trace.rv_bev_validity = std::move(rv_bev.validity);
    trace.bev_features = bev_branch_forward(lidar_bev, map_raster);
    trace.outputs = fuse_and_head_forward(trace.bev_features, trace.rv_in_bev, trace.rv_bev_validity);
    return trace;
  }

  FeatureMap run(const std::string & name, const FeatureMap & x) const
  {
    const auto & [layer, params] = find(name);
    return conv2d_forward(x, layer.spec, params);
  }

private:
  const std::pair<NamedLayer, ConvParams<float>> & find(const std::string & name) const
  {
    for (const auto & p : params_) {
      if (p.first.name == name) {
        return p;
      }
    }
    throw std::logic_error("MultiViewNet: no layer '" + name + "'");
  }

  FeatureMap run_transposed(const std::string & name, const FeatureMap & x) const
  {
    const auto & [layer, params] = find(name);
    return conv_transpose2d_forward(x, layer.spec, params);
  }

  /// relu(x + b(a(x))), b without activation.
  FeatureMap residual(const std::string & prefix, const FeatureMap & x) const
  {
    FeatureMap y = run(prefix + ".res_b", run(prefix + ".res_a", x));
    add_inplace(y, x);
    relu_inplace(y);
    return y;
  }

  NetworkConfig config_;
  NetworkWeights weights_;
  std::vector<std::pair<NamedLayer, ConvParams<float>>> params_;
};

/// Closed-form spatial sizes of every stage, for shape checks without running
/// the network.
struct ShapePlan
{
  std::array<int, 3> camera_features{};  // height, width, channels
  std::array<int, 3> rv_features{};
  std::array<int, 3> rv_level2{};
  std::array<int, 3> bev_features{};
  std::array<int, 3> outputs{};
};

inline ShapePlan plan_shapes(const NetworkConfig & cfg, const GridSpec & grid, const RvSpec & rv,
                             const CameraModel & cam)
{
  auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
  ShapePlan s;
  const int cs = NetworkConfig::kCameraStride;
  s.camera_features = {ceil_div(cam.cropped_height(), cs), ceil_div(cam.width, cs),
                       cfg.use_camera ? cfg.camera_out_width() : 0};
  s.rv_features = {rv.rows, rv.cols, cfg.rv_out_width};
  s.rv_level2 = {rv.rows, ceil_div(rv.cols, 2), 2 * cfg.unet_width};
  s.bev_features = {grid.rows(), grid.cols(), cfg.bev_width};
  s.outputs = {ceil_div(grid.rows(), cfg.output_stride), ceil_div(grid.cols(), cfg.output_stride),
               cfg.layout.channels()};
  return s;
}

/// Names of the traced tensors whose shape differs from the plan.
inline std::vector<std::string> shape_mismatches(const ForwardTrace & tr, const ShapePlan & plan)
{
  std::vector<std::string> bad;
  auto check = [&](const char * name, const FeatureMap & m, const std::array<int, 3> & want) {
    if (m.height() != want[0] || m.width() != want[1] || m.channels() != want[2]) {
      bad.emplace_back(name);
    }
  };
  if (plan.camera_features[2] > 0) {
    if (!tr.camera_features) {
      bad.emplace_back("camera_features");
    } else {
      check("camera_features", *tr.camera_features, plan.camera_features);
    }
  }
  check("rv_features", tr.rv_features, plan.rv_features);
  check("rv_level2", tr.rv_level2, plan.rv_level2);
  check("bev_features", tr.bev_features, plan.bev_features);
  if (tr.outputs.rows != plan.outputs[0] || tr.outputs.cols != plan.outputs[1] ||
      tr.outputs.channels() != plan.outputs[2]) {
    bad.emplace_back("outputs");
  }
  return bad;
}

}  // namespace mvfuse

#endif  // MVFUSE_NETWORK_HPP_
