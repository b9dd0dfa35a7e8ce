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

#ifndef MVFUSE_IO_FMAP_HPP_
#define MVFUSE_IO_FMAP_HPP_

#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mvfuse/feature_map.hpp"
#include "mvfuse/io/binary.hpp"
#include "mvfuse/kv.hpp"

namespace mvfuse::io
{

inline constexpr const char * kFmapMagic = "mvfuse-fmap";
inline constexpr int kFmapVersion = 1;

inline std::string geometry_to_line(const ViewGeometry & g)
{
  std::string s;
  auto add = [&](double v) {
    s += ' ';
    s += format_double(v);
  };
  if (const auto * grid = std::get_if<GridSpec>(&g)) {
    s = "grid";
    for (double v : {grid->length, grid->width, grid->height, grid->voxel_length,
                     grid->voxel_width, grid->voxel_height, grid->x_min, grid->y_min,
                     grid->z_min}) {
      add(v);
    }
  } else if (const auto * rv = std::get_if<RvSpec>(&g)) {
    s = "rv " + std::to_string(rv->rows) + " " + std::to_string(rv->cols) + " " +
        std::to_string(rv->elevations.size());
    for (double e : rv->elevations) {
      add(e);
    }
  } else if (const auto * cv = std::get_if<CameraView>(&g)) {
    const CameraModel & c = cv->camera;
    s = "camera " + std::to_string(c.width) + " " + std::to_string(c.height) + " " +
        std::to_string(c.crop_top) + " " + std::to_string(static_cast<int>(c.projection)) + " " +
        std::to_string(cv->stride);
    for (double v : {c.fx, c.fy, c.cx, c.cy, c.mount.tx, c.mount.ty, c.mount.yaw, c.mount_height}) {
      add(v);
    }
  } else {
    s = "none";
  }
  return s;
}

inline ViewGeometry geometry_from_line(const std::string & line)
{
  std::istringstream in(line);
  std::string kind;
  in >> kind;
  auto num = [&]() {
    std::string t;
    if (!(in >> t)) {
      throw std::runtime_error("fmap: truncated geometry");
    }
    return KeyValues::to_double(t, "geometry");
  };
  auto integer = [&]() {
    std::string t;
    if (!(in >> t)) {
      throw std::runtime_error("fmap: truncated geometry");
    }
    return static_cast<int>(KeyValues::to_int(t, "geometry"));
  };
  if (kind == "grid") {
    GridSpec g;
    g.length = num();
    g.width = num();
    g.height = num();
    g.voxel_length = num();
    g.voxel_width = num();
    g.voxel_height = num();
    g.x_min = num();
    g.y_min = num();
    g.z_min = num();
    return g;
  }
  if (kind == "rv") {
    RvSpec rv;
    rv.rows = integer();
    rv.cols = integer();
    const int n = integer();
    for (int i = 0; i < n; ++i) {
      rv.elevations.push_back(num());
    }
    return rv;
  }
  if (kind == "camera") {
    CameraView cv;
    CameraModel & c = cv.camera;
    c.width = integer();
    c.height = integer();
    c.crop_top = integer();
    c.projection = static_cast<CameraProjection>(integer());
    cv.stride = integer();
    c.fx = num();
    c.fy = num();
    c.cx = num();
    c.cy = num();
    c.mount.tx = num();
    c.mount.ty = num();
    c.mount.yaw = num();
    c.mount_height = num();
    return cv;
  }
  if (kind == "none") {
    return std::monostate{};
  }
  throw std::runtime_error("fmap: unknown geometry kind '" + kind + "'");
}

template <typename T>
constexpr const char * dtype_name()
{
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? "f32" : "f64";
}

/// Text header terminated by a `data` line, then little-endian values in
/// row-major, channel-last order.
template <typename T>
Bytes encode_fmap(const BasicFeatureMap<T> & m)
{
  std::string head = std::string(kFmapMagic) + " " + std::to_string(kFmapVersion) + "\n";
  head += "view " + std::string(view_name(m.view())) + "\n";
  head += std::string("dtype ") + dtype_name<T>() + "\n";
  head += "shape " + std::to_string(m.height()) + " " + std::to_string(m.width()) + " " +
          std::to_string(m.channels()) + "\n";
  head += "geometry " + geometry_to_line(m.geometry()) + "\n";
  head += "data\n";
  Bytes out(head.begin(), head.end());
  out.reserve(out.size() + m.size() * sizeof(T));
  for (T v : m.data()) {
    if constexpr (std::is_same_v<T, float>) {
      put_f32(out, v);
    } else {
      put_f64(out, v);
    }
  }
  return out;
}

template <typename T>
BasicFeatureMap<T> decode_fmap(const Bytes & b)
{
  std::size_t pos = 0;
  auto line = [&]() {
    std::string s;
    while (pos < b.size() && b[pos] != '\n') {
      s.push_back(static_cast<char>(b[pos++]));
    }
    if (pos >= b.size()) {
      throw std::runtime_error("fmap: truncated header");
    }
    ++pos;
    return s;
  };
  std::istringstream magic(line());
  std::string m;
  int version = 0;
  magic >> m >> version;
  if (m != kFmapMagic) {
    throw std::runtime_error("fmap: bad magic");
  }
  if (version != kFmapVersion) {
    throw std::runtime_error("fmap: unsupported version " + std::to_string(version));
  }
  auto field = [&](const std::string & key) {
    const std::string s = line();
    if (s.rfind(key + " ", 0) != 0) {
      throw std::runtime_error("fmap: expected '" + key + "'");
    }
    return s.substr(key.size() + 1);
  };
  const std::string view = field("view");
  const std::string dtype = field("dtype");
  if (dtype != dtype_name<T>()) {
    throw std::runtime_error("fmap: stored dtype " + dtype + " does not match the request");
  }
  std::istringstream shape(field("shape"));
  int h = -1, w = -1, c = -1;
  shape >> h >> w >> c;
  if (h < 0 || w < 0 || c < 0) {
    throw std::runtime_error("fmap: bad shape");
  }
  ViewGeometry geometry = geometry_from_line(field("geometry"));
  if (line() != "data") {
    throw std::runtime_error("fmap: missing data marker");
  }
  ViewTag tag = ViewTag::kBev;
  if (view == "rv") {
    tag = ViewTag::kRv;
  } else if (view == "camera") {
    tag = ViewTag::kCamera;
  } else if (view != "bev") {
    throw std::runtime_error("fmap: unknown view '" + view + "'");
  }
  BasicFeatureMap<T> out(tag, h, w, c, T{}, std::move(geometry));
  if (b.size() - pos != out.size() * sizeof(T)) {
    throw std::runtime_error("fmap: payload size mismatch (truncated file?)");
  }
  for (std::size_t i = 0; i < out.size(); ++i, pos += sizeof(T)) {
    if constexpr (std::is_same_v<T, float>) {
      out.data()[i] = get_f32(b.data() + pos);
    } else {
      out.data()[i] = get_f64(b.data() + pos);
    }
  }
  return out;
}

}  // namespace mvfuse::io

#endif  // MVFUSE_IO_FMAP_HPP_
