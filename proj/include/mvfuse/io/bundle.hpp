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

#ifndef MVFUSE_IO_BUNDLE_HPP_
#define MVFUSE_IO_BUNDLE_HPP_

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/io/binary.hpp"
#include "mvfuse/io/netpbm.hpp"
#include "mvfuse/kv.hpp"
#include "mvfuse/presets.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/sensor.hpp"

namespace mvfuse::io
{

inline constexpr const char * kBundleFormat = "mvfuse-bundle";
inline constexpr int kBundleVersion = 1;
inline constexpr int kPointFields = 7;  // x, y, z, r, e, theta, m

/// T sweeps, the map in the newest ego frame, the full camera image and the
/// labels, all sharing one reference timestamp.
struct FrameBundle
{
  std::string preset;
  double reference_time{0.0};
  std::vector<Sweep> sweeps;
  MapGeometry map;
  Image camera;
  LabelSet labels;

  friend bool operator==(const FrameBundle & a, const FrameBundle & b)
  {
    if (a.preset != b.preset || a.reference_time != b.reference_time || !(a.map == b.map) ||
        !(a.camera == b.camera) || !(a.labels == b.labels) || a.sweeps.size() != b.sweeps.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.sweeps.size(); ++i) {
      const Sweep & x = a.sweeps[i];
      const Sweep & y = b.sweeps[i];
      if (x.timestamp != y.timestamp || !(x.ego_pose == y.ego_pose) || x.points != y.points) {
        return false;
      }
    }
    return true;
  }
};

class BundleError : public std::runtime_error
{
public:
  enum class Kind { kMissing, kFormat, kVersion, kTruncated, kChecksum, kPresetMismatch };

  BundleError(Kind kind, const std::string & msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Rounds every stored point field to float32, the on-disk precision.
inline void quantize_points(Sweep & sweep)
{
  for (auto & p : sweep.points) {
    p.x = static_cast<float>(p.x);
    p.y = static_cast<float>(p.y);
    p.z = static_cast<float>(p.z);
    p.range = static_cast<float>(p.range);
    p.intensity = static_cast<float>(p.intensity);
    p.azimuth = static_cast<float>(p.azimuth);
  }
}

inline Bytes encode_points(const Sweep & sweep)
{
  Bytes out;
  out.reserve(sweep.points.size() * kPointFields * 4);
  for (const auto & p : sweep.points) {
    put_f32(out, static_cast<float>(p.x));
    put_f32(out, static_cast<float>(p.y));
    put_f32(out, static_cast<float>(p.z));
    put_f32(out, static_cast<float>(p.range));
    put_f32(out, static_cast<float>(p.intensity));
    put_f32(out, static_cast<float>(p.azimuth));
    put_f32(out, static_cast<float>(p.laser_id));
  }
  return out;
}

inline std::vector<LidarPoint> decode_points(const Bytes & b, std::size_t count)
{
  std::vector<LidarPoint> pts(count);
  const std::uint8_t * d = b.data();
  for (auto & p : pts) {
    p.x = get_f32(d);
    p.y = get_f32(d + 4);
    p.z = get_f32(d + 8);
    p.range = get_f32(d + 12);
    p.intensity = get_f32(d + 16);
    p.azimuth = get_f32(d + 20);
    p.laser_id = static_cast<int>(get_f32(d + 24));
    d += kPointFields * 4;
  }
  return pts;
}

/// Line-delimited labels and map:
///   timestamp <t>
///   horizon <H>
///   actor <id> <class> <cx> <cy> <length> <width> <heading> <height> <n>
///   waypoint <x> <y> <yaw>            (n lines)
///   map <layer> <closed> <k> <x1> <y1> ... <xk> <yk>
inline std::string encode_labels_map(const LabelSet & labels, const MapGeometry & map)
{
  std::string s;
  auto f = [](double v) { return format_double(v); };
  s += "timestamp " + f(labels.timestamp) + "\n";
  s += "horizon " + std::to_string(labels.horizon) + "\n";
  for (const auto & a : labels.actors) {
    s += "actor " + std::to_string(a.id) + " " + std::string(class_name(a.cls)) + " " +
         f(a.box.cx) + " " + f(a.box.cy) + " " + f(a.box.length) + " " + f(a.box.width) + " " +
         f(a.box.heading) + " " + f(a.height) + " " + std::to_string(a.waypoints.size()) + "\n";
    for (const auto & w : a.waypoints) {
      s += "waypoint " + f(w.tx) + " " + f(w.ty) + " " + f(w.yaw) + "\n";
    }
  }
  for (int l = 0; l < kNumMapLayers; ++l) {
    for (const auto & el : map.layers[static_cast<std::size_t>(l)]) {
      s += "map " + std::string(map_layer_name(l)) + " " + (el.closed ? "1" : "0") + " " +
           std::to_string(el.points.size());
      for (const auto & p : el.points) {
        s += " " + f(p.x) + " " + f(p.y);
      }
      s += "\n";
    }
  }
  return s;
}

inline void decode_labels_map(const std::string & text, LabelSet & labels, MapGeometry & map)
{
  auto fail = [](const std::string & why) {
    throw BundleError(BundleError::Kind::kFormat, "labels: " + why);
  };
  std::istringstream in(text);
  std::string line;
  labels = LabelSet{};
  map = MapGeometry{};
  int pending_waypoints = 0;
  auto num = [&](std::istringstream & ls) {
    std::string t;
    if (!(ls >> t)) {
      fail("truncated record");
    }
    return KeyValues::to_double(t, "labels");
  };
  auto integer = [&](std::istringstream & ls) {
    std::string t;
    if (!(ls >> t)) {
      fail("truncated record");
    }
    return KeyValues::to_int(t, "labels");
  };
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (pending_waypoints > 0 && kind != "waypoint") {
      fail("missing waypoint records");
    }
    if (kind == "timestamp") {
      labels.timestamp = num(ls);
    } else if (kind == "horizon") {
      labels.horizon = static_cast<int>(integer(ls));
    } else if (kind == "actor") {
      ActorLabel a;
      a.id = static_cast<int>(integer(ls));
      std::string cls;
      ls >> cls;
      a.cls = parse_class(cls);
      const double cx = num(ls);
      const double cy = num(ls);
      const double len = num(ls);
      const double wid = num(ls);
      const double heading = num(ls);
      a.box = RotatedBox2D{cx, cy, len, wid, heading};
      a.height = num(ls);
      pending_waypoints = static_cast<int>(integer(ls));
      labels.actors.push_back(std::move(a));
    } else if (kind == "waypoint") {
      if (pending_waypoints <= 0) {
        fail("unexpected waypoint record");
      }
      Pose2 p;
      p.tx = num(ls);
      p.ty = num(ls);
      p.yaw = num(ls);
      labels.actors.back().waypoints.push_back(p);
      --pending_waypoints;
    } else if (kind == "map") {
      std::string layer;
      ls >> layer;
      int idx = -1;
      for (int l = 0; l < kNumMapLayers; ++l) {
        if (map_layer_name(l) == layer) {
          idx = l;
        }
      }
      if (idx < 0) {
        fail("unknown map layer '" + layer + "'");
      }
      MapElement el;
      el.closed = integer(ls) != 0;
      const auto k = integer(ls);
      for (long long i = 0; i < k; ++i) {
        const double x = num(ls);
        const double y = num(ls);
        el.points.push_back({x, y});
      }
      map.layers[static_cast<std::size_t>(idx)].push_back(std::move(el));
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  if (pending_waypoints > 0) {
    fail("missing waypoint records");
  }
}

inline std::string sweep_file_name(std::size_t i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sweep_%02zu.bin", i);
  return buf;
}

/// Writes the bundle into `dir` (created if needed) and returns the written
/// file paths, header last.
inline std::vector<std::filesystem::path> write_bundle(const FrameBundle & b,
                                                       const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  KeyValues kv;
  kv.set("format", kBundleFormat);
  kv.set("version", std::to_string(kBundleVersion));
  kv.set("preset", b.preset);
  kv.set("reference_time", format_double(b.reference_time));
  kv.set("point_fields", "x y z r e theta m");
  kv.set("sweeps", std::to_string(b.sweeps.size()));
  for (std::size_t i = 0; i < b.sweeps.size(); ++i) {
    const Sweep & s = b.sweeps[i];
    const std::string p = "sweep." + std::to_string(i) + ".";
    const Bytes data = encode_points(s);
    const std::string name = sweep_file_name(i);
    write_file(dir / name, data);
    written.push_back(dir / name);
    kv.set(p + "timestamp", format_double(s.timestamp));
    kv.set(p + "pose", format_double(s.ego_pose.tx) + " " + format_double(s.ego_pose.ty) + " " +
                         format_double(s.ego_pose.yaw));
    kv.set(p + "points", std::to_string(s.points.size()));
    kv.set(p + "file", name);
    kv.set(p + "fnv1a", hex64(fnv1a(data)));
  }
  const std::string labels = encode_labels_map(b.labels, b.map);
  const Bytes label_bytes(labels.begin(), labels.end());
  write_file(dir / "labels.txt", label_bytes);
  written.push_back(dir / "labels.txt");
  kv.set("labels.file", "labels.txt");
  kv.set("labels.fnv1a", hex64(fnv1a(label_bytes)));
  const Bytes ppm = encode_ppm(b.camera);
  write_file(dir / "camera.ppm", ppm);
  written.push_back(dir / "camera.ppm");
  kv.set("camera.file", "camera.ppm");
  kv.set("camera.fnv1a", hex64(fnv1a(ppm)));
  write_text(dir / "bundle.txt", kv.to_text());
  written.push_back(dir / "bundle.txt");
  return written;
}

/// Reads a bundle; with `expected_preset` set, a bundle of another preset is
/// rejected. Sweep count must match the preset's history length.
inline FrameBundle read_bundle(const std::filesystem::path & dir,
                               const std::optional<std::string> & expected_preset = std::nullopt)
{
  using K = BundleError::Kind;
  if (!std::filesystem::exists(dir / "bundle.txt")) {
    throw BundleError(K::kMissing, "bundle: no bundle.txt in '" + dir.string() + "'");
  }
  KeyValues kv;
  try {
    kv = KeyValues::parse(read_text(dir / "bundle.txt"));
    if (kv.get("format") != kBundleFormat) {
      throw BundleError(K::kFormat, "bundle: not a bundle header");
    }
  } catch (const BundleError &) {
    throw;
  } catch (const std::exception & e) {
    throw BundleError(K::kFormat, std::string("bundle: ") + e.what());
  }
  auto get = [&](const std::string & key) {
    try {
      return kv.get(key);
    } catch (const std::exception & e) {
      throw BundleError(K::kFormat, std::string("bundle: ") + e.what());
    }
  };
  auto get_int = [&](const std::string & key) {
    try {
      return kv.get_int(key);
    } catch (const std::exception & e) {
      throw BundleError(K::kFormat, std::string("bundle: ") + e.what());
    }
  };
  auto get_double = [&](const std::string & key) {
    try {
      return kv.get_double(key);
    } catch (const std::exception & e) {
      throw BundleError(K::kFormat, std::string("bundle: ") + e.what());
    }
  };
  const long long version = get_int("version");
  if (version != kBundleVersion) {
    throw BundleError(K::kVersion, "bundle: version " + std::to_string(version) +
                                     " is not supported (expected " +
                                     std::to_string(kBundleVersion) + ")");
  }
  FrameBundle b;
  b.preset = get("preset");
  if (expected_preset && *expected_preset != b.preset) {
    throw BundleError(K::kPresetMismatch, "bundle: preset '" + b.preset +
                                            "' does not match the requested '" +
                                            *expected_preset + "'");
  }
  Preset preset;
  try {
    preset = preset_by_name(b.preset);
  } catch (const std::exception & e) {
    throw BundleError(K::kFormat, std::string("bundle: ") + e.what());
  }
  b.reference_time = get_double("reference_time");
  const long long n = get_int("sweeps");
  if (n != preset.sweeps) {
    throw BundleError(K::kFormat, "bundle: " + std::to_string(n) + " sweeps, preset '" +
                                    b.preset + "' needs " + std::to_string(preset.sweeps));
  }

  auto load_checked = [&](const std::string & prefix, std::optional<std::size_t> size) {
    const std::filesystem::path path = dir / get(prefix + "file");
    if (!std::filesystem::exists(path)) {
      throw BundleError(K::kMissing, "bundle: missing '" + path.string() + "'");
    }
    Bytes data = read_file(path);
    if (size && data.size() != *size) {
      throw BundleError(K::kTruncated, "bundle: '" + path.filename().string() + "' holds " +
                                         std::to_string(data.size()) + " bytes, expected " +
                                         std::to_string(*size));
    }
    if (hex64(fnv1a(data)) != get(prefix + "fnv1a")) {
      throw BundleError(K::kChecksum, "bundle: checksum mismatch in '" +
                                        path.filename().string() + "'");
    }
    return data;
  };

  for (long long i = 0; i < n; ++i) {
    const std::string p = "sweep." + std::to_string(i) + ".";
    Sweep s;
    s.timestamp = get_double(p + "timestamp");
    std::istringstream pose(get(p + "pose"));
    std::string tx, ty, yaw;
    if (!(pose >> tx >> ty >> yaw)) {
      throw BundleError(K::kFormat, "bundle: bad pose for sweep " + std::to_string(i));
    }
    s.ego_pose = {KeyValues::to_double(tx, p + "pose"), KeyValues::to_double(ty, p + "pose"),
                  KeyValues::to_double(yaw, p + "pose")};
    const auto count = static_cast<std::size_t>(get_int(p + "points"));
    const Bytes data = load_checked(p, count * kPointFields * 4);
    s.points = decode_points(data, count);
    b.sweeps.push_back(std::move(s));
  }
  const Bytes label_bytes = load_checked("labels.", std::nullopt);
  decode_labels_map(std::string(label_bytes.begin(), label_bytes.end()), b.labels, b.map);
  const Bytes ppm = load_checked("camera.", std::nullopt);
  try {
    b.camera = decode_ppm(ppm);
  } catch (const std::exception & e) {
    throw BundleError(K::kTruncated, std::string("bundle: ") + e.what());
  }
  if (b.sweeps.back().timestamp != b.reference_time || b.labels.timestamp != b.reference_time) {
    throw BundleError(K::kFormat, "bundle: components disagree on the reference timestamp");
  }
  return b;
}

}  // namespace mvfuse::io

#endif  // MVFUSE_IO_BUNDLE_HPP_
