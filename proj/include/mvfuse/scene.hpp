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

#ifndef MVFUSE_SCENE_HPP_
#define MVFUSE_SCENE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/kv.hpp"
#include "mvfuse/rng.hpp"
#include "mvfuse/sensor.hpp"

namespace mvfuse
{

enum class ActorClass : int { kVehicle = 0, kPedestrian = 1, kBicyclist = 2 };
inline constexpr int kNumClasses = 3;
inline constexpr std::array<ActorClass, kNumClasses> kAllClasses{
  ActorClass::kVehicle, ActorClass::kPedestrian, ActorClass::kBicyclist};

inline std::string_view class_name(ActorClass c)
{
  switch (c) {
    case ActorClass::kVehicle: return "vehicle";
    case ActorClass::kPedestrian: return "pedestrian";
    case ActorClass::kBicyclist: return "bicyclist";
  }
  return "unknown";
}

inline ActorClass parse_class(std::string_view s)
{
  for (ActorClass c : kAllClasses) {
    if (class_name(c) == s) {
      return c;
    }
  }
  throw std::runtime_error("unknown actor class '" + std::string(s) + "'");
}

inline int class_index(ActorClass c) { return static_cast<int>(c); }

struct SizeRange
{
  double length_min, length_max;
  double width_min, width_max;
  double height_min, height_max;
};

inline SizeRange class_size_range(ActorClass c)
{
  switch (c) {
    case ActorClass::kVehicle: return {3.5, 6.0, 1.6, 2.2, 1.4, 2.2};
    case ActorClass::kPedestrian: return {0.4, 1.0, 0.4, 0.8, 1.5, 1.9};
    case ActorClass::kBicyclist: return {1.5, 2.2, 0.5, 0.9, 1.5, 1.9};
  }
  throw std::invalid_argument("class_size_range: bad class");
}

/// Constant speed and turn rate over `duration` seconds.
struct MotionSegment
{
  double duration{0.0};
  double speed{0.0};
  double yaw_rate{0.0};
};

struct MotionProfile
{
  Pose2 start{};
  std::vector<MotionSegment> segments;

  double duration() const
  {
    double d = 0.0;
    for (const auto & s : segments) {
      d += s.duration;
    }
    return d;
  }
};

/// Closed-form integration of a unicycle along one segment.
inline Pose2 advance(const Pose2 & p, double speed, double yaw_rate, double dt)
{
  if (std::abs(yaw_rate) < 1e-12) {
    return {p.tx + speed * dt * std::cos(p.yaw), p.ty + speed * dt * std::sin(p.yaw), p.yaw};
  }
  const double r = speed / yaw_rate;
  const double yaw1 = p.yaw + yaw_rate * dt;
  return {p.tx + r * (std::sin(yaw1) - std::sin(p.yaw)),
          p.ty + r * (std::cos(p.yaw) - std::cos(yaw1)), normalize_angle(yaw1)};
}

inline Pose2 pose_at(const MotionProfile & m, double t)
{
  const double total = m.duration();
  if (!(t >= 0.0) || t > total + 1e-9) {
    throw std::out_of_range("pose_at: time " + std::to_string(t) + " outside [0, " +
                            std::to_string(total) + "]");
  }
  Pose2 p = m.start;
  double remaining = t;
  for (const auto & seg : m.segments) {
    const double dt = std::min(remaining, seg.duration);
    if (dt <= 0.0) {
      break;
    }
    p = advance(p, seg.speed, seg.yaw_rate, dt);
    remaining -= dt;
  }
  return p;
}

struct Actor
{
  int id{0};
  ActorClass cls{ActorClass::kVehicle};
  RotatedBox2D box{};  // world frame, t = 0
  double height{1.5};
  MotionProfile motion{};

  /// Validates class-dependent size ranges.
  static Actor make(int id, ActorClass cls, const RotatedBox2D & box, double height,
                    std::vector<MotionSegment> segments)
  {
    const SizeRange r = class_size_range(cls);
    if (box.length < r.length_min || box.length > r.length_max || box.width < r.width_min ||
        box.width > r.width_max || height < r.height_min || height > r.height_max) {
      throw std::invalid_argument("Actor: size outside the plausible range for " +
                                  std::string(class_name(cls)));
    }
    Actor a;
    a.id = id;
    a.cls = cls;
    a.box = RotatedBox2D::make(box.cx, box.cy, box.length, box.width, box.heading);
    a.height = height;
    a.motion.start = a.box.pose();
    a.motion.segments = std::move(segments);
    return a;
  }
};

inline Pose2 actor_pose_at(const Actor & actor, double t) { return pose_at(actor.motion, t); }

inline RotatedBox2D actor_box_at(const Actor & actor, double t)
{
  const Pose2 p = actor_pose_at(actor, t);
  return {p.tx, p.ty, actor.box.length, actor.box.width, p.yaw};
}

enum class MapLayer : int {
  kDrivingPaths = 0,
  kCrosswalks,
  kLaneBoundaries,
  kRoadBoundaries,
  kIntersections,
  kDriveways,
  kParkingLots,
};
inline constexpr int kNumMapLayers = 7;

inline std::string_view map_layer_name(int layer)
{
  static constexpr std::array<std::string_view, kNumMapLayers> names{
    "driving_paths", "crosswalks",    "lane_boundaries", "road_boundaries",
    "intersections", "driveways", "parking_lots"};
  return names.at(static_cast<std::size_t>(layer));
}

/// Closed elements are simple polygons; open ones are polylines.
struct MapElement
{
  std::vector<Point2> points;
  bool closed{true};

  friend bool operator==(const MapElement &, const MapElement &) = default;
};

struct MapGeometry
{
  std::array<std::vector<MapElement>, kNumMapLayers> layers{};

  std::vector<MapElement> & layer(MapLayer l) { return layers[static_cast<std::size_t>(l)]; }
  const std::vector<MapElement> & layer(MapLayer l) const
  {
    return layers[static_cast<std::size_t>(l)];
  }

  friend bool operator==(const MapGeometry &, const MapGeometry &) = default;
};

inline MapGeometry transform_map(const MapGeometry & map, const Pose2 & pose)
{
  MapGeometry out = map;
  for (auto & layer : out.layers) {
    for (auto & el : layer) {
      for (auto & p : el.points) {
        p = pose.apply(p);
      }
    }
  }
  return out;
}

struct SceneConfig
{
  int vehicles{12};
  int pedestrians{8};
  int bicyclists{4};
  /// Actor placement extent in the world frame at t = 0 (ego starts at the origin).
  double x_min{-45.0};
  double x_max{95.0};
  double y_min{-45.0};
  double y_max{45.0};
  double duration{4.0};
  double ego_speed_max{10.0};
  std::uint64_t seed{0};
  int max_attempts{500};

  static SceneConfig parse(std::string_view text)
  {
    const KeyValues kv = KeyValues::parse(text);
    SceneConfig c;
    c.vehicles = static_cast<int>(kv.get_int("vehicles", c.vehicles));
    c.pedestrians = static_cast<int>(kv.get_int("pedestrians", c.pedestrians));
    c.bicyclists = static_cast<int>(kv.get_int("bicyclists", c.bicyclists));
    c.x_min = kv.get_double("x_min", c.x_min);
    c.x_max = kv.get_double("x_max", c.x_max);
    c.y_min = kv.get_double("y_min", c.y_min);
    c.y_max = kv.get_double("y_max", c.y_max);
    c.duration = kv.get_double("duration", c.duration);
    c.ego_speed_max = kv.get_double("ego_speed_max", c.ego_speed_max);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
    c.max_attempts = static_cast<int>(kv.get_int("max_attempts", c.max_attempts));
    for (const auto & k : kv.keys()) {
      static constexpr std::array<std::string_view, 11> known{
        "vehicles", "pedestrians", "bicyclists", "x_min", "x_max",       "y_min",
        "y_max",    "duration",    "ego_speed_max", "seed", "max_attempts"};
      if (std::find(known.begin(), known.end(), k) == known.end()) {
        throw std::runtime_error("scene config: unknown key '" + k + "'");
      }
    }
    return c;
  }

  std::string to_text() const
  {
    std::string s;
    s += "vehicles = " + std::to_string(vehicles) + "\n";
    s += "pedestrians = " + std::to_string(pedestrians) + "\n";
    s += "bicyclists = " + std::to_string(bicyclists) + "\n";
    s += "x_min = " + format_double(x_min) + "\n";
    s += "x_max = " + format_double(x_max) + "\n";
    s += "y_min = " + format_double(y_min) + "\n";
    s += "y_max = " + format_double(y_max) + "\n";
    s += "duration = " + format_double(duration) + "\n";
    s += "ego_speed_max = " + format_double(ego_speed_max) + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    s += "max_attempts = " + std::to_string(max_attempts) + "\n";
    return s;
  }
};

struct Scene
{
  std::vector<Actor> actors;
  MapGeometry map{};
  MotionProfile ego_motion{};
  double duration{4.0};
  std::uint64_t seed{0};
};

class SceneTooDense : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail
{

inline MapElement rect_polygon(double x0, double y0, double x1, double y1)
{
  return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, true};
}

inline MapElement polyline(Point2 a, Point2 b) { return {{a, b}, false}; }

/// Straight four-lane road along world x with one cross street, crosswalks,
/// driveways and a parking lot; positions vary with the seed.
inline MapGeometry generate_map(const SceneConfig & cfg, Rng & rng)
{
  MapGeometry m;
  const double x0 = cfg.x_min - 20.0;
  const double x1 = cfg.x_max + 20.0;
  const double y0 = cfg.y_min - 20.0;
  const double y1 = cfg.y_max + 20.0;
  constexpr double half_road = 7.0;
  const double xi = rng.uniform(20.0, 60.0);  // cross street center

  for (double y : {-5.25, -1.75, 1.75, 5.25}) {
    m.layer(MapLayer::kDrivingPaths).push_back(polyline({x0, y}, {x1, y}));
  }
  for (double x : {xi - 1.75, xi + 1.75}) {
    m.layer(MapLayer::kDrivingPaths).push_back(polyline({x, y0}, {x, y1}));
  }
  for (double y : {-3.5, 0.0, 3.5}) {
    m.layer(MapLayer::kLaneBoundaries).push_back(polyline({x0, y}, {x1, y}));
  }
  m.layer(MapLayer::kLaneBoundaries).push_back(polyline({xi, y0}, {xi, -half_road}));
  m.layer(MapLayer::kLaneBoundaries).push_back(polyline({xi, half_road}, {xi, y1}));
  for (double y : {-half_road, half_road}) {
    m.layer(MapLayer::kRoadBoundaries).push_back(polyline({x0, y}, {xi - half_road, y}));
    m.layer(MapLayer::kRoadBoundaries).push_back(polyline({xi + half_road, y}, {x1, y}));
  }
  for (double x : {xi - half_road, xi + half_road}) {
    m.layer(MapLayer::kRoadBoundaries).push_back(polyline({x, y0}, {x, -half_road}));
    m.layer(MapLayer::kRoadBoundaries).push_back(polyline({x, half_road}, {x, y1}));
  }
  m.layer(MapLayer::kIntersections)
    .push_back(rect_polygon(xi - half_road, -half_road, xi + half_road, half_road));
  m.layer(MapLayer::kCrosswalks)
    .push_back(rect_polygon(xi - half_road - 4.0, -half_road, xi - half_road, half_road));
  m.layer(MapLayer::kCrosswalks)
    .push_back(rect_polygon(xi + half_road, -half_road, xi + half_road + 4.0, half_road));

  const int driveways = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < driveways; ++i) {
    const double dx = rng.uniform(cfg.x_min, cfg.x_max);
    const bool left = rng.bernoulli(0.5);
    const double ya = left ? half_road : -half_road - 5.0;
    m.layer(MapLayer::kDriveways).push_back(rect_polygon(dx - 2.0, ya, dx + 2.0, ya + 5.0));
  }
  const double px = rng.uniform(cfg.x_min, cfg.x_max - 30.0);
  const double py = rng.uniform(15.0, 25.0);
  m.layer(MapLayer::kParkingLots).push_back(rect_polygon(px, py, px + 30.0, py + 20.0));
  return m;
}

struct ClassMotion
{
  double speed_max;
  double yaw_rate_max;
  double static_fraction;
};

inline ClassMotion class_motion(ActorClass c)
{
  switch (c) {
    case ActorClass::kVehicle: return {12.0, 0.15, 0.2};
    case ActorClass::kPedestrian: return {1.8, 0.3, 0.3};
    case ActorClass::kBicyclist: return {6.0, 0.2, 0.1};
  }
  return {0.0, 0.0, 1.0};
}

inline std::vector<MotionSegment> random_motion(ActorClass c, double duration, Rng & rng)
{
  const ClassMotion cm = class_motion(c);
  if (rng.bernoulli(cm.static_fraction)) {
    return {{duration, 0.0, 0.0}};
  }
  const double split = rng.uniform(0.2, 0.8) * duration;
  const double v0 = rng.uniform(0.2, 1.0) * cm.speed_max;
  const double v1 = v0 * rng.uniform(0.8, 1.2);
  return {{split, v0, rng.uniform(-cm.yaw_rate_max, cm.yaw_rate_max)},
          {duration - split, v1, rng.uniform(-cm.yaw_rate_max, cm.yaw_rate_max)}};
}

inline RotatedBox2D inflate(const RotatedBox2D & b, double margin)
{
  return {b.cx, b.cy, b.length + 2.0 * margin, b.width + 2.0 * margin, b.heading};
}

}  // namespace detail

/// Deterministic scene for a (config, seed) pair. Actors are placed by
/// rejection sampling so that no two footprints (inflated by 0.3 m) overlap at
/// t = 0 and none overlaps the ego footprint.
inline Scene build_scene(const SceneConfig & cfg, std::uint64_t seed)
{
  if (cfg.vehicles < 0 || cfg.pedestrians < 0 || cfg.bicyclists < 0) {
    throw std::invalid_argument("build_scene: negative actor count");
  }
  if (!(cfg.x_max > cfg.x_min) || !(cfg.y_max > cfg.y_min) || !(cfg.duration > 0.0)) {
    throw std::invalid_argument("build_scene: empty extent or duration");
  }
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x5DEECE66DULL);
  Scene scene;
  scene.seed = seed;
  scene.duration = cfg.duration;
  scene.map = detail::generate_map(cfg, rng);
  scene.ego_motion.start = Pose2::identity();
  scene.ego_motion.segments = {
    {cfg.duration, rng.uniform(0.0, cfg.ego_speed_max), rng.uniform(-0.05, 0.05)}};

  const RotatedBox2D ego_footprint = detail::inflate({0.0, 0.0, 4.8, 2.0, 0.0}, 2.0);
  std::vector<RotatedBox2D> occupied{ego_footprint};
  std::vector<std::pair<ActorClass, int>> plan{{ActorClass::kVehicle, cfg.vehicles},
                                               {ActorClass::kPedestrian, cfg.pedestrians},
                                               {ActorClass::kBicyclist, cfg.bicyclists}};
  int next_id = 0;
  for (const auto & [cls, count] : plan) {
    const SizeRange sr = class_size_range(cls);
    for (int i = 0; i < count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
        const double l = rng.uniform(sr.length_min, sr.length_max);
        const double w = std::min(rng.uniform(sr.width_min, sr.width_max), l);
        const double h = rng.uniform(sr.height_min, sr.height_max);
        double x = rng.uniform(cfg.x_min, cfg.x_max);
        double y = rng.uniform(cfg.y_min, cfg.y_max);
        double heading = rng.uniform(-kPi, kPi);
        if (cls == ActorClass::kVehicle && rng.bernoulli(0.6)) {
          static constexpr std::array<double, 4> lanes{-5.25, -1.75, 1.75, 5.25};
          y = lanes[rng.below(4)];
          heading = y > 0.0 ? 0.0 : kPi;
          heading += rng.uniform(-0.05, 0.05);
          if (y < cfg.y_min || y > cfg.y_max) {
            continue;
          }
        }
        const RotatedBox2D box = RotatedBox2D::make(x, y, l, w, heading);
        const RotatedBox2D padded = detail::inflate(box, 0.3);
        const bool clear = std::none_of(occupied.begin(), occupied.end(), [&](const auto & o) {
          return box_intersection_area(padded, o) > 0.0;
        });
        if (!clear) {
          continue;
        }
        auto motion = detail::random_motion(cls, cfg.duration, rng);
        scene.actors.push_back(Actor::make(next_id++, cls, box, h, std::move(motion)));
        occupied.push_back(padded);
        placed = true;
      }
      if (!placed) {
        throw SceneTooDense("build_scene: scene too dense, could not place " +
                            std::string(class_name(cls)) + " #" + std::to_string(i));
      }
    }
  }
  return scene;
}

inline Pose2 ego_pose_at(const Scene & scene, double t) { return pose_at(scene.ego_motion, t); }

/// Actor footprint extruded from the ground to `height`.
struct SolidBox
{
  RotatedBox2D box{};
  double height{1.0};
  ActorClass cls{ActorClass::kVehicle};
  int actor_index{-1};
};

/// Actor solids at time t, expressed in the ego frame at time t.
inline std::vector<SolidBox> scene_solids_in_ego(const Scene & scene, double t)
{
  const Pose2 to_ego = se2_inverse(ego_pose_at(scene, t));
  std::vector<SolidBox> out;
  out.reserve(scene.actors.size());
  for (std::size_t i = 0; i < scene.actors.size(); ++i) {
    const auto & a = scene.actors[i];
    const Pose2 p = se2_compose(to_ego, actor_pose_at(a, t));
    out.push_back({{p.tx, p.ty, a.box.length, a.box.width, p.yaw}, a.height, a.cls,
                   static_cast<int>(i)});
  }
  return out;
}

struct RayHit
{
  double distance{0.0};
  Point3 normal{};
  int solid{-1};  // index into the solid list, -1 for the ground plane
};

/// Slab test against one solid. Rays starting inside the solid do not hit it.
inline std::optional<RayHit> intersect_solid(Point3 origin, Point3 dir, const SolidBox & s)
{
  const double c = std::cos(s.box.heading);
  const double sn = std::sin(s.box.heading);
  const double ox = c * (origin.x - s.box.cx) + sn * (origin.y - s.box.cy);
  const double oy = -sn * (origin.x - s.box.cx) + c * (origin.y - s.box.cy);
  const double dx = c * dir.x + sn * dir.y;
  const double dy = -sn * dir.x + c * dir.y;
  const std::array<double, 3> o{ox, oy, origin.z};
  const std::array<double, 3> d{dx, dy, dir.z};
  const std::array<double, 3> lo{-0.5 * s.box.length, -0.5 * s.box.width, 0.0};
  const std::array<double, 3> hi{0.5 * s.box.length, 0.5 * s.box.width, s.height};

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < lo[k] || o[k] > hi[k]) {
        return std::nullopt;
      }
      continue;
    }
    double t0 = (lo[k] - o[k]) / d[k];
    double t1 = (hi[k] - o[k]) / d[k];
    double entering_sign = -1.0;  // entering through the low face
    if (t0 > t1) {
      std::swap(t0, t1);
      entering_sign = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = k;
      sign = entering_sign;
    }
    t_far = std::min(t_far, t1);
  }
  if (axis < 0 || t_near > t_far || !(t_near > 1e-9)) {
    return std::nullopt;
  }
  Point3 n{};
  if (axis == 2) {
    n = {0.0, 0.0, sign};
  } else {
    const double lx = axis == 0 ? sign : 0.0;
    const double ly = axis == 1 ? sign : 0.0;
    n = {c * lx - sn * ly, sn * lx + c * ly, 0.0};
  }
  return RayHit{t_near, n, -1};
}

/// Nearest hit among the candidate solids and, optionally, the z = 0 plane.
inline std::optional<RayHit> cast_ray(Point3 origin, Point3 dir, std::span<const SolidBox> solids,
                                      std::span<const int> candidates, bool ground,
                                      double max_distance)
{
  std::optional<RayHit> best;
  if (ground && dir.z < 0.0 && origin.z > 0.0) {
    const double t = -origin.z / dir.z;
    if (t <= max_distance) {
      best = RayHit{t, {0.0, 0.0, 1.0}, -1};
    }
  }
  for (int idx : candidates) {
    const auto hit = intersect_solid(origin, dir, solids[static_cast<std::size_t>(idx)]);
    if (hit && hit->distance <= max_distance && (!best || hit->distance < best->distance)) {
      best = RayHit{hit->distance, hit->normal, idx};
    }
  }
  return best;
}

inline double class_reflectivity(const IntensityModel & m, ActorClass c)
{
  switch (c) {
    case ActorClass::kVehicle: return m.vehicle;
    case ActorClass::kPedestrian: return m.pedestrian;
    case ActorClass::kBicyclist: return m.bicyclist;
  }
  return 0.0;
}

namespace detail
{

/// Azimuth interval [lo, hi] (hi may exceed 2pi) seen from the ego z axis, or
/// nothing when the footprint contains the axis.
inline std::optional<std::array<double, 2>> azimuth_interval(const RotatedBox2D & b)
{
  if (point_in_box({0.0, 0.0}, b)) {
    return std::nullopt;
  }
  const double center = std::atan2(b.cy, b.cx);
  double lo = 0.0;
  double hi = 0.0;
  for (const auto & p : box_corners(b)) {
    const double d = normalize_angle(std::atan2(p.y, p.x) - center);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  double a0 = center + lo;
  while (a0 < 0.0) {
    a0 += kTwoPi;
  }
  while (a0 >= kTwoPi) {
    a0 -= kTwoPi;
  }
  return std::array<double, 2>{a0, a0 + (hi - lo)};
}

}  // namespace detail

/// Ray-casts one idealized, instantaneous sweep. Points are in the ego frame
/// at time t and ordered by beam row, then azimuth bin.
inline Sweep simulate_sweep(const Scene & scene, const LidarSensorSpec & spec, double t)
{
  spec.validate();
  Sweep sweep;
  sweep.timestamp = t;
  sweep.ego_pose = ego_pose_at(scene, t);
  const auto solids = scene_solids_in_ego(scene, t);
  const int bins = spec.azimuth_bins;

  // Candidate solids per azimuth bin; solids around the sensor go everywhere.
  std::vector<std::vector<int>> per_bin(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < solids.size(); ++i) {
    const auto iv = detail::azimuth_interval(solids[i].box);
    if (!iv) {
      for (auto & v : per_bin) {
        v.push_back(static_cast<int>(i));
      }
      continue;
    }
    const double step = spec.azimuth_step();
    const long long k0 = static_cast<long long>(std::floor((*iv)[0] / step)) - 1;
    const long long k1 = static_cast<long long>(std::ceil((*iv)[1] / step)) + 1;
    for (long long k = k0; k <= k1; ++k) {
      const long long kk = ((k % bins) + bins) % bins;
      auto & v = per_bin[static_cast<std::size_t>(kk)];
      if (v.empty() || v.back() != static_cast<int>(i)) {
        v.push_back(static_cast<int>(i));
      }
    }
  }
  for (auto & v : per_bin) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  const Point3 origin = spec.origin();
  for (int row = 0; row < spec.beams(); ++row) {
    const double el = spec.elevations[static_cast<std::size_t>(row)];
    const double ce = std::cos(el);
    const double se = std::sin(el);
    for (int k = 0; k < bins; ++k) {
      const double az = k * kTwoPi / bins;
      const Point3 dir{ce * std::cos(az), ce * std::sin(az), se};
      const auto hit = cast_ray(origin, dir, solids, per_bin[static_cast<std::size_t>(k)],
                                spec.ground_returns, spec.max_range);
      if (!hit) {
        continue;
      }
      const double base = hit->solid < 0
                            ? spec.intensity.ground
                            : class_reflectivity(spec.intensity,
                                                 solids[static_cast<std::size_t>(hit->solid)].cls);
      const double cos_inc =
        std::abs(dir.x * hit->normal.x + dir.y * hit->normal.y + dir.z * hit->normal.z);
      LidarPoint p;
      p.x = origin.x + hit->distance * dir.x;
      p.y = origin.y + hit->distance * dir.y;
      p.z = origin.z + hit->distance * dir.z;
      p.range = hit->distance;
      p.intensity = std::clamp(base * cos_inc, 0.0, 1.0);
      p.azimuth = az;
      p.laser_id = row;
      sweep.points.push_back(p);
    }
  }
  return sweep;
}

inline constexpr std::array<std::uint8_t, 3> kSkyColor{135, 206, 235};

inline std::array<double, 3> class_color(ActorClass c)
{
  switch (c) {
    case ActorClass::kVehicle: return {210.0, 60.0, 50.0};
    case ActorClass::kPedestrian: return {60.0, 190.0, 70.0};
    case ActorClass::kBicyclist: return {70.0, 80.0, 220.0};
  }
  return {0.0, 0.0, 0.0};
}

/// Nearest-hit depth-shaded render of the full (uncropped) sensor image.
/// Ground is gray, actors carry per-class hues, misses are sky.
inline Image render_camera(const Scene & scene, const CameraModel & cam, double t)
{
  cam.validate();
  const auto solids = scene_solids_in_ego(scene, t);
  Image img(cam.width, cam.height, kSkyColor);
  const std::size_t npx = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<double> depth(npx, std::numeric_limits<double>::infinity());
  std::vector<int> who(npx, -2);
  std::vector<double> shade(npx, 0.0);

  const double c = std::cos(cam.mount.yaw);
  const double s = std::sin(cam.mount.yaw);
  const Point3 origin{cam.mount.tx, cam.mount.ty, cam.mount_height};
  auto ray_dir = [&](int row, int col) {
    const double fwd = 1.0;
    const double left = -((col + 0.5) - cam.cx) / cam.fx;
    const double up = -((row + 0.5) - cam.cy) / cam.fy;
    const double n = std::sqrt(fwd * fwd + left * left + up * up);
    return Point3{(c * fwd - s * left) / n, (s * fwd + c * left) / n, up / n};
  };
  constexpr double kShadeRange = 150.0;

  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const Point3 d = ray_dir(row, col);
      if (d.z < 0.0) {
        const double tg = -origin.z / d.z;
        const std::size_t i = static_cast<std::size_t>(row) * cam.width + col;
        depth[i] = tg;
        who[i] = -1;
        shade[i] = std::abs(d.z);
      }
    }
  }

  for (std::size_t si = 0; si < solids.size(); ++si) {
    const auto & sb = solids[si];
    // Pixel bounding rectangle from the eight projected corners.
    int r0 = 0;
    int r1 = cam.height - 1;
    int c0 = 0;
    int c1 = cam.width - 1;
    bool all_front = true;
    bool any_front = false;
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (const auto & corner : box_corners(sb.box)) {
      for (double z : {0.0, sb.height}) {
        const Point2 local = se2_inverse(cam.mount).apply(corner);
        if (local.x <= 1e-3) {
          all_front = false;
          continue;
        }
        any_front = true;
        const double u = cam.cx - cam.fx * local.y / local.x;
        const double v = cam.cy - cam.fy * (z - cam.mount_height) / local.x;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
    if (!any_front) {
      continue;
    }
    if (all_front) {
      c0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
      c1 = std::min(cam.width - 1, static_cast<int>(std::ceil(umax)) + 1);
      r0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
      r1 = std::min(cam.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
    }
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Point3 d = ray_dir(row, col);
        const auto hit = intersect_solid(origin, d, sb);
        const std::size_t i = static_cast<std::size_t>(row) * cam.width + col;
        if (hit && hit->distance < depth[i]) {
          depth[i] = hit->distance;
          who[i] = static_cast<int>(si);
          shade[i] = std::abs(d.x * hit->normal.x + d.y * hit->normal.y + d.z * hit->normal.z);
        }
      }
    }
  }

  for (std::size_t i = 0; i < npx; ++i) {
    if (who[i] == -2) {
      continue;
    }
    const double fade = 1.0 - 0.7 * std::min(depth[i] / kShadeRange, 1.0);
    const double k = (0.35 + 0.65 * shade[i]) * fade;
    std::array<double, 3> base{110.0, 110.0, 110.0};
    if (who[i] >= 0) {
      base = class_color(solids[static_cast<std::size_t>(who[i])].cls);
    }
    for (int ch = 0; ch < 3; ++ch) {
      img.rgb[i * 3 + static_cast<std::size_t>(ch)] =
        static_cast<std::uint8_t>(std::clamp(std::lround(base[static_cast<std::size_t>(ch)] * k),
                                             0L, 255L));
    }
  }
  return img;
}

/// Label of one actor at time t in the ego frame at t.
struct ActorLabel
{
  int id{0};
  ActorClass cls{ActorClass::kVehicle};
  RotatedBox2D box{};
  double height{1.5};
  /// Future centers and headings for h = 1..H at 10 Hz.
  std::vector<Pose2> waypoints;

  friend bool operator==(const ActorLabel &, const ActorLabel &) = default;
};

struct LabelSet
{
  double timestamp{0.0};
  int horizon{0};
  std::vector<ActorLabel> actors;

  friend bool operator==(const LabelSet &, const LabelSet &) = default;
};

inline constexpr double kWaypointPeriod = 0.1;

inline LabelSet scene_labels(const Scene & scene, double t, int horizon)
{
  if (horizon < 0) {
    throw std::invalid_argument("scene_labels: negative horizon");
  }
  if (t + horizon * kWaypointPeriod > scene.duration + 1e-9) {
    throw std::out_of_range("scene_labels: horizon exceeds scene duration");
  }
  const Pose2 to_ego = se2_inverse(ego_pose_at(scene, t));
  LabelSet labels;
  labels.timestamp = t;
  labels.horizon = horizon;
  for (const auto & a : scene.actors) {
    ActorLabel l;
    l.id = a.id;
    l.cls = a.cls;
    l.height = a.height;
    const Pose2 now = se2_compose(to_ego, actor_pose_at(a, t));
    l.box = {now.tx, now.ty, a.box.length, a.box.width, now.yaw};
    for (int h = 1; h <= horizon; ++h) {
      const double th = std::min(t + h * kWaypointPeriod, scene.duration);
      l.waypoints.push_back(se2_compose(to_ego, actor_pose_at(a, th)));
    }
    labels.actors.push_back(std::move(l));
  }
  return labels;
}

}  // namespace mvfuse

#endif  // MVFUSE_SCENE_HPP_
