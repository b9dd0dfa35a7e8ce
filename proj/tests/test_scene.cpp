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

#include <gtest/gtest.h>

#include <cmath>

#include "mvfuse.hpp"

using namespace mvfuse;

namespace
{

Scene box_ahead_scene()
{
  Scene s;
  s.duration = 4.0;
  s.ego_motion.segments = {{4.0, 0.0, 0.0}};
  s.actors.push_back(
    Actor::make(0, ActorClass::kVehicle, {10.0, 0.0, 4.0, 2.0, 0.0}, 1.5, {{4.0, 0.0, 0.0}}));
  return s;
}

const LidarPoint * find_point(const Sweep & s, int laser, int bin, int bins)
{
  for (const auto & p : s.points) {
    if (p.laser_id == laser && static_cast<int>(std::lround(p.azimuth / kTwoPi * bins)) % bins == bin) {
      return &p;
    }
  }
  return nullptr;
}

}  // namespace

TEST(Scene, SameSeedSameScene)
{
  SceneConfig cfg;
  const Scene a = build_scene(cfg, 11);
  const Scene b = build_scene(cfg, 11);
  ASSERT_EQ(a.actors.size(), b.actors.size());
  for (std::size_t i = 0; i < a.actors.size(); ++i) {
    EXPECT_EQ(a.actors[i].box, b.actors[i].box);
    EXPECT_EQ(a.actors[i].cls, b.actors[i].cls);
  }
  EXPECT_EQ(a.map, b.map);
  const Scene c = build_scene(cfg, 12);
  EXPECT_NE(a.actors.front().box, c.actors.front().box);
}

TEST(Scene, ActorCountsFollowConfig)
{
  SceneConfig cfg;
  cfg.vehicles = 3;
  cfg.pedestrians = 2;
  cfg.bicyclists = 1;
  const Scene s = build_scene(cfg, 5);
  int counts[kNumClasses] = {0, 0, 0};
  for (const auto & a : s.actors) {
    ++counts[class_index(a.cls)];
  }
  EXPECT_EQ(counts[0], 3);
  EXPECT_EQ(counts[1], 2);
  EXPECT_EQ(counts[2], 1);
}

TEST(Scene, FootprintsKeepClearanceAtStart)
{
  const Scene s = build_scene(SceneConfig{}, 3);
  for (std::size_t i = 0; i < s.actors.size(); ++i) {
    for (std::size_t j = i + 1; j < s.actors.size(); ++j) {
      EXPECT_EQ(box_intersection_area(detail::inflate(s.actors[i].box, 0.3),
                                      detail::inflate(s.actors[j].box, 0.3)),
                0.0);
    }
  }
}

TEST(Scene, OverfullExtentThrows)
{
  SceneConfig cfg;
  cfg.vehicles = 50;
  cfg.x_min = 5.0;
  cfg.x_max = 12.0;
  cfg.y_min = -3.0;
  cfg.y_max = 3.0;
  cfg.max_attempts = 50;
  EXPECT_THROW(build_scene(cfg, 1), SceneTooDense);
}

TEST(Scene, ImplausibleActorSizeRejected)
{
  EXPECT_THROW(Actor::make(0, ActorClass::kPedestrian, {0.0, 0.0, 5.0, 2.0, 0.0}, 1.7, {}),
               std::invalid_argument);
}

TEST(Scene, ConfigTextRoundTrip)
{
  SceneConfig cfg;
  cfg.vehicles = 7;
  cfg.x_min = -12.5;
  cfg.seed = 99;
  const SceneConfig back = SceneConfig::parse(cfg.to_text());
  EXPECT_EQ(back.vehicles, 7);
  EXPECT_DOUBLE_EQ(back.x_min, -12.5);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_THROW(SceneConfig::parse("vehicles = 3\nwheels = 4\n"), std::runtime_error);
}

TEST(Motion, TurningSegmentMatchesStepIntegration)
{
  MotionProfile m;
  m.start = {1.0, 2.0, 0.3};
  m.segments = {{1.5, 5.0, 0.4}, {1.0, 3.0, -0.2}};
  const Pose2 closed = pose_at(m, 2.5);
  // Small-step unicycle integration.
  double x = 1.0, y = 2.0, yaw = 0.3;
  const int n = 200000;
  for (const auto & seg : m.segments) {
    const double dt = seg.duration / n;
    for (int i = 0; i < n; ++i) {
      const double mid = yaw + 0.5 * seg.yaw_rate * dt;
      x += seg.speed * dt * std::cos(mid);
      y += seg.speed * dt * std::sin(mid);
      yaw += seg.yaw_rate * dt;
    }
  }
  EXPECT_NEAR(closed.tx, x, 1e-6);
  EXPECT_NEAR(closed.ty, y, 1e-6);
  EXPECT_NEAR(normalize_angle(closed.yaw - yaw), 0.0, 1e-9);
  EXPECT_THROW(pose_at(m, 3.0), std::out_of_range);
}

TEST(Sweep, ReturnsMatchAnalyticDistances)
{
  LidarSensorSpec spec = LidarSensorSpec::uniform(3, 0.0, -10.0, 360);
  const Sweep s = simulate_sweep(box_ahead_scene(), spec, 0.0);
  const double h = spec.mount_height;
  const double el5 = 5.0 * kPi / 180.0;
  const double el10 = 10.0 * kPi / 180.0;

  // Near face of the box at x = 8.
  const LidarPoint * a = find_point(s, 1, 0, 360);
  ASSERT_NE(a, nullptr);
  EXPECT_NEAR(a->range, 8.0 / std::cos(el5), 1e-9);
  EXPECT_NEAR(a->x, 8.0, 1e-9);
  const LidarPoint * b = find_point(s, 2, 0, 360);
  ASSERT_NE(b, nullptr);
  EXPECT_NEAR(b->range, 8.0 / std::cos(el10), 1e-9);

  // Ground behind the sensor.
  const LidarPoint * g = find_point(s, 1, 180, 360);
  ASSERT_NE(g, nullptr);
  EXPECT_NEAR(g->range, h / std::sin(el5), 1e-9);
  EXPECT_NEAR(g->z, 0.0, 1e-9);

  // The horizontal beam passes over the box and never meets the ground.
  EXPECT_EQ(find_point(s, 0, 0, 360), nullptr);
  EXPECT_EQ(find_point(s, 0, 180, 360), nullptr);
}

TEST(Sweep, PointsAreConsistentAndOrdered)
{
  SceneConfig cfg;
  cfg.vehicles = 4;
  cfg.pedestrians = 2;
  cfg.bicyclists = 1;
  cfg.x_min = -20.0;
  cfg.x_max = 30.0;
  cfg.y_min = -20.0;
  cfg.y_max = 20.0;
  const Scene scene = build_scene(cfg, 8);
  const LidarSensorSpec spec = LidarSensorSpec::uniform(16, 2.0, -25.0, 512);
  const Sweep s = simulate_sweep(scene, spec, 1.0);
  ASSERT_FALSE(s.points.empty());
  int prev = -1;
  for (const auto & p : s.points) {
    const double dx = p.x, dy = p.y, dz = p.z - spec.mount_height;
    EXPECT_NEAR(p.range, std::sqrt(dx * dx + dy * dy + dz * dz), 1e-9);
    EXPECT_LE(p.range, spec.max_range);
    EXPECT_GE(p.intensity, 0.0);
    EXPECT_LE(p.intensity, 1.0);
    const int key = p.laser_id * 512 + static_cast<int>(std::lround(p.azimuth / kTwoPi * 512));
    EXPECT_GT(key, prev);
    prev = key;
  }
}

TEST(Labels, StaticEgoKeepsWorldBoxesAndHorizon)
{
  const Scene s = box_ahead_scene();
  const LabelSet l = scene_labels(s, 0.5, 30);
  ASSERT_EQ(l.actors.size(), 1u);
  EXPECT_EQ(l.actors[0].waypoints.size(), 30u);
  EXPECT_NEAR(l.actors[0].box.cx, 10.0, 1e-12);
  EXPECT_THROW(scene_labels(s, 1.5, 30), std::out_of_range);
}

TEST(Labels, MovingEgoSeesActorsInItsFrame)
{
  Scene s = box_ahead_scene();
  s.ego_motion.segments = {{4.0, 2.0, 0.0}};
  const LabelSet l = scene_labels(s, 1.0, 10);
  EXPECT_NEAR(l.actors[0].box.cx, 8.0, 1e-12);
  // Waypoints stay in the ego frame at the label time.
  EXPECT_NEAR(l.actors[0].waypoints.back().tx, 8.0, 1e-12);
}

TEST(Camera, RendersActorsOverSky)
{
  const Scene s = box_ahead_scene();
  const CameraModel cam = CameraModel::from_fov(160, 100, 90.0, 0);
  const Image img = render_camera(s, cam, 0.0);
  ASSERT_EQ(img.width, 160);
  ASSERT_EQ(img.height, 100);
  const auto px = camera_pixel_of({8.0, 0.0, 0.8}, cam);
  ASSERT_TRUE(px.has_value());
  const std::uint8_t * at_box = img.pixel(px->row, px->col);
  EXPECT_FALSE(at_box[0] == kSkyColor[0] && at_box[1] == kSkyColor[1] && at_box[2] == kSkyColor[2]);
  const std::uint8_t * top = img.pixel(0, 0);
  EXPECT_EQ(top[0], kSkyColor[0]);
  EXPECT_EQ(top[2], kSkyColor[2]);
  EXPECT_EQ(img, render_camera(s, cam, 0.0));
}
