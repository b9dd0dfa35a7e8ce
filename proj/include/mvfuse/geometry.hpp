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

#ifndef MVFUSE_GEOMETRY_HPP_
#define MVFUSE_GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace mvfuse
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2
{
  double x{0.0};
  double y{0.0};

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point2 &, const Point2 &) = default;
};

/// Ego frame: x forward, y left, z up, origin on the ground below the SDV.
struct Point3
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend bool operator==(const Point3 &, const Point3 &) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double angle)
{
  double a = std::remainder(angle, kTwoPi);
  if (a <= -kPi) {
    a += kTwoPi;
  }
  return a;
}

/// Planar rigid transform. Applying the pose maps local coordinates into the
/// parent frame: p_parent = R(yaw) * p_local + t.
struct Pose2
{
  double tx{0.0};
  double ty{0.0};
  double yaw{0.0};

  static Pose2 identity() { return {}; }

  Point2 apply(Point2 p) const
  {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
  }

  Point3 apply(Point3 p) const
  {
    const Point2 q = apply(Point2{p.x, p.y});
    return {q.x, q.y, p.z};
  }

  friend bool operator==(const Pose2 &, const Pose2 &) = default;
};

/// Returns the pose that applies `b` first, then `a`.
inline Pose2 se2_compose(const Pose2 & a, const Pose2 & b)
{
  const Point2 t = a.apply(Point2{b.tx, b.ty});
  return {t.x, t.y, normalize_angle(a.yaw + b.yaw)};
}

inline Pose2 se2_inverse(const Pose2 & p)
{
  const double c = std::cos(p.yaw);
  const double s = std::sin(p.yaw);
  return {-(c * p.tx + s * p.ty), s * p.tx - c * p.ty, normalize_angle(-p.yaw)};
}

/// Applies a planar rigid transform to the (x, y) part of every point; z and
/// any other fields are carried unchanged.
template <typename PointT>
std::vector<PointT> transform_points(std::span<const PointT> pts, const Pose2 & pose)
{
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  std::vector<PointT> out(pts.begin(), pts.end());
  for (auto & p : out) {
    const double x = c * p.x - s * p.y + pose.tx;
    const double y = s * p.x + c * p.y + pose.ty;
    p.x = x;
    p.y = y;
  }
  return out;
}

template <typename PointT>
std::vector<PointT> transform_points(const std::vector<PointT> & pts, const Pose2 & pose)
{
  return transform_points(std::span<const PointT>(pts), pose);
}

/// BEV rectangle. `length` runs along the heading direction.
struct RotatedBox2D
{
  double cx{0.0};
  double cy{0.0};
  double length{1.0};
  double width{1.0};
  double heading{0.0};

  static RotatedBox2D make(double cx, double cy, double length, double width, double heading)
  {
    if (!(length > 0.0) || !(width > 0.0) || !std::isfinite(cx) || !std::isfinite(cy) ||
        !std::isfinite(heading)) {
      throw std::invalid_argument("RotatedBox2D: length and width must be positive and finite");
    }
    return {cx, cy, length, width, normalize_angle(heading)};
  }

  Point2 center() const { return {cx, cy}; }
  double area() const { return length * width; }
  Pose2 pose() const { return {cx, cy, heading}; }

  friend bool operator==(const RotatedBox2D &, const RotatedBox2D &) = default;
};

/// Corners in counter-clockwise order, starting at the front-right corner.
inline std::array<Point2, 4> box_corners(const RotatedBox2D & box)
{
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const std::array<Point2, 4> local{{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
  std::array<Point2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.cx + c * local[i].x - s * local[i].y, box.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

/// Signed shoelace area; positive for counter-clockwise polygons.
inline double polygon_area(std::span<const Point2> poly)
{
  const std::size_t n = poly.size();
  if (n < 3) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

/// Crossing-number test for simple polygons of either orientation.
inline bool point_in_polygon(Point2 p, std::span<const Point2> poly)
{
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[i];
    const Point2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at) {
        inside = !inside;
      }
    }
  }
  return inside;
}

inline bool point_in_box(Point2 p, const RotatedBox2D & box)
{
  const Point2 local = se2_inverse(box.pose()).apply(p);
  return std::abs(local.x) < 0.5 * box.length && std::abs(local.y) < 0.5 * box.width;
}

/// Distance from p to segment ab.
inline double segment_distance(Point2 p, Point2 a, Point2 b)
{
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return norm(p - (a + t * ab));
}

/// Sutherland-Hodgman clipping of `subject` against a counter-clockwise convex
/// `clip` polygon.
inline std::vector<Point2> clip_convex_polygon(std::span<const Point2> subject,
                                               std::span<const Point2> clip)
{
  std::vector<Point2> output(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 b = clip[(e + 1) % m];
    const Point2 edge = b - a;
    const std::vector<Point2> input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 cur = input[i];
      const Point2 prev = input[(i + n - 1) % n];
      const double dc = cross(edge, cur - a);
      const double dp = cross(edge, prev - a);
      if (dc >= 0.0) {
        if (dp < 0.0) {
          output.push_back(prev + (dp / (dp - dc)) * (cur - prev));
        }
        output.push_back(cur);
      } else if (dp >= 0.0) {
        output.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      }
    }
  }
  return output;
}

inline double box_intersection_area(const RotatedBox2D & a, const RotatedBox2D & b)
{
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  const auto inter = clip_convex_polygon(ca, cb);
  return std::abs(polygon_area(inter));
}

}  // namespace mvfuse

#endif  // MVFUSE_GEOMETRY_HPP_
