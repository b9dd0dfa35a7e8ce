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

#ifndef MVFUSE_CAMERA_HPP_
#define MVFUSE_CAMERA_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mvfuse/geometry.hpp"

namespace mvfuse
{

enum class CameraProjection { kPinhole, kCylindrical };

/// Forward-looking camera. Pixel (row, col) indices refer to the cropped
/// image: rows [0, crop_top) of the sensor image are discarded.
///
/// The cylindrical variant covers 360 degrees of azimuth and exists for
/// evaluation slicing; the networks only ever consume pinhole images.
struct CameraModel
{
  double fx{1.0};
  double fy{1.0};
  double cx{0.0};
  double cy{0.0};
  int width{1};
  int height{1};
  int crop_top{0};
  Pose2 mount{};  // camera pose in the ego frame; optical axis along mount +x
  double mount_height{1.6};
  CameraProjection projection{CameraProjection::kPinhole};

  static CameraModel from_fov(int width, int height, double hfov_deg, int crop_top,
                              Pose2 mount = {}, double mount_height = 1.6)
  {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.crop_top = crop_top;
    cam.fx = 0.5 * width / std::tan(0.5 * hfov_deg * kPi / 180.0);
    cam.fy = cam.fx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.mount = mount;
    cam.mount_height = mount_height;
    cam.validate();
    return cam;
  }

  /// 360 degree cylindrical camera; fx, fy are in pixels per radian / meter
  /// ratio so that every azimuth maps to a column.
  static CameraModel panoramic(int width, int height, double mount_height = 1.6)
  {
    CameraModel cam;
    cam.projection = CameraProjection::kCylindrical;
    cam.width = width;
    cam.height = height;
    cam.fx = width / kTwoPi;
    cam.fy = cam.fx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.mount_height = mount_height;
    return cam;
  }

  int cropped_height() const { return height - crop_top; }

  double horizontal_fov_deg() const
  {
    if (projection == CameraProjection::kCylindrical) {
      return 360.0;
    }
    return 2.0 * std::atan(0.5 * width / fx) * 180.0 / kPi;
  }

  void validate() const
  {
    if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) {
      throw std::invalid_argument("CameraModel: focal lengths and image size must be positive");
    }
    if (crop_top < 0 || crop_top >= height) {
      throw std::invalid_argument("CameraModel: crop_top must lie in [0, height)");
    }
  }

  /// Continuous sensor-image coordinates (u right, v down) of an ego-frame
  /// point, or nothing when the point is behind the camera.
  std::optional<std::array<double, 2>> project(Point3 p) const
  {
    const Point2 local = se2_inverse(mount).apply(Point2{p.x, p.y});
    const double dz = p.z - mount_height;
    if (projection == CameraProjection::kCylindrical) {
      const double rho = std::hypot(local.x, local.y);
      if (!(rho > 0.0)) {
        return std::nullopt;
      }
      double u = cx - fx * std::atan2(local.y, local.x);
      if (u >= width) {
        u -= width;
      } else if (u < 0.0) {
        u += width;
      }
      return std::array<double, 2>{u, cy - fy * dz / rho};
    }
    if (!(local.x > 0.0)) {
      return std::nullopt;
    }
    return std::array<double, 2>{cx - fx * local.y / local.x, cy - fy * dz / local.x};
  }
};

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Image
{
  int width{0};
  int height{0};
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0})
  : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3)
  {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
      rgb[i] = fill[0];
      rgb[i + 1] = fill[1];
      rgb[i + 2] = fill[2];
    }
  }

  std::uint8_t * pixel(int row, int col)
  {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  const std::uint8_t * pixel(int row, int col) const
  {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }

  friend bool operator==(const Image &, const Image &) = default;
};

/// Drops the top `crop_top` rows.
inline Image crop_image(const Image & img, const CameraModel & cam)
{
  if (img.width != cam.width || img.height != cam.height) {
    throw std::invalid_argument("crop_image: image size does not match the camera");
  }
  Image out;
  out.width = img.width;
  out.height = cam.cropped_height();
  out.rgb.assign(img.rgb.begin() + static_cast<std::ptrdiff_t>(cam.crop_top) * img.width * 3,
                 img.rgb.end());
  return out;
}

}  // namespace mvfuse

#endif  // MVFUSE_CAMERA_HPP_
