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

#ifndef MVFUSE_FEATURE_MAP_HPP_
#define MVFUSE_FEATURE_MAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

/// Dense height x width x channels grid in row-major, channel-last layout,
/// tagged with the view it lives in.
template <typename T>
class BasicFeatureMap
{
public:
  using value_type = T;

  BasicFeatureMap() = default;

  BasicFeatureMap(ViewTag view, int height, int width, int channels, T fill = T{},
                  ViewGeometry geometry = {})
  : view_(view), height_(height), width_(width), channels_(channels), geometry_(std::move(geometry))
  {
    if (height < 0 || width < 0 || channels < 0) {
      throw std::invalid_argument("FeatureMap: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  ViewTag view() const { return view_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  const ViewGeometry & geometry() const { return geometry_; }
  void set_geometry(ViewGeometry g) { geometry_ = std::move(g); }

  std::size_t offset(int row, int col, int ch = 0) const
  {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  T & at(int row, int col, int ch) { return data_[offset(row, col, ch)]; }
  const T & at(int row, int col, int ch) const { return data_[offset(row, col, ch)]; }

  std::span<T> pixel(int row, int col)
  {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> pixel(int row, int col) const
  {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }

  T * row_ptr(int row) { return data_.data() + offset(row, 0); }
  const T * row_ptr(int row) const { return data_.data() + offset(row, 0); }

  std::vector<T> & data() { return data_; }
  const std::vector<T> & data() const { return data_; }

  bool same_shape(const BasicFeatureMap & o) const
  {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  bool all_finite() const
  {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  /// Copies channel `ch` into a single-channel map.
  BasicFeatureMap channel(int ch) const
  {
    BasicFeatureMap out(view_, height_, width_, 1, T{}, geometry_);
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) {
        out.at(r, c, 0) = at(r, c, ch);
      }
    }
    return out;
  }

  template <typename U>
  BasicFeatureMap<U> cast() const
  {
    BasicFeatureMap<U> out(view_, height_, width_, channels_, U{}, geometry_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const BasicFeatureMap & a, const BasicFeatureMap & b)
  {
    return a.view_ == b.view_ && a.same_shape(b) && a.data_ == b.data_;
  }

private:
  ViewTag view_{ViewTag::kBev};
  int height_{0};
  int width_{0};
  int channels_{0};
  ViewGeometry geometry_{};
  std::vector<T> data_;
};

using FeatureMap = BasicFeatureMap<float>;

/// Channel-wise concatenation of maps with identical spatial size.
template <typename T>
BasicFeatureMap<T> concat_channels(std::span<const BasicFeatureMap<T> * const> parts)
{
  if (parts.empty()) {
    throw std::invalid_argument("concat_channels: nothing to concatenate");
  }
  const auto & first = *parts.front();
  int total = 0;
  for (const auto * p : parts) {
    if (p->height() != first.height() || p->width() != first.width()) {
      throw std::invalid_argument("concat_channels: spatial size mismatch");
    }
    total += p->channels();
  }
  BasicFeatureMap<T> out(first.view(), first.height(), first.width(), total, T{}, first.geometry());
  for (int r = 0; r < first.height(); ++r) {
    for (int c = 0; c < first.width(); ++c) {
      T * dst = out.pixel(r, c).data();
      for (const auto * p : parts) {
        const auto src = p->pixel(r, c);
        dst = std::copy(src.begin(), src.end(), dst);
      }
    }
  }
  return out;
}

template <typename T>
BasicFeatureMap<T> concat_channels(std::initializer_list<const BasicFeatureMap<T> *> parts)
{
  std::vector<const BasicFeatureMap<T> *> v(parts);
  return concat_channels<T>(std::span<const BasicFeatureMap<T> * const>(v));
}

}  // namespace mvfuse

#endif  // MVFUSE_FEATURE_MAP_HPP_
