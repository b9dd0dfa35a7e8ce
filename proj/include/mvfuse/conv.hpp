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

#ifndef MVFUSE_CONV_HPP_
#define MVFUSE_CONV_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/feature_map.hpp"

namespace mvfuse
{

enum class Activation { kIdentity, kRelu };

/// 2D convolution layer with "same" zero padding: output size is
/// ceil(input / stride) per axis. Kernels are stored [kh][kw][in][out].
struct ConvLayerSpec
{
  int in_channels{1};
  int out_channels{1};
  int kernel_h{3};
  int kernel_w{3};
  int stride_h{1};
  int stride_w{1};
  Activation activation{Activation::kRelu};

  int pad_top() const { return (kernel_h - 1) / 2; }
  int pad_left() const { return (kernel_w - 1) / 2; }
  int out_height(int in) const { return (in + stride_h - 1) / stride_h; }
  int out_width(int in) const { return (in + stride_w - 1) / stride_w; }

  std::size_t kernel_size() const
  {
    return static_cast<std::size_t>(kernel_h) * kernel_w * in_channels * out_channels;
  }

  void validate() const
  {
    if (in_channels <= 0 || out_channels <= 0 || kernel_h <= 0 || kernel_w <= 0 ||
        stride_h <= 0 || stride_w <= 0) {
      throw std::invalid_argument("ConvLayerSpec: all sizes must be positive");
    }
  }
};

template <typename T>
struct ConvParams
{
  std::vector<T> kernel;  // [kh][kw][in][out]
  std::vector<T> bias;    // [out]

  void check(const ConvLayerSpec & spec) const
  {
    if (kernel.size() != spec.kernel_size() ||
        bias.size() != static_cast<std::size_t>(spec.out_channels)) {
      throw std::invalid_argument("ConvParams: parameter sizes do not match the layer");
    }
  }
};

enum class ConvAlgorithm { kAuto, kDense, kSparse };

/// Fraction of exactly-zero inputs above which kAuto scatters nonzeros.
inline constexpr double kSparseDensity = 0.05;

namespace detail
{

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using StridedConstMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
double density(const BasicFeatureMap<T> & m)
{
  if (m.size() == 0) {
    return 0.0;
  }
  const auto nz = std::count_if(m.data().begin(), m.data().end(), [](T v) { return v != T(0); });
  return static_cast<double>(nz) / static_cast<double>(m.size());
}

template <typename T>
void apply_bias_activation(BasicFeatureMap<T> & out, const std::vector<T> & bias, Activation act)
{
  const int co = out.channels();
  T * d = out.data().data();
  const std::size_t pixels = static_cast<std::size_t>(out.height()) * out.width();
  for (std::size_t p = 0; p < pixels; ++p) {
    T * px = d + p * co;
    for (int c = 0; c < co; ++c) {
      T v = px[c] + bias[static_cast<std::size_t>(c)];
      if (act == Activation::kRelu && v < T(0)) {
        v = T(0);
      }
      px[c] = v;
    }
  }
}

inline int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace detail

/// Cross-correlation with zero padding and stride, then bias and activation.
template <typename T>
BasicFeatureMap<T> conv2d_forward(const BasicFeatureMap<T> & in, const ConvLayerSpec & spec,
                                  const ConvParams<T> & params,
                                  ConvAlgorithm algo = ConvAlgorithm::kAuto)
{
  spec.validate();
  params.check(spec);
  if (in.channels() != spec.in_channels) {
    throw std::invalid_argument("conv2d_forward: input has " + std::to_string(in.channels()) +
                                " channels, layer expects " + std::to_string(spec.in_channels));
  }
  const int hi = in.height();
  const int wi = in.width();
  const int ci = spec.in_channels;
  const int co = spec.out_channels;
  const int ho = spec.out_height(hi);
  const int wo = spec.out_width(wi);
  const int ph = spec.pad_top();
  const int pw = spec.pad_left();
  BasicFeatureMap<T> out(in.view(), ho, wo, co, T{}, in.geometry());

  if (algo == ConvAlgorithm::kAuto) {
    algo = detail::density(in) < kSparseDensity ? ConvAlgorithm::kSparse : ConvAlgorithm::kDense;
  }

  if (algo == ConvAlgorithm::kSparse) {
    for (int iy = 0; iy < hi; ++iy) {
      for (int ix = 0; ix < wi; ++ix) {
        const T * px = in.row_ptr(iy) + static_cast<std::size_t>(ix) * ci;
        for (int ic = 0; ic < ci; ++ic) {
          const T v = px[ic];
          if (v == T(0)) {
            continue;
          }
          for (int ky = 0; ky < spec.kernel_h; ++ky) {
            const int ny = iy + ph - ky;
            if (ny < 0 || ny % spec.stride_h != 0 || ny / spec.stride_h >= ho) {
              continue;
            }
            const int oy = ny / spec.stride_h;
            for (int kx = 0; kx < spec.kernel_w; ++kx) {
              const int nx = ix + pw - kx;
              if (nx < 0 || nx % spec.stride_w != 0 || nx / spec.stride_w >= wo) {
                continue;
              }
              const int ox = nx / spec.stride_w;
              const T * w = params.kernel.data() +
                            ((static_cast<std::size_t>(ky) * spec.kernel_w + kx) * ci + ic) * co;
              T * o = out.row_ptr(oy) + static_cast<std::size_t>(ox) * co;
              for (int oc = 0; oc < co; ++oc) {
                o[oc] += v * w[oc];
              }
            }
          }
        }
      }
    }
  } else {
    std::vector<char> row_nonzero(static_cast<std::size_t>(hi), 0);
    for (int iy = 0; iy < hi; ++iy) {
      const T * r = in.row_ptr(iy);
      row_nonzero[static_cast<std::size_t>(iy)] =
        std::any_of(r, r + static_cast<std::size_t>(wi) * ci, [](T v) { return v != T(0); });
    }
    for (int oy = 0; oy < ho; ++oy) {
      Eigen::Map<detail::RowMat<T>> orow(out.row_ptr(oy), wo, co);
      for (int ky = 0; ky < spec.kernel_h; ++ky) {
        const int iy = oy * spec.stride_h - ph + ky;
        if (iy < 0 || iy >= hi || !row_nonzero[static_cast<std::size_t>(iy)]) {
          continue;
        }
        for (int kx = 0; kx < spec.kernel_w; ++kx) {
          const int ox0 = std::max(0, detail::ceil_div(pw - kx, spec.stride_w));
          const int ox1 = std::min(wo - 1, detail::floor_div(wi - 1 + pw - kx, spec.stride_w));
          if (ox1 < ox0) {
            continue;
          }
          const int n = ox1 - ox0 + 1;
          const int ix0 = ox0 * spec.stride_w - pw + kx;
          detail::StridedConstMap<T> src(in.row_ptr(iy) + static_cast<std::size_t>(ix0) * ci, n,
                                         ci, Eigen::OuterStride<>(spec.stride_w * ci));
          Eigen::Map<const detail::RowMat<T>> w(
            params.kernel.data() + (static_cast<std::size_t>(ky) * spec.kernel_w + kx) * ci * co,
            ci, co);
          orow.middleRows(ox0, n).noalias() += src * w;
        }
      }
    }
  }
  detail::apply_bias_activation(out, params.bias, spec.activation);
  return out;
}

/// Transposed convolution with output size input * stride per axis; padding
/// (kernel - stride) / 2 on each side. Kernels are stored [kh][kw][in][out].
template <typename T>
BasicFeatureMap<T> conv_transpose2d_forward(const BasicFeatureMap<T> & in,
                                            const ConvLayerSpec & spec,
                                            const ConvParams<T> & params)
{
  spec.validate();
  params.check(spec);
  if (in.channels() != spec.in_channels) {
    throw std::invalid_argument("conv_transpose2d_forward: channel mismatch");
  }
  if ((spec.kernel_h - spec.stride_h) % 2 != 0 || (spec.kernel_w - spec.stride_w) % 2 != 0 ||
      spec.kernel_h < spec.stride_h || spec.kernel_w < spec.stride_w) {
    throw std::invalid_argument("conv_transpose2d_forward: kernel - stride must be even and >= 0");
  }
  const int hi = in.height();
  const int wi = in.width();
  const int ci = spec.in_channels;
  const int co = spec.out_channels;
  const int ho = hi * spec.stride_h;
  const int wo = wi * spec.stride_w;
  const int ph = (spec.kernel_h - spec.stride_h) / 2;
  const int pw = (spec.kernel_w - spec.stride_w) / 2;
  BasicFeatureMap<T> out(in.view(), ho, wo, co, T{}, in.geometry());

  for (int iy = 0; iy < hi; ++iy) {
    for (int ky = 0; ky < spec.kernel_h; ++ky) {
      const int oy = iy * spec.stride_h - ph + ky;
      if (oy < 0 || oy >= ho) {
        continue;
      }
      for (int kx = 0; kx < spec.kernel_w; ++kx) {
        // ox = ix * sw - pw + kx must lie in [0, wo)
        const int ix0 = std::max(0, detail::ceil_div(pw - kx, spec.stride_w));
        const int ix1 = std::min(wi - 1, detail::floor_div(wo - 1 + pw - kx, spec.stride_w));
        if (ix1 < ix0) {
          continue;
        }
        const int n = ix1 - ix0 + 1;
        const int ox0 = ix0 * spec.stride_w - pw + kx;
        Eigen::Map<const detail::RowMat<T>> src(in.row_ptr(iy) + static_cast<std::size_t>(ix0) * ci,
                                                n, ci);
        Eigen::Map<const detail::RowMat<T>> w(
          params.kernel.data() + (static_cast<std::size_t>(ky) * spec.kernel_w + kx) * ci * co, ci,
          co);
        detail::StridedMap<T> dst(out.row_ptr(oy) + static_cast<std::size_t>(ox0) * co, n, co,
                                  Eigen::OuterStride<>(spec.stride_w * co));
        dst.noalias() += src * w;
      }
    }
  }
  detail::apply_bias_activation(out, params.bias, spec.activation);
  return out;
}

/// Top-left crop to height x width.
template <typename T>
BasicFeatureMap<T> crop_spatial(const BasicFeatureMap<T> & in, int height, int width)
{
  if (height > in.height() || width > in.width()) {
    throw std::invalid_argument("crop_spatial: crop larger than input");
  }
  BasicFeatureMap<T> out(in.view(), height, width, in.channels(), T{}, in.geometry());
  for (int r = 0; r < height; ++r) {
    std::copy(in.row_ptr(r), in.row_ptr(r) + static_cast<std::size_t>(width) * in.channels(),
              out.row_ptr(r));
  }
  return out;
}

template <typename T>
void add_inplace(BasicFeatureMap<T> & a, const BasicFeatureMap<T> & b)
{
  if (!a.same_shape(b)) {
    throw std::invalid_argument("add_inplace: shape mismatch");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] += b.data()[i];
  }
}

template <typename T>
void relu_inplace(BasicFeatureMap<T> & a)
{
  for (auto & v : a.data()) {
    v = v < T(0) ? T(0) : v;
  }
}

}  // namespace mvfuse

#endif  // MVFUSE_CONV_HPP_
