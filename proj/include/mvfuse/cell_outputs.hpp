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

#ifndef MVFUSE_CELL_OUTPUTS_HPP_
#define MVFUSE_CELL_OUTPUTS_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

/// Per-class channel layout of one output cell:
///   0            existence probability
///   1, 2         box length, width
///   3 + 2h       center x offset at horizon h (h = 0..H), meters from cell center
///   4 + 2h       center y offset at horizon h
///   B + 2h       sin(heading_h), B = 3 + 2(H + 1)
///   B + 2h + 1   cos(heading_h)
struct OutputLayout
{
  int horizon{30};
  int num_classes{3};

  int per_class() const { return 1 + 2 + 2 * (horizon + 1) + 2 * (horizon + 1); }
  int channels() const { return num_classes * per_class(); }

  int block(int cls) const { return cls * per_class(); }
  int prob(int cls) const { return block(cls); }
  int length(int cls) const { return block(cls) + 1; }
  int width(int cls) const { return block(cls) + 2; }
  int center_x(int cls, int h) const { return block(cls) + 3 + 2 * h; }
  int center_y(int cls, int h) const { return block(cls) + 4 + 2 * h; }
  int heading_sin(int cls, int h) const { return block(cls) + 3 + 2 * (horizon + 1) + 2 * h; }
  int heading_cos(int cls, int h) const { return heading_sin(cls, h) + 1; }
};

/// Dense first-stage outputs on the output-resolution BEV grid.
struct CellOutputs
{
  GridSpec grid{};  // output-resolution grid (cells `stride` times the input voxels)
  OutputLayout layout{};
  int rows{0};
  int cols{0};
  std::vector<double> values;

  CellOutputs() = default;
  CellOutputs(const GridSpec & g, OutputLayout l)
  : grid(g), layout(l), rows(g.rows()), cols(g.cols()),
    values(static_cast<std::size_t>(rows) * cols * l.channels(), 0.0)
  {
  }

  int channels() const { return layout.channels(); }
  std::size_t cell_offset(int row, int col) const
  {
    return (static_cast<std::size_t>(row) * cols + col) * channels();
  }
  double & at(int row, int col, int ch) { return values[cell_offset(row, col) + ch]; }
  double at(int row, int col, int ch) const { return values[cell_offset(row, col) + ch]; }
  double * cell(int row, int col) { return values.data() + cell_offset(row, col); }
  const double * cell(int row, int col) const { return values.data() + cell_offset(row, col); }

  bool probabilities_valid() const
  {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (int k = 0; k < layout.num_classes; ++k) {
          const double p = at(r, c, layout.prob(k));
          if (!(p > 0.0 && p < 1.0)) {
            return false;
          }
        }
      }
    }
    return true;
  }
};

inline double sigmoid(double x)
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace mvfuse

#endif  // MVFUSE_CELL_OUTPUTS_HPP_
