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

#ifndef MVFUSE_OBJECTIVES_HPP_
#define MVFUSE_OBJECTIVES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/cell_outputs.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/kv.hpp"
#include "mvfuse/rng.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/view_specs.hpp"

namespace mvfuse
{

inline constexpr double kProbabilityEpsilon = 1e-7;
inline constexpr double kDefaultDecay = 0.97;
inline constexpr double kDefaultGamma = 2.0;

struct LossParams
{
  double decay{kDefaultDecay};  // lambda
  double gamma{kDefaultGamma};
};

/// Regression and classification targets of one foreground cell, laid out
/// like a single class block of OutputLayout (entry 0 is the target
/// probability, always 1).
struct FgCell
{
  int row{0};
  int col{0};
  int cls{0};
  int actor_id{0};
  std::vector<double> target;
};

struct CellTargets
{
  GridSpec grid{};  // output-resolution grid
  OutputLayout layout{};
  int rows{0};
  int cols{0};
  std::vector<int> fg_index;  // per cell: index into `fg`, or -1 for background
  std::vector<FgCell> fg;

  const FgCell * at(int row, int col) const
  {
    const int i = fg_index[static_cast<std::size_t>(row) * cols + col];
    return i < 0 ? nullptr : &fg[static_cast<std::size_t>(i)];
  }
};

/// Assigns every output cell whose center lies inside a box to that actor.
/// An actor covering no cell center claims the cell containing its box
/// center when that cell is still free. Earlier actors win conflicts.
inline CellTargets encode_targets(const LabelSet & labels, const GridSpec & grid,
                                  int output_stride, int horizon)
{
  if (output_stride <= 0) {
    throw std::invalid_argument("encode_targets: output stride must be positive");
  }
  if (horizon < 0 || horizon > labels.horizon) {
    throw std::invalid_argument("encode_targets: horizon exceeds the label horizon");
  }
  CellTargets t;
  t.grid = grid.coarsened(output_stride);
  t.layout = OutputLayout{horizon, kNumClasses};
  t.rows = t.grid.rows();
  t.cols = t.grid.cols();
  t.fg_index.assign(static_cast<std::size_t>(t.rows) * t.cols, -1);
  const OutputLayout & L = t.layout;

  auto assign = [&](int r, int c, const ActorLabel & a) {
    const Point2 cc = t.grid.cell_center(r, c);
    FgCell cell;
    cell.row = r;
    cell.col = c;
    cell.cls = class_index(a.cls);
    cell.actor_id = a.id;
    cell.target.assign(static_cast<std::size_t>(L.per_class()), 0.0);
    auto set = [&](int ch, double v) { cell.target[static_cast<std::size_t>(ch)] = v; };
    set(L.prob(0), 1.0);
    set(L.length(0), a.box.length);
    set(L.width(0), a.box.width);
    for (int h = 0; h <= horizon; ++h) {
      const Pose2 p = h == 0 ? a.box.pose() : a.waypoints[static_cast<std::size_t>(h - 1)];
      set(L.center_x(0, h), p.tx - cc.x);
      set(L.center_y(0, h), p.ty - cc.y);
      set(L.heading_sin(0, h), std::sin(p.yaw));
      set(L.heading_cos(0, h), std::cos(p.yaw));
    }
    t.fg_index[static_cast<std::size_t>(r) * t.cols + c] = static_cast<int>(t.fg.size());
    t.fg.push_back(std::move(cell));
  };

  for (const auto & a : labels.actors) {
    if (static_cast<int>(a.waypoints.size()) < horizon) {
      throw std::invalid_argument("encode_targets: actor has fewer waypoints than the horizon");
    }
    const auto corners = box_corners(a.box);
    double x0 = corners[0].x, x1 = x0, y0 = corners[0].y, y1 = y0;
    for (const auto & p : corners) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor((x0 - t.grid.x_min) / t.grid.voxel_length)));
    const int r1 =
      std::min(t.rows - 1, static_cast<int>(std::floor((x1 - t.grid.x_min) / t.grid.voxel_length)));
    const int c0 = std::max(0, static_cast<int>(std::floor((y0 - t.grid.y_min) / t.grid.voxel_width)));
    const int c1 =
      std::min(t.cols - 1, static_cast<int>(std::floor((y1 - t.grid.y_min) / t.grid.voxel_width)));
    bool claimed = false;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        if (t.fg_index[static_cast<std::size_t>(r) * t.cols + c] >= 0) {
          continue;
        }
        if (point_in_box(t.grid.cell_center(r, c), a.box)) {
          assign(r, c, a);
          claimed = true;
        }
      }
    }
    if (!claimed) {
      const double fr = std::floor((a.box.cx - t.grid.x_min) / t.grid.voxel_length);
      const double fc = std::floor((a.box.cy - t.grid.y_min) / t.grid.voxel_width);
      if (fr >= 0 && fr < t.rows && fc >= 0 && fc < t.cols) {
        const int r = static_cast<int>(fr);
        const int c = static_cast<int>(fc);
        if (t.fg_index[static_cast<std::size_t>(r) * t.cols + c] < 0) {
          assign(r, c, a);
        }
      }
    }
  }
  return t;
}

inline double clamp_probability(double p)
{
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

/// -(1 - p)^gamma * ln p with p clamped to [eps, 1 - eps].
inline double focal_loss(double p, double gamma = kDefaultGamma)
{
  const double q = clamp_probability(p);
  return -std::pow(1.0 - q, gamma) * std::log(q);
}

/// d focal_loss / dp; zero where the clamp is active.
inline double focal_loss_derivative(double p, double gamma = kDefaultGamma)
{
  if (p <= kProbabilityEpsilon || p >= 1.0 - kProbabilityEpsilon) {
    return 0.0;
  }
  double d = -std::pow(1.0 - p, gamma) / p;
  if (gamma != 0.0) {
    d += gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p);
  }
  return d;
}

/// Huber-style loss with transition at |d| = 1.
inline double smooth_l1(double d)
{
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

inline double smooth_l1_derivative(double d)
{
  if (std::abs(d) < 1.0) {
    return d;
  }
  return d > 0.0 ? 1.0 : -1.0;
}

/// Foreground loss of one class block at horizon h, without the decay weight.
inline double fg_loss_at_h(const double * out_block, const std::vector<double> & target,
                           const OutputLayout & layout, int h, double gamma = kDefaultGamma)
{
  const OutputLayout & L = layout;
  auto diff = [&](int ch) { return out_block[ch] - target[static_cast<std::size_t>(ch)]; };
  double loss = 0.0;
  if (h == 0) {
    loss += focal_loss(out_block[L.prob(0)], gamma);
    loss += smooth_l1(diff(L.length(0))) + smooth_l1(diff(L.width(0)));
  }
  loss += smooth_l1(diff(L.center_x(0, h))) + smooth_l1(diff(L.center_y(0, h)));
  loss += smooth_l1(diff(L.heading_sin(0, h))) + smooth_l1(diff(L.heading_cos(0, h)));
  return loss;
}

struct ClassLoss
{
  double focal_fg{0.0};
  double focal_bg{0.0};
  double size{0.0};
  std::vector<double> center;   // per horizon, decay-weighted
  std::vector<double> heading;  // per horizon, decay-weighted

  double sum() const
  {
    double s = focal_fg + focal_bg + size;
    for (double v : center) {
      s += v;
    }
    for (double v : heading) {
      s += v;
    }
    return s;
  }
};

struct LossBreakdown
{
  double total{0.0};
  std::vector<ClassLoss> classes;

  double regression() const
  {
    double s = 0.0;
    for (const auto & c : classes) {
      s += c.size;
      for (double v : c.center) {
        s += v;
      }
      for (double v : c.heading) {
        s += v;
      }
    }
    return s;
  }

  double foreground() const
  {
    double s = regression();
    for (const auto & c : classes) {
      s += c.focal_fg;
    }
    return s;
  }

  std::string to_text() const
  {
    KeyValues kv;
    kv.set("total", format_double(total));
    for (std::size_t k = 0; k < classes.size(); ++k) {
      const std::string p = std::string(class_name(kAllClasses[k])) + ".";
      const auto & c = classes[k];
      kv.set(p + "focal_fg", format_double(c.focal_fg));
      kv.set(p + "focal_bg", format_double(c.focal_bg));
      kv.set(p + "size", format_double(c.size));
      for (std::size_t h = 0; h < c.center.size(); ++h) {
        kv.set(p + "center_h" + std::to_string(h), format_double(c.center[h]));
      }
      for (std::size_t h = 0; h < c.heading.size(); ++h) {
        kv.set(p + "heading_h" + std::to_string(h), format_double(c.heading[h]));
      }
    }
    return kv.to_text();
  }
};

namespace detail
{

inline void check_aligned(const CellOutputs & out, const CellTargets & t)
{
  if (out.rows != t.rows || out.cols != t.cols || out.layout.horizon != t.layout.horizon ||
      out.layout.num_classes != t.layout.num_classes) {
    throw std::invalid_argument("loss: outputs and targets are not aligned");
  }
}

}  // namespace detail

/// Background cells contribute focal(1 - p) per class; foreground cells
/// contribute sum_h decay^h * fg_loss_at_h for their class and the background
/// term for the other classes. Summed over cells in row-major order.
inline LossBreakdown total_loss(const CellOutputs & out, const CellTargets & t,
                                const LossParams & params = {})
{
  detail::check_aligned(out, t);
  const OutputLayout & L = out.layout;
  const int H = L.horizon;
  LossBreakdown b;
  b.classes.resize(static_cast<std::size_t>(L.num_classes));
  for (auto & c : b.classes) {
    c.center.assign(static_cast<std::size_t>(H + 1), 0.0);
    c.heading.assign(static_cast<std::size_t>(H + 1), 0.0);
  }
  for (int r = 0; r < out.rows; ++r) {
    for (int col = 0; col < out.cols; ++col) {
      const FgCell * fg = t.at(r, col);
      const double * cell = out.cell(r, col);
      for (int k = 0; k < L.num_classes; ++k) {
        auto & cl = b.classes[static_cast<std::size_t>(k)];
        const double * blk = cell + L.block(k);
        if (fg == nullptr || fg->cls != k) {
          cl.focal_bg += focal_loss(1.0 - blk[L.prob(0)], params.gamma);
          continue;
        }
        const auto & tg = fg->target;
        auto d = [&](int ch) { return blk[ch] - tg[static_cast<std::size_t>(ch)]; };
        cl.focal_fg += focal_loss(blk[L.prob(0)], params.gamma);
        cl.size += smooth_l1(d(L.length(0))) + smooth_l1(d(L.width(0)));
        double w = 1.0;
        for (int h = 0; h <= H; ++h) {
          const auto hi = static_cast<std::size_t>(h);
          cl.center[hi] += w * (smooth_l1(d(L.center_x(0, h))) + smooth_l1(d(L.center_y(0, h))));
          cl.heading[hi] +=
            w * (smooth_l1(d(L.heading_sin(0, h))) + smooth_l1(d(L.heading_cos(0, h))));
          w *= params.decay;
        }
      }
    }
  }
  for (const auto & c : b.classes) {
    b.total += c.sum();
  }
  return b;
}

/// Partial derivatives of the total loss with respect to every output value
/// (probability channels hold p, not logits).
inline std::vector<double> loss_gradients(const CellOutputs & out, const CellTargets & t,
                                          const LossParams & params = {})
{
  detail::check_aligned(out, t);
  const OutputLayout & L = out.layout;
  const int H = L.horizon;
  std::vector<double> g(out.values.size(), 0.0);
  for (int r = 0; r < out.rows; ++r) {
    for (int col = 0; col < out.cols; ++col) {
      const FgCell * fg = t.at(r, col);
      const std::size_t base = out.cell_offset(r, col);
      for (int k = 0; k < L.num_classes; ++k) {
        const std::size_t blk = base + static_cast<std::size_t>(L.block(k));
        const double p = out.values[blk + static_cast<std::size_t>(L.prob(0))];
        if (fg == nullptr || fg->cls != k) {
          g[blk + static_cast<std::size_t>(L.prob(0))] =
            -focal_loss_derivative(1.0 - p, params.gamma);
          continue;
        }
        const auto & tg = fg->target;
        auto put = [&](int ch, double weight) {
          const std::size_t i = blk + static_cast<std::size_t>(ch);
          g[i] = weight * smooth_l1_derivative(out.values[i] - tg[static_cast<std::size_t>(ch)]);
        };
        g[blk + static_cast<std::size_t>(L.prob(0))] = focal_loss_derivative(p, params.gamma);
        put(L.length(0), 1.0);
        put(L.width(0), 1.0);
        double w = 1.0;
        for (int h = 0; h <= H; ++h) {
          put(L.center_x(0, h), w);
          put(L.center_y(0, h), w);
          put(L.heading_sin(0, h), w);
          put(L.heading_cos(0, h), w);
          w *= params.decay;
        }
      }
    }
  }
  return g;
}

struct GradientCheck
{
  double max_relative_error{0.0};
  std::size_t worst_index{0};
  std::size_t checked{0};
};

/// Central finite differences of total_loss against loss_gradients over every
/// output value. Pairs where both magnitudes fall below `zero_tol` count as
/// agreeing.
inline GradientCheck verify_gradients(const CellOutputs & out, const CellTargets & t,
                                      const LossParams & params = {}, double step = 1e-4,
                                      double zero_tol = 1e-12)
{
  const auto g = loss_gradients(out, t, params);
  CellOutputs probe = out;
  GradientCheck res;
  for (std::size_t i = 0; i < probe.values.size(); ++i) {
    const double v = probe.values[i];
    probe.values[i] = v + step;
    const double fp = total_loss(probe, t, params).total;
    probe.values[i] = v - step;
    const double fm = total_loss(probe, t, params).total;
    probe.values[i] = v;
    const double fd = (fp - fm) / (2.0 * step);
    const double scale = std::max(std::abs(fd), std::abs(g[i]));
    const double err = scale < zero_tol ? 0.0 : std::abs(fd - g[i]) / scale;
    if (err > res.max_relative_error) {
      res.max_relative_error = err;
      res.worst_index = i;
    }
    ++res.checked;
  }
  return res;
}

struct FitOptions
{
  int steps{500};
  double learning_rate{1.0};
  LossParams loss{};
  std::uint64_t seed{1};
  int max_halvings{40};
  /// Starting point; random when empty.
  std::optional<CellOutputs> init;
};

struct FitResult
{
  CellOutputs outputs;
  std::vector<double> loss_history;  // loss before the first step and after each accepted step
  int steps_taken{0};
};

/// Gradient descent directly on the output grid. Probabilities are optimised
/// through their logits; a step is halved until the loss does not increase.
inline FitResult fit_outputs(const CellTargets & t, const FitOptions & opt = {})
{
  const OutputLayout & L = t.layout;
  CellOutputs cur(t.grid, L);
  if (opt.init) {
    detail::check_aligned(*opt.init, t);
    cur = *opt.init;
  } else {
    Rng rng(opt.seed);
    for (auto & v : cur.values) {
      v = rng.uniform(-1.0, 1.0);
    }
    for (int r = 0; r < cur.rows; ++r) {
      for (int c = 0; c < cur.cols; ++c) {
        for (int k = 0; k < L.num_classes; ++k) {
          double & p = cur.at(r, c, L.prob(k));
          p = sigmoid(p);
        }
      }
    }
  }
  std::vector<char> is_prob(static_cast<std::size_t>(L.channels()), 0);
  for (int k = 0; k < L.num_classes; ++k) {
    is_prob[static_cast<std::size_t>(L.prob(k))] = 1;
  }
  const std::size_t nch = is_prob.size();

  std::vector<double> params(cur.values.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = is_prob[i % nch] ? logit(clamp_probability(cur.values[i])) : cur.values[i];
  }
  auto materialize = [&](const std::vector<double> & x, CellOutputs & o) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      o.values[i] = is_prob[i % nch] ? sigmoid(x[i]) : x[i];
    }
  };
  materialize(params, cur);

  FitResult res;
  double loss = total_loss(cur, t, opt.loss).total;
  res.loss_history.push_back(loss);
  CellOutputs trial = cur;
  std::vector<double> cand(params.size());
  for (int s = 0; s < opt.steps; ++s) {
    auto g = loss_gradients(cur, t, opt.loss);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (is_prob[i % nch]) {
        const double p = cur.values[i];
        g[i] *= p * (1.0 - p);
      }
    }
    double lr = opt.learning_rate;
    bool accepted = false;
    for (int k = 0; k <= opt.max_halvings; ++k, lr *= 0.5) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        cand[i] = params[i] - lr * g[i];
      }
      materialize(cand, trial);
      const double trial_loss = total_loss(trial, t, opt.loss).total;
      if (trial_loss <= loss) {
        params.swap(cand);
        std::swap(cur, trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
    res.loss_history.push_back(loss);
    ++res.steps_taken;
  }
  res.outputs = std::move(cur);
  return res;
}

}  // namespace mvfuse

#endif  // MVFUSE_OBJECTIVES_HPP_
