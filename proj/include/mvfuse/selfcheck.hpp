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

#ifndef MVFUSE_SELFCHECK_HPP_
#define MVFUSE_SELFCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mvfuse/eval.hpp"
#include "mvfuse/io/bundle.hpp"
#include "mvfuse/io/fmap.hpp"
#include "mvfuse/objectives.hpp"
#include "mvfuse/pipeline.hpp"
#include "mvfuse/reference.hpp"

namespace mvfuse
{

/// Vehicle, pedestrian and bicyclist near a static ego vehicle, all moving,
/// with a 4 s horizon of motion.
inline Scene three_actor_scene()
{
  Scene s;
  s.duration = 4.0;
  s.ego_motion.segments = {{4.0, 0.0, 0.0}};
  s.actors.push_back(Actor::make(0, ActorClass::kVehicle, {12.3, 3.1, 4.8, 1.9, 0.3}, 1.6,
                                 {{4.0, 6.0, 0.05}}));
  s.actors.push_back(Actor::make(1, ActorClass::kPedestrian, {7.7, -4.2, 0.6, 0.5, 1.2}, 1.7,
                                 {{4.0, 1.2, 0.0}}));
  s.actors.push_back(Actor::make(2, ActorClass::kBicyclist, {18.4, -6.5, 1.8, 0.7, -0.6}, 1.7,
                                 {{2.0, 4.0, 0.1}, {2.0, 4.5, -0.1}}));
  return s;
}

/// 40 x 30 m region at 0.16 m around the three-actor scene.
inline GridSpec round_trip_grid() { return GridSpec{40.0, 30.0, 3.2, 0.16, 0.16, 0.2, -10.0, -15.0, -0.1}; }

/// Output grid whose every fg cell carries the same constant error `e` on its
/// x-center channel at every horizon, all other channels exact.
inline CellOutputs constant_center_error_outputs(const CellTargets & t, double e)
{
  CellOutputs o(t.grid, t.layout);
  const OutputLayout & L = t.layout;
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      for (int k = 0; k < L.num_classes; ++k) {
        o.at(r, c, L.prob(k)) = kProbabilityEpsilon;
      }
    }
  }
  for (const auto & fg : t.fg) {
    double * blk = o.cell(fg.row, fg.col) + L.block(fg.cls);
    for (int ch = 0; ch < L.per_class(); ++ch) {
      blk[ch] = fg.target[static_cast<std::size_t>(ch)];
    }
    blk[L.prob(0)] = 1.0 - kProbabilityEpsilon;
    for (int h = 0; h <= L.horizon; ++h) {
      blk[L.center_x(0, h)] += e;
    }
  }
  return o;
}

struct CheckResult
{
  std::string name;
  bool passed{false};
  KeyValues metrics;
  std::string failure;
};

struct SelfcheckReport
{
  std::vector<CheckResult> checks;

  bool all_passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult & c) { return c.passed; });
  }

  std::string to_text() const
  {
    std::string s;
    for (const auto & c : checks) {
      s += "[" + c.name + "]\n";
      s += std::string("status = ") + (c.passed ? "pass" : "fail") + "\n";
      if (!c.failure.empty()) {
        s += "failure = " + c.failure + "\n";
      }
      s += c.metrics.to_text();
    }
    s += std::string("[summary]\nstatus = ") + (all_passed() ? "pass" : "fail") + "\n";
    return s;
  }
};

namespace detail
{

template <typename T>
std::vector<T> random_values(std::size_t n, Rng & rng, double lo = -1.0, double hi = 1.0)
{
  std::vector<T> v(n);
  for (auto & x : v) {
    x = static_cast<T>(rng.uniform(lo, hi));
  }
  return v;
}

template <typename T>
BasicFeatureMap<T> random_map(ViewTag tag, int h, int w, int c, Rng & rng, double zero_fraction,
                              ViewGeometry g = {})
{
  BasicFeatureMap<T> m(tag, h, w, c, T{}, std::move(g));
  for (auto & x : m.data()) {
    x = rng.uniform() < zero_fraction ? T(0) : static_cast<T>(rng.uniform(-1.0, 1.0));
  }
  return m;
}

inline std::vector<LidarPoint> random_points(std::size_t n, int rows, Rng & rng, double x0,
                                             double x1, double y0, double y1)
{
  std::vector<LidarPoint> pts(n);
  for (auto & p : pts) {
    p.x = rng.uniform(x0, x1);
    p.y = rng.uniform(y0, y1);
    p.z = rng.uniform(-1.0, 4.0);
    p.range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    p.intensity = rng.uniform();
    p.azimuth = rng.uniform(0.0, kTwoPi);
    p.laser_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
  }
  return pts;
}

template <typename T>
bool bit_equal(const BasicFeatureMap<T> & a, const BasicFeatureMap<T> & b)
{
  if (!a.same_shape(b)) {
    return false;
  }
  return std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

inline double max_abs_diff(const BasicFeatureMap<double> & a, const BasicFeatureMap<double> & b)
{
  if (!a.same_shape(b)) {
    return std::numeric_limits<double>::infinity();
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace detail

struct SelfcheckOptions
{
  std::uint64_t seed{2024};
  /// Artifacts are written here when non-empty.
  std::filesystem::path out_dir;
  int projection_cases{20};
  int conv_cases{10};
  int gradient_frames{2};
  int iou_pairs{20};
  int iou_samples{200000};
  int fov_scenes{5};
};

/// Runs every oracle and invariant check. Reports contain no timings.
inline SelfcheckReport run_selfcheck(const SelfcheckOptions & opt,
                                     std::vector<std::filesystem::path> * artifacts = nullptr)
{
  SelfcheckReport report;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
  }
  auto run = [&](const std::string & name, const std::function<bool(CheckResult &)> & body) {
    CheckResult r;
    r.name = name;
    try {
      r.passed = body(r);
      if (!r.passed && r.failure.empty()) {
        r.failure = "invariant violated";
      }
    } catch (const std::exception & e) {
      r.passed = false;
      r.failure = std::string("exception: ") + e.what();
    }
    report.checks.push_back(std::move(r));
  };
  auto put = [](CheckResult & r, const std::string & k, double v) {
    r.metrics.set(k, format_double(v));
  };

  run("shape.bev", [&](CheckResult & r) {
    const GridSpec a = atg4d_preset().grid;
    const GridSpec n = nuscenes_preset().grid;
    const int ta = atg4d_preset().sweeps * a.layers();
    const int tn = nuscenes_preset().sweeps * n.layers();
    r.metrics.set("atg4d", std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + "x" +
                             std::to_string(ta));
    r.metrics.set("nuscenes", std::to_string(n.rows()) + "x" + std::to_string(n.cols()) + "x" +
                                std::to_string(tn));
    return a.rows() == 938 && a.cols() == 625 && ta == 160 && n.rows() == 800 &&
           n.cols() == 800 && tn == 400;
  });

  run("shape.rv", [&](CheckResult & r) {
    bool ok = true;
    for (const Preset & p : {atg4d_preset(), nuscenes_preset()}) {
      Scene s;
      s.ego_motion.segments = {{4.0, 0.0, 0.0}};
      const FeatureMap rv = build_rv_image(simulate_sweep(s, p.lidar, 0.0), p.rv());
      r.metrics.set(p.name, std::to_string(rv.width()) + "x" + std::to_string(rv.height()));
      ok = ok && rv.width() == 2048 && rv.height() == (p.name == "atg4d" ? 64 : 32);
    }
    return ok;
  });

  run("projection.camera_to_rv", [&](CheckResult & r) {
    Rng rng(opt.seed + 1);
    std::size_t points = 0;
    for (int i = 0; i < opt.projection_cases; ++i) {
      const int w = 40 + static_cast<int>(rng.below(80));
      const int h = 30 + static_cast<int>(rng.below(60));
      const CameraModel cam = CameraModel::from_fov(w, h, rng.uniform(50.0, 110.0),
                                                    static_cast<int>(rng.below(h / 3 + 1)));
      const CameraView cv{cam, 1 << rng.below(4)};
      const CellIndex ext = view_extent(cv);
      const auto src = detail::random_map<float>(ViewTag::kCamera, ext.row, ext.col,
                                                 1 + static_cast<int>(rng.below(8)), rng, 0.0, cv);
      const RvSpec rv{2 + static_cast<int>(rng.below(15)), 8 + static_cast<int>(rng.below(121)), {}};
      const auto pts = detail::random_points(rng.below(10001), rv.rows, rng, -20.0, 60.0, -30.0, 30.0);
      points += pts.size();
      const auto fast = project_features(src, pts, rv);
      const auto slow = reference::project_brute_force(src, pts, rv);
      if (!detail::bit_equal(fast.features, slow)) {
        r.failure = "case " + std::to_string(i) + " differs from the brute-force oracle";
        return false;
      }
    }
    r.metrics.set("cases", std::to_string(opt.projection_cases));
    r.metrics.set("points", std::to_string(points));
    return true;
  });

  run("projection.rv_to_bev", [&](CheckResult & r) {
    Rng rng(opt.seed + 2);
    for (int i = 0; i < opt.projection_cases; ++i) {
      const RvSpec rv{2 + static_cast<int>(rng.below(63)), 16 + static_cast<int>(rng.below(2033)), {}};
      const auto src =
        detail::random_map<float>(ViewTag::kRv, rv.rows, rv.cols, 1 + static_cast<int>(rng.below(8)),
                                  rng, 0.0, rv);
      const double cell = rng.uniform(0.4, 1.2);
      const GridSpec g = GridSpec::centered(rng.uniform(10.0, 30.0), rng.uniform(10.0, 30.0), 3.2,
                                            cell, cell, 0.2);
      const auto pts =
        detail::random_points(rng.below(10001), rv.rows, rng, g.x_min - 2.0, g.x_max() + 2.0,
                              g.y_min - 2.0, g.y_max() + 2.0);
      const auto fast = project_features(src, pts, g);
      const auto slow = reference::project_brute_force(src, pts, g);
      if (!detail::bit_equal(fast.features, slow)) {
        r.failure = "case " + std::to_string(i) + " differs from the brute-force oracle";
        return false;
      }
    }
    r.metrics.set("cases", std::to_string(opt.projection_cases));
    return true;
  });

  run("conv.forward", [&](CheckResult & r) {
    Rng rng(opt.seed + 3);
    double worst = 0.0;
    for (int i = 0; i < opt.conv_cases; ++i) {
      ConvLayerSpec s;
      s.in_channels = 1 + static_cast<int>(rng.below(8));
      s.out_channels = 1 + static_cast<int>(rng.below(8));
      s.kernel_h = 1 + 2 * static_cast<int>(rng.below(3));
      s.kernel_w = 1 + 2 * static_cast<int>(rng.below(3));
      s.stride_h = 1 + static_cast<int>(rng.below(2));
      s.stride_w = 1 + static_cast<int>(rng.below(2));
      s.activation = rng.bernoulli(0.5) ? Activation::kRelu : Activation::kIdentity;
      const ConvParams<double> prm{detail::random_values<double>(s.kernel_size(), rng),
                                   detail::random_values<double>(static_cast<std::size_t>(s.out_channels), rng)};
      const auto in = detail::random_map<double>(ViewTag::kBev, 3 + static_cast<int>(rng.below(14)),
                                                 3 + static_cast<int>(rng.below(14)), s.in_channels,
                                                 rng, rng.uniform(0.0, 0.99));
      const auto ref = reference::conv2d(in, s, prm);
      for (ConvAlgorithm a : {ConvAlgorithm::kDense, ConvAlgorithm::kSparse}) {
        worst = std::max(worst, detail::max_abs_diff(conv2d_forward(in, s, prm, a), ref));
      }
      ConvLayerSpec t = s;
      t.kernel_w = t.stride_w + 2 * static_cast<int>(rng.below(2));
      t.kernel_h = t.stride_h + 2 * static_cast<int>(rng.below(2));
      const ConvParams<double> tp{detail::random_values<double>(t.kernel_size(), rng), prm.bias};
      worst = std::max(worst, detail::max_abs_diff(conv_transpose2d_forward(in, t, tp),
                                                   reference::conv_transpose2d(in, t, tp)));
    }
    put(r, "max_abs_error", worst);
    return worst < 1e-10;
  });

  run("loss.closed_form", [&](CheckResult & r) {
    const LabelSet labels = scene_labels(three_actor_scene(), 0.0, 30);
    CellTargets t = encode_targets(labels, round_trip_grid(), 4, 30);
    const FgCell first = t.fg.front();
    t.fg = {first};
    std::fill(t.fg_index.begin(), t.fg_index.end(), -1);
    t.fg_index[static_cast<std::size_t>(first.row) * t.cols + first.col] = 0;
    const LossBreakdown b = total_loss(constant_center_error_outputs(t, 0.3), t);
    const auto & cl = b.classes[static_cast<std::size_t>(first.cls)];
    double center = 0.0;
    for (double v : cl.center) {
      center += v;
    }
    double expected = 0.0;
    for (int h = 0; h <= 30; ++h) {
      expected += smooth_l1(0.3) * std::pow(kDefaultDecay, h);
    }
    put(r, "center_term", center);
    put(r, "expected", expected);
    double terms = 0.0;
    for (const auto & c : b.classes) {
      terms += c.sum();
    }
    return std::abs(center - expected) < 1e-5 && std::abs(b.total - terms) < 1e-9;
  });

  run("loss.gradients", [&](CheckResult & r) {
    Rng rng(opt.seed + 4);
    double worst = 0.0;
    for (int f = 0; f < opt.gradient_frames; ++f) {
      const GridSpec g{6.4, 6.4, 3.2, 0.16, 0.16, 0.2, -3.2, -3.2, -0.1};
      LabelSet labels;
      labels.horizon = 30;
      ActorLabel a;
      a.cls = kAllClasses[f % kNumClasses];
      a.box = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(2.0, 4.0),
               rng.uniform(1.0, 2.0), rng.uniform(-kPi, kPi)};
      for (int h = 1; h <= 30; ++h) {
        a.waypoints.push_back({a.box.cx + 0.1 * h, a.box.cy, a.box.heading + 0.01 * h});
      }
      labels.actors.push_back(a);
      const CellTargets t = encode_targets(labels, g, 4, 30);
      CellOutputs o(t.grid, t.layout);
      for (std::size_t i = 0; i < o.values.size(); ++i) {
        o.values[i] = rng.uniform(-3.0, 3.0);
      }
      for (int row = 0; row < o.rows; ++row) {
        for (int col = 0; col < o.cols; ++col) {
          for (int k = 0; k < kNumClasses; ++k) {
            o.at(row, col, o.layout.prob(k)) = rng.uniform(0.05, 0.95);
          }
        }
      }
      // Keep smooth-l1 residuals away from the |d| = 1 kink and from 0.
      for (const auto & fg : t.fg) {
        double * blk = o.cell(fg.row, fg.col) + o.layout.block(fg.cls);
        for (int ch = 1; ch < o.layout.per_class(); ++ch) {
          const double mag = rng.bernoulli(0.5) ? rng.uniform(0.05, 0.95) : rng.uniform(1.05, 3.0);
          blk[ch] = fg.target[static_cast<std::size_t>(ch)] + (rng.bernoulli(0.5) ? mag : -mag);
        }
      }
      worst = std::max(worst, verify_gradients(o, t).max_relative_error);
    }
    put(r, "max_relative_error", worst);
    return worst < 1e-4;
  });

  run("loss.round_trip", [&](CheckResult & r) {
    const LabelSet labels = scene_labels(three_actor_scene(), 0.0, 30);
    const CellTargets t = encode_targets(labels, round_trip_grid(), 4, 30);
    FitOptions fo;
    fo.steps = 1000;
    fo.seed = opt.seed;
    const FitResult fit = fit_outputs(t, fo);
    const auto dets = decode_detections(fit.outputs, 0.5);
    const auto gts = gt_boxes_from_labels(labels);
    bool ok = true;
    double worst_center = 0.0;
    double worst_heading = 0.0;
    for (ActorClass cls : kAllClasses) {
      std::vector<DetBox> d;
      std::vector<GtBox> g;
      for (const auto & x : dets) {
        if (x.cls == cls) {
          d.push_back(x);
        }
      }
      for (const auto & x : gts) {
        if (x.cls == cls) {
          g.push_back(x);
        }
      }
      const auto m = match_detections(d, g, kClassIouThresholds[static_cast<std::size_t>(class_index(cls))]);
      const double ap = average_precision(m);
      put(r, std::string(class_name(cls)) + ".ap", ap);
      ok = ok && ap == 1.0;
      for (const auto & gt : g) {
        double best = 1e300;
        double heading = 0.0;
        for (const auto & x : d) {
          const double dist = norm(x.box.center() - gt.box.center());
          if (dist < best) {
            best = dist;
            heading = std::abs(normalize_angle(x.box.heading - gt.box.heading));
          }
        }
        worst_center = std::max(worst_center, best);
        worst_heading = std::max(worst_heading, heading);
      }
    }
    put(r, "final_loss", fit.loss_history.back());
    put(r, "max_center_error_m", worst_center);
    put(r, "max_heading_error_deg", worst_heading * 180.0 / kPi);
    return ok && worst_center <= 0.5 * t.grid.voxel_length && worst_heading * 180.0 / kPi <= 1.0;
  });

  run("iou.oracle", [&](CheckResult & r) {
    const double third = rotated_iou({0.0, 0.0, 1.0, 1.0, 0.0}, {0.5, 0.0, 1.0, 1.0, 0.0});
    put(r, "offset_squares", third);
    Rng rng(opt.seed + 5);
    double worst_mc = 0.0;
    double worst_sym = 0.0;
    for (int i = 0; i < opt.iou_pairs; ++i) {
      const RotatedBox2D a{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 4.0),
                           rng.uniform(0.5, 2.0), rng.uniform(-kPi, kPi)};
      const RotatedBox2D b{a.cx + rng.uniform(-1.5, 1.5), a.cy + rng.uniform(-1.5, 1.5),
                           rng.uniform(0.5, 4.0), rng.uniform(0.5, 2.0), rng.uniform(-kPi, kPi)};
      const double iou = rotated_iou(a, b);
      worst_mc = std::max(worst_mc, std::abs(iou - reference::monte_carlo_iou(a, b, opt.iou_samples, rng)));
      worst_sym = std::max(worst_sym, std::abs(iou - rotated_iou(b, a)));
      const Pose2 m{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-kPi, kPi)};
      auto move = [&](const RotatedBox2D & x) {
        const Point2 c = m.apply(x.center());
        return RotatedBox2D{c.x, c.y, x.length, x.width, x.heading + m.yaw};
      };
      worst_sym = std::max(worst_sym, std::abs(iou - rotated_iou(move(a), move(b))));
    }
    put(r, "max_monte_carlo_error", worst_mc);
    put(r, "max_symmetry_error", worst_sym);
    return std::abs(third - 1.0 / 3.0) < 1e-12 && worst_mc < 0.01 && worst_sym < 1e-9;
  });

  run("metrics.protocol", [&](CheckResult & r) {
    MatchResult m;
    m.num_gt = 2;
    m.entries = {{0.9, true, 0}, {0.8, false, -1}, {0.7, true, 1}};
    const double ap = average_precision(m);
    MatchResult five;
    five.num_gt = 5;
    for (double s : {0.9, 0.8, 0.7, 0.6, 0.5}) {
      five.entries.push_back({s, true, 0});
    }
    const double thr = operating_threshold_for_recall(five, 0.8);
    const std::vector<TpPair> unit{{{1.0, 0.0}, {0.0, 0.0}}, {{0.0, 2.0}, {0.0, 3.0}}};
    const std::vector<TpPair> mixed{{{0.5, 0.0}, {0.0, 0.0}}, {{0.0, 1.5}, {0.0, 0.0}}};
    const double de1 = displacement_error_cm(unit);
    const double de2 = displacement_error_cm(mixed);
    bool unattainable = false;
    MatchResult half;
    half.num_gt = 2;
    half.entries = {{0.9, true, 0}};
    try {
      (void)operating_threshold_for_recall(half, 0.8);
    } catch (const RecallUnattainable &) {
      unattainable = true;
    }
    put(r, "ap_hand", ap);
    put(r, "operating_threshold", thr);
    put(r, "de_unit_cm", de1);
    put(r, "de_mixed_cm", de2);
    return std::abs(ap - 5.0 / 6.0) < 1e-9 && thr == 0.6 && de1 == 100.0 && de2 == 100.0 &&
           unattainable;
  });

  run("fov.rear_excluded", [&](CheckResult & r) {
    const Preset p = atg4d_preset();
    int rear = 0;
    int front_kept = 0;
    for (int i = 0; i < opt.fov_scenes; ++i) {
      SceneConfig cfg = p.scene;
      const Scene s = build_scene(cfg, opt.seed + 100 + static_cast<std::uint64_t>(i));
      const auto gts = gt_boxes_from_labels(scene_labels(s, 0.0, 30));
      const auto kept = filter_camera_fov(gts, p.camera);
      for (const auto & g : gts) {
        const bool in = in_camera_fov(g.box, p.camera);
        if (g.box.cx <= 0.0) {
          ++rear;
          if (in) {
            r.failure = "rear actor " + std::to_string(g.id) + " kept";
            return false;
          }
        }
      }
      front_kept += static_cast<int>(kept.size());
      const auto pano = filter_camera_fov(gts, CameraModel::panoramic(1024, 256));
      if (pano.size() != gts.size()) {
        r.failure = "panoramic camera is not the identity";
        return false;
      }
    }
    r.metrics.set("rear_actors", std::to_string(rear));
    r.metrics.set("kept_actors", std::to_string(front_kept));
    return rear > 0;
  });

  std::vector<std::filesystem::path> written;
  run("bundle.round_trip", [&](CheckResult & r) {
    const Preset p = desk_preset();
    const io::FrameBundle b = make_bundle(p, opt.seed);
    const std::filesystem::path base =
      opt.out_dir.empty() ? std::filesystem::temp_directory_path() / "mvfuse_selfcheck" : opt.out_dir;
    const auto first = io::write_bundle(b, base / "bundle");
    const io::FrameBundle back = io::read_bundle(base / "bundle", p.name);
    const auto second = io::write_bundle(back, base / "bundle_rewrite");
    bool same = back == b && first.size() == second.size();
    for (std::size_t i = 0; same && i < first.size(); ++i) {
      same = io::read_file(first[i]) == io::read_file(second[i]);
    }
    if (opt.out_dir.empty()) {
      std::filesystem::remove_all(base);
    } else {
      written.insert(written.end(), first.begin(), first.end());
      std::filesystem::remove_all(base / "bundle_rewrite");
    }
    r.metrics.set("files", std::to_string(first.size()));
    return same;
  });

  run("forward.desk", [&](CheckResult & r) {
    const Preset p = desk_preset();
    const io::FrameBundle b = make_bundle(p, opt.seed);
    bool ok = true;
    for (bool cam : {false, true}) {
      const MultiViewNet net = MultiViewNet::seeded(p.network(cam), opt.seed);
      const FrameInputs in = prepare_inputs(b, p, cam);
      const ForwardTrace tr = run_forward(net, in);
      const ShapePlan plan = plan_shapes(net.config(), p.grid, p.rv(), p.camera);
      const std::string tag = cam ? "lc_mv" : "l_mv";
      const bool shapes = shape_mismatches(tr, plan).empty();
      const auto map = outputs_to_map(tr.outputs);
      const auto bytes = io::encode_fmap(map);
      r.metrics.set(tag + ".outputs_fnv1a", io::hex64(io::fnv1a(bytes)));
      r.metrics.set(tag + ".shapes", shapes ? "ok" : "mismatch");
      ok = ok && shapes && tr.outputs.probabilities_valid() && map.all_finite();
      if (!opt.out_dir.empty()) {
        const auto path = opt.out_dir / ("forward_" + tag + ".fmap");
        io::write_file(path, bytes);
        written.push_back(path);
      }
    }
    return ok;
  });

  if (!opt.out_dir.empty()) {
    const auto path = opt.out_dir / "selfcheck_report.txt";
    io::write_text(path, report.to_text());
    written.push_back(path);
  }
  if (artifacts != nullptr) {
    *artifacts = written;
  }
  return report;
}

}  // namespace mvfuse

#endif  // MVFUSE_SELFCHECK_HPP_
