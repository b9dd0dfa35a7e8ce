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

#ifndef MVFUSE_EVAL_HPP_
#define MVFUSE_EVAL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/cell_outputs.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/kv.hpp"
#include "mvfuse/projection.hpp"
#include "mvfuse/scene.hpp"

namespace mvfuse
{

inline constexpr double kDefaultNmsIou = 0.3;
inline constexpr double kDefaultRecallTarget = 0.8;

/// Matching IoU thresholds indexed by class: vehicle, pedestrian, bicyclist.
inline constexpr std::array<double, kNumClasses> kClassIouThresholds{0.7, 0.1, 0.3};

struct DetBox
{
  ActorClass cls{ActorClass::kVehicle};
  double score{0.0};
  RotatedBox2D box{};
  std::vector<Pose2> trajectory;  // h = 1..H
  int row{0};
  int col{0};
};

struct GtBox
{
  int id{0};
  ActorClass cls{ActorClass::kVehicle};
  RotatedBox2D box{};
  std::vector<Pose2> trajectory;  // h = 1..H
};

inline std::vector<GtBox> gt_boxes_from_labels(const LabelSet & labels)
{
  std::vector<GtBox> out;
  out.reserve(labels.actors.size());
  for (const auto & a : labels.actors) {
    out.push_back({a.id, a.cls, a.box, a.waypoints});
  }
  return out;
}

/// Intersection over union of two rotated rectangles; 0 when either box is
/// degenerate.
inline double rotated_iou(const RotatedBox2D & a, const RotatedBox2D & b)
{
  constexpr double kMinArea = 1e-12;
  const double area_a = a.area();
  const double area_b = b.area();
  if (!(area_a > kMinArea) || !(area_b > kMinArea)) {
    return 0.0;
  }
  const double inter = box_intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  if (!(uni > kMinArea)) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Greedy suppression: boxes are visited by descending score, ties broken by
/// (row, col); a box is dropped when its IoU with a kept box exceeds `iou`.
inline std::vector<DetBox> rotated_nms(std::vector<DetBox> boxes, double iou)
{
  std::stable_sort(boxes.begin(), boxes.end(), [](const DetBox & a, const DetBox & b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    if (a.row != b.row) {
      return a.row < b.row;
    }
    return a.col < b.col;
  });
  auto radius = [](const RotatedBox2D & b) { return 0.5 * std::hypot(b.length, b.width); };
  std::vector<DetBox> kept;
  std::vector<double> kept_radius;
  for (auto & d : boxes) {
    const double rd = radius(d.box);
    bool suppressed = false;
    for (std::size_t i = 0; i < kept.size() && !suppressed; ++i) {
      const double reach = rd + kept_radius[i];
      const double dx = kept[i].box.cx - d.box.cx;
      const double dy = kept[i].box.cy - d.box.cy;
      // Disjoint bounding circles cannot overlap.
      if (iou >= 0.0 && dx * dx + dy * dy >= reach * reach) {
        continue;
      }
      suppressed = rotated_iou(kept[i].box, d.box) > iou;
    }
    if (!suppressed) {
      kept_radius.push_back(rd);
      kept.push_back(std::move(d));
    }
  }
  return kept;
}

/// One candidate per (cell, class) with probability >= score_floor and a
/// positive finite size; suppressed per class. Output is grouped by class and
/// sorted by descending score within a class.
inline std::vector<DetBox> decode_detections(const CellOutputs & out, double score_floor,
                                             double nms_iou = kDefaultNmsIou)
{
  const OutputLayout & L = out.layout;
  std::vector<std::vector<DetBox>> per_class(static_cast<std::size_t>(L.num_classes));
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      const Point2 cc = out.grid.cell_center(r, c);
      for (int k = 0; k < L.num_classes; ++k) {
        const double p = out.at(r, c, L.prob(k));
        if (!(p >= score_floor)) {
          continue;
        }
        const double len = out.at(r, c, L.length(k));
        const double wid = out.at(r, c, L.width(k));
        const double x = cc.x + out.at(r, c, L.center_x(k, 0));
        const double y = cc.y + out.at(r, c, L.center_y(k, 0));
        const double th = std::atan2(out.at(r, c, L.heading_sin(k, 0)),
                                     out.at(r, c, L.heading_cos(k, 0)));
        if (!(len > 0.0) || !(wid > 0.0) || !std::isfinite(len) || !std::isfinite(wid) ||
            !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(th)) {
          continue;
        }
        DetBox d;
        d.cls = kAllClasses[static_cast<std::size_t>(k)];
        d.score = p;
        d.box = RotatedBox2D::make(x, y, len, wid, th);
        d.row = r;
        d.col = c;
        d.trajectory.reserve(static_cast<std::size_t>(L.horizon));
        for (int h = 1; h <= L.horizon; ++h) {
          d.trajectory.push_back({cc.x + out.at(r, c, L.center_x(k, h)),
                                  cc.y + out.at(r, c, L.center_y(k, h)),
                                  std::atan2(out.at(r, c, L.heading_sin(k, h)),
                                             out.at(r, c, L.heading_cos(k, h)))});
        }
        per_class[static_cast<std::size_t>(k)].push_back(std::move(d));
      }
    }
  }
  std::vector<DetBox> all;
  for (auto & v : per_class) {
    auto kept = rotated_nms(std::move(v), nms_iou);
    all.insert(all.end(), std::make_move_iterator(kept.begin()),
               std::make_move_iterator(kept.end()));
  }
  return all;
}

struct MatchEntry
{
  double score{0.0};
  bool tp{false};
  int gt_id{-1};
  /// Final-horizon center distance in meters for true positives with
  /// trajectories on both sides; NaN otherwise.
  double final_displacement{std::numeric_limits<double>::quiet_NaN()};
};

struct MatchResult
{
  std::vector<MatchEntry> entries;  // descending score
  int num_gt{0};
  int unmatched_gt{0};
};

/// Greedy matching by descending score (stable for ties). A detection is a
/// true positive when its best-IoU unmatched ground truth reaches `iou_thresh`.
inline MatchResult match_detections(std::span<const DetBox> dets, std::span<const GtBox> gts,
                                    double iou_thresh)
{
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<char> used(gts.size(), 0);
  MatchResult res;
  res.num_gt = static_cast<int>(gts.size());
  for (std::size_t i : order) {
    const DetBox & d = dets[i];
    double best = -1.0;
    std::size_t best_j = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j]) {
        continue;
      }
      const double iou = rotated_iou(d.box, gts[j].box);
      if (iou > best) {
        best = iou;
        best_j = j;
      }
    }
    MatchEntry e;
    e.score = d.score;
    if (best_j < gts.size() && best >= iou_thresh) {
      used[best_j] = 1;
      e.tp = true;
      e.gt_id = gts[best_j].id;
      const auto & gt = gts[best_j];
      if (!d.trajectory.empty() && d.trajectory.size() == gt.trajectory.size()) {
        const Pose2 & p = d.trajectory.back();
        const Pose2 & q = gt.trajectory.back();
        e.final_displacement = std::hypot(p.tx - q.tx, p.ty - q.ty);
      }
    }
    res.entries.push_back(e);
  }
  res.unmatched_gt =
    res.num_gt - static_cast<int>(std::count_if(res.entries.begin(), res.entries.end(),
                                                [](const MatchEntry & e) { return e.tp; }));
  return res;
}

namespace detail
{

struct Pooled
{
  std::vector<MatchEntry> entries;
  int num_gt{0};
};

inline Pooled pool(std::span<const MatchResult> results)
{
  Pooled p;
  for (const auto & r : results) {
    p.entries.insert(p.entries.end(), r.entries.begin(), r.entries.end());
    p.num_gt += r.num_gt;
  }
  std::stable_sort(p.entries.begin(), p.entries.end(),
                   [](const MatchEntry & a, const MatchEntry & b) { return a.score > b.score; });
  return p;
}

}  // namespace detail

/// All-point area under the precision-recall curve with a monotone precision
/// envelope, pooled over frames. Zero when there is no ground truth.
inline double average_precision(std::span<const MatchResult> results)
{
  const auto p = detail::pool(results);
  if (p.num_gt == 0 || p.entries.empty()) {
    return 0.0;
  }
  const std::size_t n = p.entries.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += p.entries[i].tp ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(p.num_gt);
  }
  for (std::size_t i = n - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

inline double average_precision(const MatchResult & result)
{
  return average_precision(std::span<const MatchResult>(&result, 1));
}

class RecallUnattainable : public std::runtime_error
{
public:
  RecallUnattainable(double target, double best)
  : std::runtime_error("recall unattainable: target " + format_double(target) +
                       ", best achievable " + format_double(best)),
    best_recall(best)
  {
  }
  double best_recall;
};

/// Highest score threshold s such that detections scoring >= s reach the
/// recall target. Throws RecallUnattainable otherwise.
inline double operating_threshold_for_recall(std::span<const MatchResult> results,
                                             double recall_target = kDefaultRecallTarget)
{
  const auto p = detail::pool(results);
  int tp = 0;
  std::size_t i = 0;
  while (i < p.entries.size()) {
    const double s = p.entries[i].score;
    while (i < p.entries.size() && p.entries[i].score == s) {
      tp += p.entries[i].tp ? 1 : 0;
      ++i;
    }
    if (p.num_gt > 0 && static_cast<double>(tp) >= recall_target * p.num_gt - 1e-9) {
      return s;
    }
  }
  const double best = p.num_gt > 0 ? static_cast<double>(tp) / p.num_gt : 0.0;
  throw RecallUnattainable(recall_target, best);
}

inline double operating_threshold_for_recall(const MatchResult & result,
                                             double recall_target = kDefaultRecallTarget)
{
  return operating_threshold_for_recall(std::span<const MatchResult>(&result, 1), recall_target);
}

struct TpPair
{
  Point2 predicted;
  Point2 ground_truth;
};

/// Mean Euclidean distance in centimeters; NaN for an empty set.
inline double displacement_error_cm(std::span<const TpPair> pairs)
{
  if (pairs.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double sum = 0.0;
  for (const auto & p : pairs) {
    sum += norm(p.predicted - p.ground_truth);
  }
  return 100.0 * sum / static_cast<double>(pairs.size());
}

/// Mean final-horizon displacement over true positives scoring >= threshold,
/// in centimeters; NaN when there are none.
inline double displacement_error_cm(std::span<const MatchResult> results, double threshold)
{
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto & r : results) {
    for (const auto & e : r.entries) {
      if (e.tp && e.score >= threshold && std::isfinite(e.final_displacement)) {
        sum += e.final_displacement;
        ++n;
      }
    }
  }
  if (n == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return 100.0 * sum / static_cast<double>(n);
}

/// Half-open band of center distance from the ego origin, meters.
struct RangeBand
{
  double lo{0.0};
  double hi{0.0};

  std::string name() const { return format_double(lo) + "-" + format_double(hi); }
  bool contains(const RotatedBox2D & b) const
  {
    const double r = std::hypot(b.cx, b.cy);
    return r >= lo && r < hi;
  }
};

/// True when the box center, lifted to the camera mount height, lands on a
/// valid pixel of the cropped image.
inline bool in_camera_fov(const RotatedBox2D & box, const CameraModel & cam)
{
  return camera_pixel_of(Point3{box.cx, box.cy, cam.mount_height}, cam).has_value();
}

template <typename Item>
std::vector<Item> filter_camera_fov(std::span<const Item> items, const CameraModel & cam)
{
  std::vector<Item> out;
  for (const auto & it : items) {
    if (in_camera_fov(it.box, cam)) {
      out.push_back(it);
    }
  }
  return out;
}

template <typename Item>
std::vector<Item> filter_camera_fov(const std::vector<Item> & items, const CameraModel & cam)
{
  return filter_camera_fov(std::span<const Item>(items), cam);
}

template <typename Item>
std::vector<Item> filter_range(std::span<const Item> items, const RangeBand & band)
{
  std::vector<Item> out;
  for (const auto & it : items) {
    if (band.contains(it.box)) {
      out.push_back(it);
    }
  }
  return out;
}

template <typename Item>
std::vector<Item> filter_range(const std::vector<Item> & items, const RangeBand & band)
{
  return filter_range(std::span<const Item>(items), band);
}

struct EvalFrame
{
  std::vector<DetBox> detections;
  std::vector<GtBox> ground_truth;
};

struct EvalOptions
{
  std::array<double, kNumClasses> iou_thresholds{kClassIouThresholds};
  double recall_target{kDefaultRecallTarget};
  std::optional<CameraModel> camera;  // FOV slices are produced when set
  std::vector<RangeBand> bands;
};

/// Metrics of one class on one slice. `ap` is -1 without ground truth;
/// `de_cm` and `operating_threshold` are -1 when the recall target is not
/// reached.
struct SliceMetrics
{
  std::string cls;
  std::string slice;
  double ap{-1.0};
  double de_cm{-1.0};
  bool recall_attainable{false};
  double operating_threshold{-1.0};
  int num_gt{0};
  int num_det{0};
  int num_tp{0};
};

struct EvalReport
{
  std::vector<SliceMetrics> slices;

  const SliceMetrics & find(const std::string & cls, const std::string & slice) const
  {
    for (const auto & s : slices) {
      if (s.cls == cls && s.slice == slice) {
        return s;
      }
    }
    throw std::out_of_range("EvalReport: no slice " + cls + "/" + slice);
  }

  std::string to_text() const
  {
    KeyValues kv;
    for (const auto & s : slices) {
      const std::string p = s.cls + "." + s.slice + ".";
      kv.set(p + "ap", format_fixed(s.ap, 6));
      kv.set(p + "de_cm", format_fixed(s.de_cm, 3));
      kv.set(p + "recall_attainable", s.recall_attainable ? "1" : "0");
      kv.set(p + "operating_threshold", format_fixed(s.operating_threshold, 6));
      kv.set(p + "num_gt", std::to_string(s.num_gt));
      kv.set(p + "num_det", std::to_string(s.num_det));
      kv.set(p + "num_tp", std::to_string(s.num_tp));
    }
    return kv.to_text();
  }
};

inline SliceMetrics evaluate_slice(std::span<const MatchResult> results, std::string cls,
                                   std::string slice, double recall_target)
{
  SliceMetrics m;
  m.cls = std::move(cls);
  m.slice = std::move(slice);
  for (const auto & r : results) {
    m.num_gt += r.num_gt;
    m.num_det += static_cast<int>(r.entries.size());
    for (const auto & e : r.entries) {
      m.num_tp += e.tp ? 1 : 0;
    }
  }
  if (m.num_gt > 0) {
    m.ap = average_precision(results);
  }
  try {
    m.operating_threshold = operating_threshold_for_recall(results, recall_target);
    m.recall_attainable = true;
    const double de = displacement_error_cm(results, m.operating_threshold);
    m.de_cm = std::isfinite(de) ? de : -1.0;
  } catch (const RecallUnattainable &) {
    m.recall_attainable = false;
  }
  return m;
}

/// Per-class metrics on the slice "all" and, with a camera, on "fov" plus one
/// "fov_<lo>-<hi>" slice per range band.
inline EvalReport evaluate(std::span<const EvalFrame> frames, const EvalOptions & opt)
{
  struct Slice
  {
    std::string name;
    bool fov;
    std::optional<RangeBand> band;
  };
  std::vector<Slice> slices{{"all", false, std::nullopt}};
  if (opt.camera) {
    slices.push_back({"fov", true, std::nullopt});
    for (const auto & b : opt.bands) {
      slices.push_back({"fov_" + b.name(), true, b});
    }
  }
  EvalReport report;
  for (ActorClass cls : kAllClasses) {
    const double thr = opt.iou_thresholds[static_cast<std::size_t>(class_index(cls))];
    for (const auto & s : slices) {
      std::vector<MatchResult> results;
      for (const auto & f : frames) {
        std::vector<DetBox> dets;
        std::vector<GtBox> gts;
        for (const auto & d : f.detections) {
          if (d.cls == cls && (!s.fov || in_camera_fov(d.box, *opt.camera)) &&
              (!s.band || s.band->contains(d.box))) {
            dets.push_back(d);
          }
        }
        for (const auto & g : f.ground_truth) {
          if (g.cls == cls && (!s.fov || in_camera_fov(g.box, *opt.camera)) &&
              (!s.band || s.band->contains(g.box))) {
            gts.push_back(g);
          }
        }
        results.push_back(match_detections(dets, gts, thr));
      }
      report.slices.push_back(
        evaluate_slice(results, std::string(class_name(cls)), s.name, opt.recall_target));
    }
  }
  return report;
}

}  // namespace mvfuse

#endif  // MVFUSE_EVAL_HPP_
