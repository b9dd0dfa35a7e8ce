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
#include <set>

#include "mvfuse.hpp"
#include "oracles.hpp"

using namespace mvfuse;

namespace
{

RotatedBox2D box(double x, double y, double l, double w, double th = 0.0)
{
  return RotatedBox2D::make(x, y, l, w, th);
}

DetBox det(double score, RotatedBox2D b, ActorClass cls = ActorClass::kVehicle)
{
  DetBox d;
  d.cls = cls;
  d.score = score;
  d.box = b;
  return d;
}

GtBox gt(int id, RotatedBox2D b, ActorClass cls = ActorClass::kVehicle)
{
  GtBox g;
  g.id = id;
  g.cls = cls;
  g.box = b;
  return g;
}

MatchResult ranked(std::vector<bool> tp, std::vector<double> scores, int num_gt)
{
  MatchResult r;
  r.num_gt = num_gt;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    MatchEntry e;
    e.score = scores[i];
    e.tp = tp[i];
    r.entries.push_back(e);
  }
  return r;
}

/// Random box with sides in [0.5, 5] and center in [-2, 2]^2.
RotatedBox2D random_box(Rng & rng)
{
  return box(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.5, 5.0),
             rng.uniform(0.5, 5.0), rng.uniform(-kPi, kPi));
}

}  // namespace

TEST(RotatedIou, ClosedFormCases)
{
  EXPECT_NEAR(rotated_iou(box(0, 0, 1, 1), box(0.5, 0, 1, 1)), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rotated_iou(box(1, 2, 4, 2, 0.3), box(1, 2, 4, 2, 0.3)), 1.0, 1e-12);
  EXPECT_EQ(rotated_iou(box(0, 0, 1, 1), box(5, 0, 1, 1)), 0.0);
  // Nested: area ratio.
  EXPECT_NEAR(rotated_iou(box(0, 0, 4, 2, 0.7), box(0.2, 0.1, 1, 0.5, 0.7)), 0.5 / 8.0, 1e-12);
  // Square rotated 45 degrees inside a larger square.
  EXPECT_NEAR(rotated_iou(box(0, 0, 4, 4), box(0, 0, 1, 1, kPi / 4)), 1.0 / 16.0, 1e-12);
}

TEST(RotatedIou, DegenerateBoxIsZero)
{
  RotatedBox2D flat{0.0, 0.0, 1e-9, 1e-9, 0.0};
  EXPECT_EQ(rotated_iou(flat, box(0, 0, 1, 1)), 0.0);
  EXPECT_EQ(rotated_iou(box(0, 0, 1, 1), flat), 0.0);
}

TEST(RotatedIou, SymmetricAndRigidMotionEquivariant)
{
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const RotatedBox2D a = random_box(rng);
    const RotatedBox2D b = random_box(rng);
    const double v = rotated_iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, rotated_iou(b, a), 1e-9);
    const Pose2 m{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), rng.uniform(-kPi, kPi)};
    auto moved = [&](const RotatedBox2D & r) {
      const Point2 c = m.apply(r.center());
      return box(c.x, c.y, r.length, r.width, r.heading + m.yaw);
    };
    EXPECT_NEAR(v, rotated_iou(moved(a), moved(b)), 1e-9);
  }
}

TEST(RotatedIou, AgreesWithSampling)
{
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    RotatedBox2D a = random_box(rng);
    RotatedBox2D b = random_box(rng);
    EXPECT_NEAR(rotated_iou(a, b), oracle::sampled_iou(a, b, 200000, 100 + i), 0.01);
  }
}

TEST(Nms, KeepsHigherScoreAndBreaksTiesByCell)
{
  DetBox a = det(0.9, box(0, 0, 4, 2));
  DetBox b = det(0.8, box(0, 0, 4, 2));
  auto kept = rotated_nms({b, a}, 0.3);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);

  DetBox c = det(0.5, box(0, 0, 4, 2));
  DetBox d = det(0.5, box(0.1, 0, 4, 2));
  c.row = 3;
  d.row = 2;
  kept = rotated_nms({c, d}, 0.3);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].row, 2);

  kept = rotated_nms({a, det(0.7, box(10, 0, 4, 2)), det(0.6, box(0, 1.5, 4, 2))}, 0.3);
  EXPECT_EQ(kept.size(), 3u);
}

TEST(Decode, SingleCellGivesItsParameters)
{
  const GridSpec g{12.8, 12.8, 3.2, 0.64, 0.64, 0.2, -6.4, -6.4, -0.1};
  const OutputLayout L{2, kNumClasses};
  CellOutputs o(g, L);
  const int k = 2;
  o.at(4, 7, L.prob(k)) = 0.95;
  o.at(4, 7, L.length(k)) = 1.8;
  o.at(4, 7, L.width(k)) = 0.7;
  o.at(4, 7, L.center_x(k, 0)) = 0.1;
  o.at(4, 7, L.center_y(k, 0)) = -0.2;
  o.at(4, 7, L.heading_sin(k, 0)) = std::sin(0.4) * 3.0;
  o.at(4, 7, L.heading_cos(k, 0)) = std::cos(0.4) * 3.0;
  o.at(4, 7, L.center_x(k, 2)) = 1.1;
  o.at(4, 7, L.heading_cos(k, 2)) = 1.0;
  // Below the floor, and a cell with an invalid size.
  o.at(0, 0, L.prob(0)) = 0.05;
  o.at(1, 1, L.prob(0)) = 0.99;
  o.at(1, 1, L.length(0)) = -1.0;
  o.at(1, 1, L.width(0)) = 1.0;
  const auto dets = decode_detections(o, 0.1);
  ASSERT_EQ(dets.size(), 1u);
  const DetBox & d = dets[0];
  EXPECT_EQ(d.cls, ActorClass::kBicyclist);
  EXPECT_EQ(d.score, 0.95);
  const double cx = -6.4 + 4.5 * 0.64;
  const double cy = -6.4 + 7.5 * 0.64;
  EXPECT_NEAR(d.box.cx, cx + 0.1, 1e-12);
  EXPECT_NEAR(d.box.cy, cy - 0.2, 1e-12);
  EXPECT_NEAR(d.box.heading, 0.4, 1e-12);
  EXPECT_EQ(d.box.length, 1.8);
  ASSERT_EQ(d.trajectory.size(), 2u);
  EXPECT_NEAR(d.trajectory[1].tx, cx + 1.1, 1e-12);
}

TEST(Decode, AdjacentDuplicatesCollapse)
{
  const GridSpec g{12.8, 12.8, 3.2, 0.64, 0.64, 0.2, -6.4, -6.4, -0.1};
  const OutputLayout L{0, kNumClasses};
  CellOutputs o(g, L);
  for (int r : {5, 6}) {
    o.at(r, 5, L.prob(0)) = r == 5 ? 0.9 : 0.8;
    o.at(r, 5, L.length(0)) = 4.0;
    o.at(r, 5, L.width(0)) = 2.0;
    o.at(r, 5, L.center_x(0, 0)) = r == 5 ? 0.32 : -0.32;
    o.at(r, 5, L.heading_cos(0, 0)) = 1.0;
  }
  const auto dets = decode_detections(o, 0.1);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].score, 0.9);
}

TEST(Matching, OneToOneAndDuplicates)
{
  const std::vector<GtBox> gts{gt(1, box(0, 0, 4, 2)), gt(2, box(10, 0, 4, 2))};
  const std::vector<DetBox> perfect{det(0.9, box(0, 0, 4, 2)), det(0.8, box(10, 0, 4, 2))};
  const MatchResult m = match_detections(perfect, gts, 0.7);
  EXPECT_TRUE(m.entries[0].tp && m.entries[1].tp);
  EXPECT_EQ(m.unmatched_gt, 0);

  const std::vector<DetBox> dup{det(0.6, box(0, 0, 4, 2)), det(0.9, box(0.05, 0, 4, 2))};
  const MatchResult d = match_detections(dup, gts, 0.7);
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.entries[0].score, 0.9);
  EXPECT_TRUE(d.entries[0].tp);
  EXPECT_FALSE(d.entries[1].tp);
  EXPECT_EQ(d.unmatched_gt, 1);
}

TEST(Matching, CompetingDetectionsFollowScoreOrder)
{
  // g1 at x = 0, g2 at x = 1.0; d1 sits between, d2 near g1, d3 near g2.
  const std::vector<GtBox> gts{gt(1, box(0, 0, 2, 2)), gt(2, box(1.0, 0, 2, 2))};
  const std::vector<DetBox> dets{det(0.9, box(0.6, 0, 2, 2)), det(0.8, box(0.05, 0, 2, 2)),
                                 det(0.7, box(1.1, 0, 2, 2))};
  // Hand enumeration: d1 has IoU 2.8/5.2 with g1 and 3.2/4.8 with g2, so it
  // takes g2; d2 takes g1; d3 is left with g1 at IoU 1.8/6.2.
  const MatchResult m = match_detections(dets, gts, 0.3);
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].gt_id, 2);
  EXPECT_EQ(m.entries[1].gt_id, 1);
  EXPECT_FALSE(m.entries[2].tp);
}

TEST(AveragePrecision, HandEnumeratedCurve)
{
  EXPECT_NEAR(average_precision(ranked({true, false, true}, {0.9, 0.8, 0.7}, 2)),
              0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-12);
  EXPECT_EQ(average_precision(ranked({true, true}, {0.9, 0.8}, 2)), 1.0);
  EXPECT_EQ(average_precision(ranked({}, {}, 3)), 0.0);
  EXPECT_EQ(average_precision(ranked({false}, {0.5}, 0)), 0.0);
}

TEST(AveragePrecision, PoolsFramesByScore)
{
  const std::vector<MatchResult> frames{ranked({true}, {0.9}, 1), ranked({false, true}, {0.8, 0.7}, 1)};
  EXPECT_NEAR(average_precision(frames), 5.0 / 6.0, 1e-12);
}

TEST(AveragePrecision, DependsOnlyOnRanking)
{
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<bool> tp;
    std::vector<double> s;
    std::vector<double> t;
    double score = 1.0;
    int n_tp = 0;
    for (int i = 0; i < 12; ++i) {
      score -= rng.uniform(0.01, 0.08);
      tp.push_back(rng.bernoulli(0.6));
      n_tp += tp.back() ? 1 : 0;
      s.push_back(score);
      t.push_back(std::exp(5.0 * score) - 3.0);
    }
    const int num_gt = n_tp + 2;
    const double ap = average_precision(ranked(tp, s, num_gt));
    EXPECT_NEAR(ap, average_precision(ranked(tp, t, num_gt)), 1e-12);
    tp.push_back(false);
    s.push_back(score - 0.01);
    EXPECT_LE(average_precision(ranked(tp, s, num_gt)), ap + 1e-15);
  }
}

TEST(OperatingThreshold, EnumeratedRecall)
{
  const MatchResult r =
    ranked({true, true, true, true, true}, {0.9, 0.8, 0.7, 0.6, 0.5}, 5);
  EXPECT_EQ(operating_threshold_for_recall(r, 0.8), 0.6);
  EXPECT_EQ(operating_threshold_for_recall(ranked({true}, {0.42}, 1), 1.0), 0.42);
  EXPECT_EQ(operating_threshold_for_recall(ranked({true}, {0.42}, 1), 0.3), 0.42);
  try {
    (void)operating_threshold_for_recall(ranked({true, false}, {0.9, 0.8}, 2), 0.8);
    FAIL() << "expected RecallUnattainable";
  } catch (const RecallUnattainable & e) {
    EXPECT_EQ(e.best_recall, 0.5);
  }
}

TEST(DisplacementError, UnitCases)
{
  EXPECT_NEAR(displacement_error_cm(std::vector<TpPair>{{{1, 1}, {1, 1}}}), 0.0, 1e-12);
  EXPECT_NEAR(displacement_error_cm(std::vector<TpPair>{{{1, 0}, {0, 0}}, {{5, 2}, {5, 3}}}), 100.0,
              1e-12);
  EXPECT_NEAR(displacement_error_cm(std::vector<TpPair>{{{0.5, 0}, {0, 0}}, {{0, 1.5}, {0, 0}}}),
              100.0, 1e-12);
  EXPECT_TRUE(std::isnan(displacement_error_cm(std::vector<TpPair>{})));
}

TEST(DisplacementError, IgnoresDetectionsBelowThreshold)
{
  std::vector<Pose2> traj(30, Pose2{0, 0, 0});
  GtBox g = gt(1, box(0, 0, 4, 2));
  g.trajectory = traj;
  GtBox g2 = gt(2, box(20, 0, 4, 2));
  g2.trajectory = std::vector<Pose2>(30, Pose2{20, 0, 0});
  DetBox d = det(0.9, box(0, 0, 4, 2));
  d.trajectory = traj;
  d.trajectory.back().tx = 1.0;
  DetBox low = det(0.2, box(20, 0, 4, 2));
  low.trajectory = g2.trajectory;
  low.trajectory.back().tx = 27.0;
  const std::vector<MatchResult> res{match_detections(std::vector<DetBox>{d, low},
                                                      std::vector<GtBox>{g, g2}, 0.7)};
  EXPECT_NEAR(displacement_error_cm(res, 0.5), 100.0, 1e-12);
  EXPECT_NEAR(displacement_error_cm(res, 0.1), 400.0, 1e-12);
}

TEST(CameraFov, ForwardCameraSlices)
{
  const CameraModel cam = atg4d_preset().camera;
  EXPECT_FALSE(in_camera_fov(box(-20, 0, 4, 2), cam));
  EXPECT_TRUE(in_camera_fov(box(30, 0, 4, 2), cam));
  const RangeBand band{25.0, 50.0};
  EXPECT_TRUE(band.contains(box(30, 0, 4, 2)));
  EXPECT_FALSE((RangeBand{0.0, 25.0}.contains(box(30, 0, 4, 2))));
  for (double deg : {44.0, 44.99, 45.0, 45.01, 46.0}) {
    for (double sign : {1.0, -1.0}) {
      const double a = sign * deg * kPi / 180.0;
      const RotatedBox2D b = box(20 * std::cos(a), 20 * std::sin(a), 1, 1);
      const double u = cam.cx - cam.fx * b.cy / b.cx;
      const double v = cam.cy;
      const bool want = u >= 0.0 && u < cam.width && v >= cam.crop_top && v < cam.height;
      EXPECT_EQ(in_camera_fov(b, cam), want) << deg << " " << sign;
      if (deg != 45.0) {
        EXPECT_EQ(in_camera_fov(b, cam), deg < 45.0) << deg << " " << sign;
      }
    }
  }
}

TEST(CameraFov, PanoramicKeepsEverything)
{
  const CameraModel pano = CameraModel::panoramic(720, 120);
  Rng rng(12);
  std::vector<GtBox> items;
  for (int i = 0; i < 300; ++i) {
    items.push_back(gt(i, box(rng.uniform(-70, 70), rng.uniform(-70, 70), 2, 1)));
  }
  items.push_back(gt(300, box(-10, 0, 2, 1)));
  items.push_back(gt(301, box(-10, -1e-12, 2, 1)));
  EXPECT_EQ(filter_camera_fov(items, pano).size(), items.size());
}

TEST(Evaluate, SchemaAndMissingGroundTruth)
{
  EvalOptions opt = eval_options(atg4d_preset());
  EvalFrame f;
  f.ground_truth = {gt(1, box(30, 0, 4, 2)), gt(2, box(-30, 0, 4, 2))};
  f.detections = {det(0.9, box(30, 0, 4, 2)), det(0.8, box(-30, 0, 4, 2))};
  const EvalReport rep = evaluate(std::vector<EvalFrame>{f}, opt);
  EXPECT_EQ(rep.slices.size(), 3u * (2u + opt.bands.size()));
  EXPECT_EQ(rep.find("vehicle", "all").ap, 1.0);
  EXPECT_EQ(rep.find("vehicle", "all").num_gt, 2);
  EXPECT_EQ(rep.find("vehicle", "fov").num_gt, 1);
  EXPECT_EQ(rep.find("vehicle", "fov_25-50").num_tp, 1);
  EXPECT_EQ(rep.find("vehicle", "fov_0-25").num_gt, 0);
  EXPECT_EQ(rep.find("vehicle", "fov_0-25").ap, -1.0);
  const SliceMetrics & ped = rep.find("pedestrian", "all");
  EXPECT_EQ(ped.ap, -1.0);
  EXPECT_FALSE(ped.recall_attainable);
  EXPECT_EQ(ped.de_cm, -1.0);
  EXPECT_THROW(rep.find("vehicle", "rear"), std::out_of_range);

  const EvalReport no_cam = evaluate(std::vector<EvalFrame>{f}, EvalOptions{});
  EXPECT_EQ(no_cam.slices.size(), 3u);
  const std::string text = rep.to_text();
  EXPECT_NE(text.find("vehicle.fov_25-50.de_cm"), std::string::npos);
  EXPECT_EQ(text.find("nan"), std::string::npos);
}
