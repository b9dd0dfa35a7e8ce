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

// Acceptance run: one PASS/FAIL line per criterion with its wall time.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "mvfuse.hpp"
#include "oracles.hpp"

using namespace mvfuse;
namespace fs = std::filesystem;

namespace
{

/// Accumulates failed checks of one criterion.
struct Verdict
{
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string & what)
  {
    if (!ok) {
      failures.push_back(what);
    }
  }
  void note(const std::string & s) { notes.push_back(s); }
};

std::string fmt(double v, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

const fs::path kRoot = fs::temp_directory_path() / "mvfuse_acceptance";

int cli(const std::string & args)
{
  const std::string cmd = std::string("\"") + MVFUSE_CLI_PATH + "\" " + args + " >> \"" +
                          (kRoot / "cli_log.txt").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 -------------------------------------------------------------------

void shape_fidelity(Verdict & v)
{
  struct Want
  {
    Preset preset;
    std::array<int, 3> bev;
    std::array<int, 2> rv;
  };
  for (const Want & w : {Want{atg4d_preset(), {938, 625, 160}, {64, 2048}},
                         Want{nuscenes_preset(), {800, 800, 400}, {32, 2048}}}) {
    const Preset & p = w.preset;
    const io::FrameBundle b = make_bundle(p, 1);
    const auto t0 = std::chrono::steady_clock::now();
    const FrameInputs in = prepare_inputs(b, p, true);
    const double raster_s = seconds_since(t0);
    const std::string tag = p.name + ": ";
    v.check(in.lidar_bev.height() == w.bev[0] && in.lidar_bev.width() == w.bev[1] &&
              in.lidar_bev.channels() == w.bev[2],
            tag + "BEV stack " + std::to_string(in.lidar_bev.height()) + "x" +
              std::to_string(in.lidar_bev.width()) + "x" + std::to_string(in.lidar_bev.channels()));
    v.check(in.rv_image.height() == w.rv[0] && in.rv_image.width() == w.rv[1],
            tag + "RV raster " + std::to_string(in.rv_image.height()) + "x" +
              std::to_string(in.rv_image.width()));
    v.check(raster_s < 5.0, tag + "rasterization took " + fmt(raster_s, 2) + " s");
    v.note(tag + "BEV " + std::to_string(w.bev[0]) + "x" + std::to_string(w.bev[1]) + "x" +
           std::to_string(w.bev[2]) + ", RV " + std::to_string(w.rv[1]) + "x" +
           std::to_string(w.rv[0]) + ", rasterization " + fmt(raster_s, 2) + " s/frame");
  }
}

// --- 2 -------------------------------------------------------------------

void projection_oracle(Verdict & v)
{
  Rng rng(2);
  int bev_ok = 0;
  int rv_ok = 0;
  for (int i = 0; i < 100; ++i) {
    // RV -> BEV.
    {
      const RvSpec rv{2 + static_cast<int>(rng.below(15)), 8 + static_cast<int>(rng.below(57)), {}};
      const int rows = 4 + static_cast<int>(rng.below(29));
      const int cols = 4 + static_cast<int>(rng.below(29));
      const double cell = rng.uniform(0.3, 2.0);
      const GridSpec g{rows * cell, cols * cell, 3.2, cell, cell, 0.2,
                       -rng.uniform(0.0, rows * cell), -0.5 * cols * cell, -0.1};
      const auto src = fixture::random_map<float>(rng, ViewTag::kRv, {rv.rows, rv.cols},
                                                  1 + static_cast<int>(rng.below(8)), rv);
      const auto pts = fixture::random_points(rng, 1 + rng.below(10000), rv.rows, rv.cols,
                                              g.x_min - 2.0, g.x_max() + 2.0, g.y_min - 2.0,
                                              g.y_max() + 2.0);
      std::vector<std::optional<oracle::Cell>> s, t;
      for (const auto & p : pts) {
        s.push_back(oracle::rv_cell(p.laser_id, p.azimuth, rv.cols));
        t.push_back(oracle::bev_cell(p.x, p.y, g));
      }
      const auto fast = project_features(src, pts, g);
      bev_ok += oracle::bit_equal(fast.features,
                                  oracle::gather_mean(src, s, t, g.rows(), g.cols(), ViewTag::kBev))
                  ? 1
                  : 0;
    }
    // Camera -> RV.
    {
      const int w = 32 + static_cast<int>(rng.below(160));
      const int h = 24 + static_cast<int>(rng.below(100));
      const CameraModel cam = CameraModel::from_fov(w, h, rng.uniform(50.0, 110.0),
                                                    static_cast<int>(rng.below(h / 3 + 1)));
      const int stride = 1 << rng.below(4);
      const CameraView cv{cam, stride};
      const auto src = fixture::random_map<double>(rng, ViewTag::kCamera, view_extent(cv),
                                                   1 + static_cast<int>(rng.below(8)), cv);
      const RvSpec rv{2 + static_cast<int>(rng.below(15)), 8 + static_cast<int>(rng.below(57)), {}};
      const auto pts =
        fixture::random_points(rng, 1 + rng.below(10000), rv.rows, rv.cols, -10.0, 60.0, -40.0, 40.0);
      std::vector<std::optional<oracle::Cell>> s, t;
      for (const auto & p : pts) {
        s.push_back(oracle::camera_cell(p.x, p.y, p.z, cam, stride));
        t.push_back(oracle::rv_cell(p.laser_id, p.azimuth, rv.cols));
      }
      const auto fast = project_features(src, pts, rv);
      rv_ok += oracle::bit_equal(fast.features,
                                 oracle::gather_mean(src, s, t, rv.rows, rv.cols, ViewTag::kRv))
                 ? 1
                 : 0;
    }
  }
  v.check(bev_ok == 100, "RV->BEV bit-exact on " + std::to_string(bev_ok) + "/100");
  v.check(rv_ok == 100, "camera->RV bit-exact on " + std::to_string(rv_ok) + "/100");
  v.note("RV->BEV " + std::to_string(bev_ok) + "/100, camera->RV " + std::to_string(rv_ok) +
         "/100 bit-exact");
}

// --- 3 -------------------------------------------------------------------

void conv_oracle(Verdict & v)
{
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ConvLayerSpec s = fixture::random_spec(rng);
    const auto prm = fixture::random_params<double>(s, rng);
    const auto in = fixture::random_input<double>(1 + static_cast<int>(rng.below(32)),
                                                  1 + static_cast<int>(rng.below(32)),
                                                  s.in_channels, rng.uniform(0.0, 0.99), rng);
    worst = std::max(worst, oracle::max_abs_diff(oracle::conv2d(oracle::to_tensor(in), s, prm),
                                                 conv2d_forward(in, s, prm)));
  }
  v.check(worst < 1e-10, "max abs error " + sci(worst));
  v.note("max abs error over 50 layers " + sci(worst));
}

// --- 4 -------------------------------------------------------------------

void gradient_check(Verdict & v)
{
  Rng rng(4);
  const GridSpec g{6.4, 6.4, 3.2, 0.16, 0.16, 0.2, -3.2, -3.2, -0.1};
  double worst = 0.0;
  std::size_t values = 0;
  for (int f = 0; f < 10; ++f) {
    const CellTargets t =
      encode_targets(fixture::random_labels(rng, 2 + static_cast<int>(rng.below(3)), 30, 2.5), g, 4, 30);
    const CellOutputs o = fixture::random_outputs(t, rng);
    worst = std::max(worst, oracle::max_gradient_error(o, t, loss_gradients(o, t), 1e-4));
    values += o.values.size();
  }
  v.check(worst < 1e-4, "max relative error " + sci(worst));
  v.note("max relative error " + sci(worst) + " over " + std::to_string(values) +
         " output values");
}

// --- 5 -------------------------------------------------------------------

void loss_round_trip(Verdict & v)
{
  const LabelSet labels = scene_labels(three_actor_scene(), 0.0, 30);
  const CellTargets t = encode_targets(labels, round_trip_grid(), 4, 30);
  FitOptions fo;
  fo.steps = 1000;
  const FitResult fit = fit_outputs(t, fo);
  v.check(fit.steps_taken <= 1000, "fit took " + std::to_string(fit.steps_taken) + " steps");
  const auto dets = decode_detections(fit.outputs, 0.1);
  const double half_cell = 0.5 * t.grid.voxel_length;
  for (const auto & a : labels.actors) {
    double best = 1e300;
    const DetBox * hit = nullptr;
    for (const auto & d : dets) {
      const double e = std::hypot(d.box.cx - a.box.cx, d.box.cy - a.box.cy);
      if (d.cls == a.cls && e < best) {
        best = e;
        hit = &d;
      }
    }
    const std::string name(class_name(a.cls));
    if (hit == nullptr) {
      v.check(false, name + " not detected");
      continue;
    }
    const double dh = std::abs(normalize_angle(hit->box.heading - a.box.heading)) * 180.0 / kPi;
    v.check(best <= half_cell, name + " center error " + fmt(best) + " m");
    v.check(dh <= 1.0, name + " heading error " + fmt(dh) + " deg");
    v.note(name + ": center error " + fmt(best, 4) + " m, heading error " + fmt(dh, 4) + " deg");
  }
  const std::vector<EvalFrame> frames{{dets, gt_boxes_from_labels(labels)}};
  const EvalReport rep = evaluate(frames, EvalOptions{});
  for (ActorClass c : kAllClasses) {
    const double ap = rep.find(std::string(class_name(c)), "all").ap;
    v.check(ap == 1.0, std::string(class_name(c)) + " AP " + fmt(ap));
  }

  // One fg cell with a constant 0.3 m x-center error at every horizon.
  CellTargets one = t;
  const FgCell first = one.fg.front();
  one.fg = {first};
  std::fill(one.fg_index.begin(), one.fg_index.end(), -1);
  one.fg_index[static_cast<std::size_t>(first.row) * one.cols + first.col] = 0;
  const LossBreakdown b = total_loss(constant_center_error_outputs(one, 0.3), one);
  double center = 0.0;
  for (double c : b.classes[static_cast<std::size_t>(first.cls)].center) {
    center += c;
  }
  const double want = oracle::constant_error_center_term(0.3, 0.97, 30);
  const double closed = 0.5 * 0.09 * (1.0 - std::pow(0.97, 31)) / 0.03;
  v.check(std::abs(want - closed) < 1e-12, "series and closed form disagree");
  v.check(std::abs(center - want) < 1e-5, "center term " + fmt(center, 8) + " vs " + fmt(want, 8));
  v.note("constant 0.3 m error center term " + fmt(center, 6) + " (geometric sum " +
         fmt(closed, 6) + "; the literal 0.90447 uses 20.0994 for a sum that is 20.3674)");
}

// --- 6 -------------------------------------------------------------------

void iou_check(Verdict & v)
{
  const double third = rotated_iou(RotatedBox2D::make(0, 0, 1, 1, 0), RotatedBox2D::make(0.5, 0, 1, 1, 0));
  v.check(std::abs(third - 1.0 / 3.0) < 1e-12, "offset squares IoU " + fmt(third, 12));
  Rng rng(6);
  double worst_mc = 0.0;
  double worst_sym = 0.0;
  auto random_box = [&] {
    return RotatedBox2D::make(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.5, 5.0),
                              rng.uniform(0.5, 5.0), rng.uniform(-kPi, kPi));
  };
  for (int i = 0; i < 200; ++i) {
    const RotatedBox2D a = random_box();
    const RotatedBox2D b = random_box();
    const double iou = rotated_iou(a, b);
    worst_mc = std::max(worst_mc, std::abs(iou - oracle::sampled_iou(a, b, 1000000, 1000 + i)));
    const Pose2 m{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0), rng.uniform(-kPi, kPi)};
    auto moved = [&](const RotatedBox2D & r) {
      const Point2 c = m.apply(r.center());
      return RotatedBox2D::make(c.x, c.y, r.length, r.width, r.heading + m.yaw);
    };
    worst_sym = std::max({worst_sym, std::abs(iou - rotated_iou(b, a)),
                          std::abs(iou - rotated_iou(moved(a), moved(b)))});
  }
  v.check(worst_mc < 0.01, "Monte-Carlo deviation " + fmt(worst_mc));
  v.check(worst_sym < 1e-9, "symmetry/equivariance deviation " + sci(worst_sym));
  v.note("max Monte-Carlo deviation " + fmt(worst_mc) + ", max symmetry/equivariance deviation " +
         sci(worst_sym));
}

// --- 7 -------------------------------------------------------------------

MatchResult ranked(std::vector<bool> tp, std::vector<double> scores, int num_gt)
{
  MatchResult r;
  r.num_gt = num_gt;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    r.entries.push_back({scores[i], tp[i], static_cast<int>(i), 0.0});
  }
  return r;
}

void metrics_protocol(Verdict & v)
{
  // Precision 1 at recall 0.5, precision 2/3 at recall 1.
  const double ap = average_precision(ranked({true, false, true}, {0.9, 0.8, 0.7}, 2));
  v.check(std::abs(ap - (0.5 * 1.0 + 0.5 * 2.0 / 3.0)) < 1e-9, "AP " + fmt(ap, 12));
  const double thr =
    operating_threshold_for_recall(ranked({true, true, true, true, true}, {0.9, 0.8, 0.7, 0.6, 0.5}, 5), 0.8);
  v.check(thr == 0.6, "operating threshold " + fmt(thr));
  bool threw = false;
  try {
    (void)operating_threshold_for_recall(ranked({true, false}, {0.9, 0.8}, 2), 0.8);
  } catch (const RecallUnattainable &) {
    threw = true;
  }
  v.check(threw, "unattainable recall accepted");
  const double de1 =
    displacement_error_cm(std::vector<TpPair>{{{31.0, 2.0}, {30.0, 2.0}}, {{-4.0, 7.0}, {-4.0, 8.0}}});
  const double de2 =
    displacement_error_cm(std::vector<TpPair>{{{0.5, 0.0}, {0.0, 0.0}}, {{0.0, 1.5}, {0.0, 0.0}}});
  v.check(de1 == 100.0, "constant 1 m DE " + fmt(de1, 12));
  v.check(de2 == 100.0, "mixed DE " + fmt(de2, 12));
  v.note("AP " + fmt(ap, 6) + ", threshold " + fmt(thr, 2) + ", DE " + fmt(de1, 1) + " / " +
         fmt(de2, 1) + " cm");
}

// --- 8 -------------------------------------------------------------------

std::set<std::string> metric_keys(const fs::path & dir)
{
  const KeyValues kv = KeyValues::parse(io::read_text(dir / "metrics.txt"));
  return {kv.keys().begin(), kv.keys().end()};
}

void ablation_plumbing(Verdict & v)
{
  const fs::path root = kRoot / "ablation";
  const std::string r = "\"" + root.string() + "\"";
  v.check(cli("gen --preset atg4d --seed 8 --frames 1 --out " + r + "/gen") == 0, "gen failed");
  const std::string frame = r + "/gen/frame_0000";
  v.check(cli("forward --preset atg4d --no-camera " + frame + " --out " + r + "/l_mv") == 0,
          "L-MV forward failed");
  v.check(cli("forward --preset atg4d " + frame + " --out " + r + "/lc_mv") == 0,
          "LC-MV forward failed");
  v.check(cli("eval " + r + "/l_mv/frame_0000 --out " + r + "/l_mv_eval") == 0, "L-MV eval failed");
  v.check(cli("eval " + r + "/lc_mv/frame_0000 --out " + r + "/lc_mv_eval") == 0, "LC-MV eval failed");
  if (v.failures.empty()) {
    const auto l = metric_keys(root / "l_mv_eval");
    const auto lc = metric_keys(root / "lc_mv_eval");
    v.check(l == lc, "metrics schemas differ");
    v.check(l.count("vehicle.fov_25-50.ap") == 1, "FOV band slice missing");
    v.note("metrics schema: " + std::to_string(l.size()) + " keys, identical for L-MV and LC-MV");
  }

  const Preset p = atg4d_preset();
  v.check(std::abs(p.camera.horizontal_fov_deg() - 90.0) < 1e-9, "camera is not 90 degrees");
  int rear = 0;
  int rear_kept = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SceneConfig cfg = p.scene;
    const Scene s = build_scene(cfg, seed);
    for (const auto & g : gt_boxes_from_labels(scene_labels(s, p.reference_time(), 0))) {
      if (g.box.cx < 0.0) {
        ++rear;
        rear_kept += in_camera_fov(g.box, p.camera) ? 1 : 0;
      }
    }
  }
  v.check(rear > 0, "no rear actors generated");
  v.check(rear_kept == 0, std::to_string(rear_kept) + " rear actors inside the FOV");
  v.note(std::to_string(rear) + " rear actors over 20 scenes, " + std::to_string(rear_kept) +
         " kept by the FOV slice");
}

// --- 9 -------------------------------------------------------------------

std::map<std::string, io::Bytes> tree(const fs::path & dir)
{
  std::map<std::string, io::Bytes> files;
  for (const auto & e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
    }
  }
  return files;
}

void determinism(Verdict & v)
{
  const fs::path a = kRoot / "selfcheck_a";
  const fs::path b = kRoot / "selfcheck_b";
  v.check(cli("selfcheck --out \"" + a.string() + "\"") == 0, "first selfcheck failed");
  v.check(cli("selfcheck --out \"" + b.string() + "\"") == 0, "second selfcheck failed");
  const auto ta = tree(a);
  const auto tb = tree(b);
  v.check(!ta.empty(), "no artifacts written");
  v.check(ta == tb, "artifacts differ between runs");
  std::size_t bytes = 0;
  for (const auto & [k, f] : ta) {
    bytes += f.size();
  }
  v.note(std::to_string(ta.size()) + " files, " + std::to_string(bytes) + " bytes, identical");
}

}  // namespace

int main()
{
  struct Criterion
  {
    int id;
    const char * name;
    double limit_s;  // 0: no overall limit
    std::function<void(Verdict &)> run;
  };
  const std::vector<Criterion> criteria{
    {1, "shape fidelity", 0.0, shape_fidelity},  // gated per frame inside
    {2, "projection oracle", 10.0, projection_oracle},
    {3, "convolution oracle", 10.0, conv_oracle},
    {4, "gradient correctness", 60.0, gradient_check},
    {5, "loss round trip", 120.0, loss_round_trip},
    {6, "rotated IoU", 60.0, iou_check},
    {7, "metrics protocol", 5.0, metrics_protocol},
    {8, "ablation plumbing", 30.0, ablation_plumbing},
    {9, "determinism", 0.0, determinism},
  };
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);
  int failed = 0;
  for (const auto & c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception & e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (c.limit_s > 0.0 && s >= c.limit_s) {
      v.check(false, "runtime " + fmt(s, 2) + " s over the " + fmt(c.limit_s, 0) + " s limit");
    }
    const bool pass = v.failures.empty();
    failed += pass ? 0 : 1;
    std::printf("criterion %d (%s): %s [%.2f s]\n", c.id, c.name, pass ? "PASS" : "FAIL", s);
    for (const auto & n : v.notes) {
      std::printf("    %s\n", n.c_str());
    }
    for (const auto & f : v.failures) {
      std::printf("    failed: %s\n", f.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  fs::remove_all(kRoot);
  return failed == 0 ? 0 : 1;
}
