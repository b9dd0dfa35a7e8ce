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

// Command-line driver: scene generation, rasterization, projection demos,
// forward passes, output fitting, evaluation, benchmarking and self-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvfuse.hpp"

namespace fs = std::filesystem;
using namespace mvfuse;

namespace
{

struct Options
{
  std::string preset{"atg4d"};
  bool preset_given{false};
  std::uint64_t seed{1};
  std::uint64_t check_seed{2024};
  int frames{1};
  bool no_camera{false};
  std::string out{"out"};
  std::string weights;
  std::string export_weights;
  double score_floor{0.1};
  double nms_iou{kDefaultNmsIou};
  double recall_target{kDefaultRecallTarget};
  int reps{20};
  int steps{500};
  double learning_rate{1.0};
  std::vector<std::string> inputs;
};

class Failure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

void emit(const fs::path & p) { std::cout << p.string() << '\n'; }

void emit_all(const std::vector<fs::path> & ps)
{
  for (const auto & p : ps) {
    emit(p);
  }
}

fs::path write_artifact(const fs::path & p, const io::Bytes & b)
{
  io::write_file(p, b);
  emit(p);
  return p;
}

fs::path write_artifact(const fs::path & p, const std::string & text)
{
  io::write_text(p, text);
  emit(p);
  return p;
}

std::string stem_of(const std::string & input)
{
  fs::path p = fs::path(input).lexically_normal();
  if (p.filename().empty()) {
    p = p.parent_path();
  }
  std::string s = p.filename().string();
  return s.empty() || s == "." ? "frame" : s;
}

std::optional<std::string> expected_preset(const Options & o)
{
  return o.preset_given ? std::optional<std::string>(o.preset) : std::nullopt;
}

void require_inputs(const Options & o, const char * what)
{
  if (o.inputs.empty()) {
    throw Failure(std::string("no ") + what + " given");
  }
}

/// Gray image with the channel's finite range stretched to 0..255.
template <typename T>
io::Bytes stretched_pgm(const BasicFeatureMap<T> & m, int ch)
{
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const double v = m.at(r, c, ch);
      if (!std::isfinite(v)) {
        continue;
      }
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint8_t> g(static_cast<std::size_t>(m.height()) * m.width(), 0);
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const double v = m.at(r, c, ch);
      if (std::isfinite(v)) {
        g[static_cast<std::size_t>(r) * m.width() + c] =
          static_cast<std::uint8_t>(std::lround((v - lo) / span * 255.0));
      }
    }
  }
  return io::encode_pgm(m.width(), m.height(), g);
}

/// 255 where any channel of the cell is nonzero.
io::Bytes occupancy_pgm(const FeatureMap & m)
{
  std::vector<std::uint8_t> g(static_cast<std::size_t>(m.height()) * m.width(), 0);
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const auto px = m.pixel(r, c);
      if (std::any_of(px.begin(), px.end(), [](float v) { return v != 0.0F; })) {
        g[static_cast<std::size_t>(r) * m.width() + c] = 255;
      }
    }
  }
  return io::encode_pgm(m.width(), m.height(), g);
}

MultiViewNet make_network(const Options & o, const Preset & p)
{
  const NetworkConfig cfg = p.network(!o.no_camera);
  if (!o.weights.empty()) {
    return MultiViewNet(cfg, load_weights(o.weights));
  }
  return MultiViewNet::seeded(cfg, o.seed);
}

std::string frame_header(const std::string & preset, const std::string & variant,
                         const std::string & source)
{
  KeyValues kv;
  kv.set("preset", preset);
  kv.set("variant", variant);
  kv.set("source", source);
  return kv.to_text();
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options & o)
{
  const Preset p = preset_by_name(o.preset);
  if (o.frames < 1) {
    throw Failure("--frames must be positive");
  }
  for (int i = 0; i < o.frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d", i);
    const io::FrameBundle b = make_bundle(p, o.seed + static_cast<std::uint64_t>(i));
    emit_all(io::write_bundle(b, fs::path(o.out) / name));
  }
  return 0;
}

int cmd_raster(const Options & o)
{
  require_inputs(o, "bundles");
  for (const auto & in : o.inputs) {
    const io::FrameBundle b = io::read_bundle(in, expected_preset(o));
    const Preset p = preset_by_name(b.preset);
    const FrameInputs fi = prepare_inputs(b, p, !o.no_camera);
    const fs::path dir = fs::path(o.out) / stem_of(in);
    fs::create_directories(dir);
    write_artifact(dir / "lidar_bev.fmap", io::encode_fmap(fi.lidar_bev));
    write_artifact(dir / "map.fmap", io::encode_fmap(fi.map_raster));
    write_artifact(dir / "rv.fmap", io::encode_fmap(fi.rv_image));
    write_artifact(dir / "bev_occupancy.pgm", occupancy_pgm(fi.lidar_bev));
    for (int l = 0; l < kNumMapLayers; ++l) {
      write_artifact(dir / ("map_" + std::string(map_layer_name(l)) + ".pgm"),
                     io::channel_to_pgm(fi.map_raster, l));
    }
    static constexpr const char * kRvNames[kRvChannels] = {"range", "height", "intensity",
                                                          "valid"};
    for (int c = 0; c < kRvChannels; ++c) {
      write_artifact(dir / ("rv_" + std::string(kRvNames[c]) + ".pgm"),
                     c == kRvValid ? io::channel_to_pgm(fi.rv_image, c)
                                   : stretched_pgm(fi.rv_image, c));
    }
    if (fi.camera) {
      write_artifact(dir / "camera.fmap", io::encode_fmap(*fi.camera));
    }
  }
  return 0;
}

int cmd_project(const Options & o)
{
  require_inputs(o, "bundles");
  for (const auto & in : o.inputs) {
    const io::FrameBundle b = io::read_bundle(in, expected_preset(o));
    const Preset p = preset_by_name(b.preset);
    const FrameInputs fi = prepare_inputs(b, p, !o.no_camera);
    const fs::path dir = fs::path(o.out) / stem_of(in);
    fs::create_directories(dir);
    KeyValues summary;
    auto coverage = [](const FeatureMap & validity) {
      const auto & d = validity.data();
      const auto n = std::count_if(d.begin(), d.end(), [](float v) { return v > 0.0F; });
      return static_cast<double>(n) / static_cast<double>(d.size());
    };
    summary.set("points", std::to_string(fi.points.size()));
    const auto rv_bev = project_features(fi.rv_image, fi.points, p.grid);
    write_artifact(dir / "rv_in_bev.fmap", io::encode_fmap(rv_bev.features));
    write_artifact(dir / "rv_bev_validity.pgm", io::channel_to_pgm(rv_bev.validity, 0));
    summary.set("rv_to_bev.valid_fraction", format_double(coverage(rv_bev.validity)));
    if (fi.camera) {
      const auto cam_rv = project_features(*fi.camera, fi.points, p.rv());
      write_artifact(dir / "camera_in_rv.fmap", io::encode_fmap(cam_rv.features));
      write_artifact(dir / "camera_rv_validity.pgm", io::channel_to_pgm(cam_rv.validity, 0));
      summary.set("camera_to_rv.valid_fraction", format_double(coverage(cam_rv.validity)));
    }
    write_artifact(dir / "projection.txt", summary.to_text());
  }
  return 0;
}

int cmd_forward(const Options & o)
{
  require_inputs(o, "bundles");
  std::optional<MultiViewNet> net;
  std::string net_preset;
  for (const auto & in : o.inputs) {
    const io::FrameBundle b = io::read_bundle(in, expected_preset(o));
    const Preset p = preset_by_name(b.preset);
    if (!net) {
      net.emplace(make_network(o, p));
      net_preset = p.name;
      if (!o.export_weights.empty()) {
        save_weights(o.export_weights, net->weights());
        emit(o.export_weights);
      }
    } else if (p.name != net_preset) {
      throw Failure("bundles of different presets in one run: " + net_preset + ", " + p.name);
    }
    const ForwardTrace tr = run_forward(*net, prepare_inputs(b, p, !o.no_camera));
    const auto bad = shape_mismatches(tr, plan_shapes(net->config(), p.grid, p.rv(), p.camera));
    if (!bad.empty()) {
      std::string names;
      for (const auto & n : bad) {
        names += " " + n;
      }
      throw Failure("shape check failed for" + names);
    }
    if (!tr.outputs.probabilities_valid()) {
      throw Failure("probability check failed: outputs outside [0, 1]");
    }
    const fs::path dir = fs::path(o.out) / stem_of(in);
    fs::create_directories(dir);
    write_artifact(dir / "outputs.fmap", io::encode_fmap(outputs_to_map(tr.outputs)));
    write_artifact(dir / "labels.txt", io::encode_labels_map(b.labels, b.map));
    write_artifact(dir / "frame.txt",
                   frame_header(p.name, o.no_camera ? "l_mv" : "lc_mv", in));
  }
  return 0;
}

int cmd_fit(const Options & o)
{
  struct Job
  {
    std::string name;
    std::string preset;
    std::string source;
    LabelSet labels;
    MapGeometry map;
    GridSpec grid;
    int stride;
    int horizon;
  };
  std::vector<Job> jobs;
  if (o.inputs.empty()) {
    // Three moving actors near a static ego vehicle.
    const Preset p = preset_by_name(o.preset_given ? o.preset : "desk");
    jobs.push_back({"round_trip", p.name, "three-actor scene",
                    scene_labels(three_actor_scene(), 0.0, p.horizon), MapGeometry{},
                    round_trip_grid(), p.output_stride, p.horizon});
  }
  for (const auto & in : o.inputs) {
    io::FrameBundle b = io::read_bundle(in, expected_preset(o));
    const Preset p = preset_by_name(b.preset);
    jobs.push_back({stem_of(in), p.name, in, std::move(b.labels), std::move(b.map), p.grid,
                    p.output_stride, p.horizon});
  }
  for (const auto & j : jobs) {
    const CellTargets t = encode_targets(j.labels, j.grid, j.stride, j.horizon);
    FitOptions fo;
    fo.steps = o.steps;
    fo.learning_rate = o.learning_rate;
    fo.seed = o.seed;
    const FitResult fit = fit_outputs(t, fo);
    const fs::path dir = fs::path(o.out) / j.name;
    fs::create_directories(dir);
    write_artifact(dir / "outputs.fmap", io::encode_fmap(outputs_to_map(fit.outputs)));
    write_artifact(dir / "labels.txt", io::encode_labels_map(j.labels, j.map));
    write_artifact(dir / "frame.txt", frame_header(j.preset, "fit", j.source));
    KeyValues rep;
    rep.set("foreground_cells", std::to_string(t.fg.size()));
    rep.set("steps_taken", std::to_string(fit.steps_taken));
    rep.set("initial_loss", format_double(fit.loss_history.front()));
    rep.set("final_loss", format_double(fit.loss_history.back()));
    write_artifact(dir / "fit.txt",
                   rep.to_text() + total_loss(fit.outputs, t, fo.loss).to_text());
  }
  return 0;
}

int cmd_eval(const Options & o)
{
  require_inputs(o, "frame directories");
  std::vector<EvalFrame> frames;
  std::optional<std::string> preset;
  std::optional<std::string> variant;
  for (const auto & in : o.inputs) {
    const fs::path dir(in);
    const KeyValues head = KeyValues::parse(io::read_text(dir / "frame.txt"));
    const std::string fp = o.preset_given ? o.preset : head.get("preset");
    if (preset && *preset != fp) {
      throw Failure("frames of different presets in one report: " + *preset + ", " + fp);
    }
    preset = fp;
    const std::string fv = head.get("variant");
    variant = !variant || *variant == fv ? fv : std::string("mixed");
    const CellOutputs out = outputs_from_map(io::decode_fmap<double>(io::read_file(dir / "outputs.fmap")));
    LabelSet labels;
    MapGeometry map;
    io::decode_labels_map(io::read_text(dir / "labels.txt"), labels, map);
    frames.push_back({decode_detections(out, o.score_floor, o.nms_iou),
                      ground_truth_in_grid(labels, out.grid)});
  }
  EvalOptions eo = eval_options(preset_by_name(*preset));
  eo.recall_target = o.recall_target;
  const EvalReport rep = evaluate(frames, eo);
  KeyValues head;
  head.set("preset", *preset);
  head.set("variant", *variant);
  head.set("frames", std::to_string(frames.size()));
  head.set("score_floor", format_double(o.score_floor));
  head.set("nms_iou", format_double(o.nms_iou));
  head.set("recall_target", format_double(o.recall_target));
  fs::create_directories(o.out);
  write_artifact(fs::path(o.out) / "metrics.txt", head.to_text() + rep.to_text());
  return 0;
}

int cmd_bench(const Options & o)
{
  const Preset p = preset_by_name(o.preset);
  if (o.reps < 1) {
    throw Failure("--reps must be positive");
  }
  const MultiViewNet net = make_network(o, p);
  const io::FrameBundle b = make_bundle(p, o.seed);
  const TimingReport t = time_frame(net, b, p, o.reps, o.score_floor);
  std::fprintf(stderr, "%-12s %10s %10s %10s\n", "stage", "median_ms", "min_ms", "max_ms");
  for (const auto & s : t.stages) {
    std::fprintf(stderr, "%-12s %10.2f %10.2f %10.2f\n", s.name.c_str(), s.median_ms, s.min_ms,
                 s.max_ms);
  }
  std::fprintf(stderr, "%-12s %10.2f\n", "total", t.total_median_ms);
  fs::create_directories(o.out);
  KeyValues head;
  head.set("preset", p.name);
  head.set("variant", o.no_camera ? "l_mv" : "lc_mv");
  write_artifact(fs::path(o.out) / "latency.txt", head.to_text() + t.to_text());
  return 0;
}

int cmd_selfcheck(const Options & o)
{
  SelfcheckOptions so;
  so.seed = o.check_seed;
  so.out_dir = o.out;
  std::vector<fs::path> written;
  const SelfcheckReport rep = run_selfcheck(so, &written);
  emit_all(written);
  if (!rep.all_passed()) {
    for (const auto & c : rep.checks) {
      if (!c.passed) {
        std::cerr << "selfcheck: " << c.name << " failed: " << c.failure << '\n';
      }
    }
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"mvfuse: multi-view LiDAR and camera fusion toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_preset = [&](CLI::App * sc) {
    sc->add_option_function<std::string>(
        "--preset",
        [&](const std::string & v) {
          o.preset = v;
          o.preset_given = true;
        },
        "Sensor preset (atg4d, nuscenes, desk)")
      ->check(CLI::IsMember(preset_names()));
  };
  auto add_inputs = [&](CLI::App * sc, const char * what) {
    sc->add_option("inputs", o.inputs, what);
  };
  auto add_network = [&](CLI::App * sc) {
    sc->add_flag("--no-camera", o.no_camera, "Run the LiDAR-only variant");
    sc->add_option("--weights", o.weights, "Network weights file; seeded weights otherwise")
      ->check(CLI::ExistingFile);
  };

  auto * gen = app.add_subcommand("gen", "Simulate frames and write bundles");
  add_preset(gen);
  gen->add_option("--seed", o.seed, "First scene seed")->capture_default_str();
  gen->add_option("--frames", o.frames, "Number of frames")->capture_default_str();
  gen->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto * raster = app.add_subcommand("raster", "Rasterize bundles into feature maps");
  add_preset(raster);
  add_inputs(raster, "Bundle directories");
  raster->add_option("--out", o.out, "Output directory")->capture_default_str();
  raster->add_flag("--no-camera", o.no_camera, "Skip the camera image");

  auto * project = app.add_subcommand("project", "Project features between views");
  add_preset(project);
  add_inputs(project, "Bundle directories");
  project->add_option("--out", o.out, "Output directory")->capture_default_str();
  project->add_flag("--no-camera", o.no_camera, "Skip the camera-to-range-view projection");

  auto * forward = app.add_subcommand("forward", "Run the network on bundles");
  add_preset(forward);
  add_inputs(forward, "Bundle directories");
  forward->add_option("--out", o.out, "Output directory")->capture_default_str();
  forward->add_option("--seed", o.seed, "Weight seed")->capture_default_str();
  forward->add_option("--export-weights", o.export_weights, "Write the weights used");
  add_network(forward);

  auto * fit = app.add_subcommand("fit", "Fit per-cell outputs to labels by gradient descent");
  add_preset(fit);
  add_inputs(fit, "Bundle directories; the three-actor scene when empty");
  fit->add_option("--out", o.out, "Output directory")->capture_default_str();
  fit->add_option("--seed", o.seed, "Initialization seed")->capture_default_str();
  fit->add_option("--steps", o.steps, "Descent steps")->capture_default_str();
  fit->add_option("--lr", o.learning_rate, "Initial step size")->capture_default_str();

  auto * eval = app.add_subcommand("eval", "Evaluate forward or fit outputs");
  add_preset(eval);
  add_inputs(eval, "Frame directories holding outputs.fmap, labels.txt and frame.txt");
  eval->add_option("--out", o.out, "Output directory")->capture_default_str();
  eval->add_option("--score-floor", o.score_floor, "Minimum detection score")
    ->capture_default_str();
  eval->add_option("--nms-iou", o.nms_iou, "Suppression IoU")->capture_default_str();
  eval->add_option("--recall-target", o.recall_target, "Operating-point recall")
    ->capture_default_str()
    ->check(CLI::Range(0.0, 1.0));

  auto * bench = app.add_subcommand("bench", "Time the pipeline stages on one frame");
  add_preset(bench);
  bench->add_option("--out", o.out, "Output directory")->capture_default_str();
  bench->add_option("--seed", o.seed, "Scene and weight seed")->capture_default_str();
  bench->add_option("--reps", o.reps, "Repetitions per stage")->capture_default_str();
  bench->add_option("--score-floor", o.score_floor, "Minimum detection score")
    ->capture_default_str();
  add_network(bench);

  auto * selfcheck = app.add_subcommand("selfcheck", "Run every oracle and invariant check");
  selfcheck->add_option("--out", o.out, "Output directory")->capture_default_str();
  selfcheck->add_option("--seed", o.check_seed, "Check seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen(o);
    }
    if (raster->parsed()) {
      return cmd_raster(o);
    }
    if (project->parsed()) {
      return cmd_project(o);
    }
    if (forward->parsed()) {
      return cmd_forward(o);
    }
    if (fit->parsed()) {
      return cmd_fit(o);
    }
    if (eval->parsed()) {
      return cmd_eval(o);
    }
    if (bench->parsed()) {
      return cmd_bench(o);
    }
    if (selfcheck->parsed()) {
      return cmd_selfcheck(o);
    }
  } catch (const io::BundleError & e) {
    std::cerr << "mvfuse: " << e.what() << '\n';
    return 3;
  } catch (const std::exception & e) {
    std::cerr << "mvfuse: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
