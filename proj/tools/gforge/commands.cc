#include "commands.h"

#include <fstream>
#include <iostream>
#include <memory>
#include <vector>

#include "gforge/depth_align.h"
#include "gforge/error.h"
#include "gforge/nn/checkpoint.h"
#include "gforge/nn/completer.h"
#include "gforge/perturb.h"
#include "gforge/pointcloud.h"
#include "gforge/rollout.h"
#include "json.hpp"

namespace gforge::cli {
namespace {

using nlohmann::json;

constexpr std::size_t kLargeCloudWarning = 10'000'000;

struct FrameSet {
  CameraModel camera = CameraModel::equirectangular(2, 1);
  std::vector<PoseEntry> poses;
  std::vector<ManifestEntry> manifest;
  std::vector<RgbdFrame> frames;
};

FrameSet load_frame_set(const FrameSetArgs& a) {
  FrameSet s;
  s.camera = read_camera_json(a.camera);
  s.poses = read_poses_json(a.poses);
  s.manifest = read_manifest(a.manifest);
  s.frames = load_frames(s.manifest, s.poses, s.camera, parse_convention(a.depth_convention, s.camera));
  return s;
}

// Holds whichever completer a command asked for.
struct CompleterHandle {
  std::unique_ptr<nn::Trainer<float>> trainer;
  std::unique_ptr<ViewCompleter> completer;
};

CompleterHandle make_completer(const CompleterArgs& a, const CameraModel& camera) {
  CompleterHandle h;
  if (a.passthrough == a.checkpoint.has_value()) {
    fail_invalid("pass exactly one of --checkpoint or --passthrough");
  }
  if (a.passthrough) {
    h.completer = std::make_unique<PassthroughCompleter>(camera.width(), camera.height());
  } else {
    h.trainer = nn::load_checkpoint<float>(a.checkpoint->string());
    h.completer = std::make_unique<nn::GeneratorCompleter<float>>(h.trainer->generator());
  }
  return h;
}

DepthImage read_scaled_depth(const fs::path& path) {
  DepthImage d = read_depth_png(path);
  fs::path sidecar = path;
  sidecar += ".json";
  if (!fs::exists(sidecar)) return d;
  std::ifstream in(sidecar);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail_invalid("bad sidecar " + sidecar.string() + ": " + e.what());
  }
  if (!j.contains("meters_per_unit") || !j.at("meters_per_unit").is_number()) {
    fail_invalid("sidecar " + sidecar.string() + " needs a numeric meters_per_unit");
  }
  const double factor = j.at("meters_per_unit").get<double>() / 0.001;
  if (!(factor > 0.0)) fail_invalid("meters_per_unit must be positive");
  for (double& v : d.data()) v *= factor;
  return d;
}

}  // namespace

DepthConvention parse_convention(const std::string& name, const CameraModel& camera) {
  if (name.empty()) return camera.type() == CameraType::kEquirectangular ? DepthConvention::kRay : DepthConvention::kZ;
  if (name == "ray") return DepthConvention::kRay;
  if (name == "z") return DepthConvention::kZ;
  fail_invalid("--depth-convention must be ray or z");
}

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "rectangles") return MaskMode::kRectangles;
  if (name == "pixels") return MaskMode::kPixels;
  fail_invalid("--mask-mode must be rectangles or pixels");
}

void write_frame_pngs(const fs::path& dir, const std::string& stem, const ColorImage& rgb, const DepthImage& depth) {
  fs::create_directories(dir);
  write_rgb_png(dir / (stem + "_rgb.png"), rgb);
  write_depth_png(dir / (stem + "_depth.png"), depth);
}

void cmd_accumulate(const AccumulateArgs& a) {
  const FrameSet s = load_frame_set(a.frames);
  AccumulateOptions options;
  options.voxel_size = a.voxel_size;
  if (options.voxel_size && !(*options.voxel_size > 0.0)) fail_invalid("--voxel-size must be positive");
  const PointCloud cloud = accumulate(s.frames, options);
  if (cloud.size() > kLargeCloudWarning) {
    std::cerr << json{{"warning", "large_cloud"}, {"points", cloud.size()}}.dump() << '\n';
  }
  write_cloud_ply(a.out, cloud);
  std::cout << json{{"command", "accumulate"}, {"frames", s.frames.size()}, {"points", cloud.size()}}.dump()
            << '\n';
}

void cmd_render(const RenderArgs& a) {
  const CameraModel camera = read_camera_json(a.camera);
  const Pose& pose = find_pose(read_poses_json(a.poses), a.pose_id);
  if (a.splat_radius < 0) fail_invalid("--splat-radius must be nonnegative");
  const PointCloud cloud = read_cloud_ply(a.cloud);
  const GuidanceImage g = render_guidance(cloud, pose, camera, RenderOptions{a.splat_radius});
  write_frame_pngs(a.out_dir, "guidance", g.rgb, g.depth);
  std::cout << json{{"command", "render"}, {"points", cloud.size()}, {"coverage", g.coverage()}}.dump() << '\n';
}

void cmd_mask(const MaskArgs& a) {
  if (a.max_fraction < 0.0 || a.max_fraction > 1.0) fail_invalid("--max-fraction must lie in [0, 1]");
  GuidanceImage g;
  g.rgb = read_rgb_png(a.rgb);
  g.depth = read_depth_png(a.depth);
  if (!g.rgb.same_size(g.depth.width(), g.depth.height())) fail_invalid("rgb and depth sizes differ");
  g.valid = MaskImage(g.depth.width(), g.depth.height(), 1, 0);
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      if (g.depth.at(x, y) > 0.0) {
        g.valid.at(x, y) = 1;
      } else {
        for (int c = 0; c < 3; ++c) g.rgb.at(x, y, c) = 0.0;
      }
    }
  }
  const MaskResult r = random_mask(g, a.seed, MaskOptions{a.max_fraction, parse_mask_mode(a.mask_mode)});
  write_frame_pngs(a.out_dir, "masked", r.guidance.rgb, r.guidance.depth);
  std::cout << json{{"command", "mask"},
                    {"target_fraction", r.target_fraction},
                    {"masked_fraction", r.masked_fraction}}
                   .dump()
            << '\n';
}

void cmd_rollout(const RolloutArgs& a) {
  const FrameSet s = load_frame_set(a.frames);
  std::vector<Pose> targets;
  for (const PoseEntry& e : read_poses_json(a.targets)) targets.push_back(e.pose);
  const CompleterHandle h = make_completer(a.completer, s.camera);
  RolloutOptions options;
  options.accumulate_predictions = !a.no_accumulate;
  const RolloutResult r = rollout(s.frames, targets, s.camera, *h.completer, options);
  fs::create_directories(a.out_dir);
  json coverage = json::array();
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "step%03zu", k);
    write_frame_pngs(a.out_dir, stem, r.frames[k].rgb, r.frames[k].depth);
    coverage.push_back(r.guidance[k].coverage());
  }
  std::cout << json{{"command", "rollout"},
                    {"steps", r.frames.size()},
                    {"guidance_coverage", coverage},
                    {"cloud_sizes", r.cloud_sizes}}
                   .dump()
            << '\n';
}

void cmd_align(const AlignArgs& a) {
  const DepthImage dense = read_scaled_depth(a.dense);
  const DepthImage sparse = read_scaled_depth(a.sparse);
  if (!dense.same_size(sparse.width(), sparse.height())) fail_invalid("dense and sparse sizes differ");
  MaskImage valid(sparse.width(), sparse.height(), 1, 0);
  for (int y = 0; y < sparse.height(); ++y) {
    for (int x = 0; x < sparse.width(); ++x) valid.at(x, y) = sparse.at(x, y) > 0.0 ? 1 : 0;
  }
  const ScaleFit fit = align_scale(dense, sparse, valid, a.with_shift);
  if (a.out) write_depth_png(*a.out, fit.aligned);
  std::cout << json{{"command", "align"},
                    {"scale", fit.scale},
                    {"shift", fit.shift},
                    {"residual", fit.residual},
                    {"valid_pixels", fit.valid_pixels},
                    {"coverage_ok", coverage_filter(valid, a.min_coverage)}}
                   .dump()
            << '\n';
}

void cmd_perturb(const PerturbArgs& a) {
  const FrameSet s = load_frame_set(a.frames);
  if (a.max_tries < 1) fail_invalid("--max-tries must be at least 1");
  if (a.horiz < 0.0 || a.vert < 0.0) fail_invalid("--horiz and --vert must be nonnegative");
  const CompleterHandle h = make_completer(a.completer, s.camera);
  PerturbOptions options;
  options.horizontal = a.horiz;
  options.vertical = a.vert;
  options.max_tries = a.max_tries;
  const auto out = augment_trajectory(s.frames, *h.completer, a.seed, options);

  fs::create_directories(a.out_dir / "frames");
  std::vector<PoseEntry> poses;
  std::vector<ManifestEntry> manifest;
  std::ofstream details(a.out_dir / "perturbations.jsonl");
  if (!details) fail_io("cannot write " + (a.out_dir / "perturbations.jsonl").string());
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string id = s.manifest[i].pose_id + "_aug";
    write_frame_pngs(a.out_dir / "frames", id, out[i].frame.rgb, out[i].frame.depth);
    poses.push_back({id, out[i].frame.pose});
    manifest.push_back({a.out_dir / "frames" / (id + "_rgb.png"), a.out_dir / "frames" / (id + "_depth.png"), id});
    const Perturbation& p = out[i].perturbation;
    accepted += p.accepted ? 1 : 0;
    details << json{{"pose_id", id},
                    {"source", s.manifest[i].pose_id},
                    {"delta", {p.delta.x(), p.delta.y(), p.delta.z()}},
                    {"observed_depth", p.observed_depth},
                    {"tries", p.tries},
                    {"accepted", p.accepted},
                    {"no_valid_depth", p.no_valid_depth},
                    {"context", {out[i].context.first, out[i].context.second}}}
                   .dump()
            << '\n';
  }
  write_poses_json(a.out_dir / "poses.json", poses);
  write_manifest(a.out_dir / "frames.jsonl", manifest);
  write_camera_json(a.out_dir / "camera.json", s.camera);
  std::cout << json{{"command", "perturb"}, {"frames", out.size()}, {"accepted", accepted}}.dump() << '\n';
}

}  // namespace gforge::cli
