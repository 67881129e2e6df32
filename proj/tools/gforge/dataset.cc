#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "commands.h"
#include "gforge/error.h"
#include "gforge/nn/checkpoint.h"
#include "gforge/pointcloud.h"
#include "gforge/synthetic.h"
#include "json.hpp"

namespace gforge::cli {
namespace {

using nlohmann::json;

struct TrainingPair {
  GuidanceImage guidance;  // source frame reprojected to the target pose
  int target = 0;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Adjacent frames in both directions; a single frame pairs with itself.
std::vector<TrainingPair> build_pairs(const std::vector<RgbdFrame>& frames) {
  std::vector<TrainingPair> pairs;
  auto add = [&](int src, int dst) {
    const PointCloud cloud = accumulate(std::span<const RgbdFrame>(&frames[static_cast<std::size_t>(src)], 1));
    const RgbdFrame& target = frames[static_cast<std::size_t>(dst)];
    pairs.push_back({render_guidance(cloud, target.pose, target.camera), dst});
  };
  if (frames.size() == 1) {
    add(0, 0);
    return pairs;
  }
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    add(static_cast<int>(i), static_cast<int>(i + 1));
    add(static_cast<int>(i + 1), static_cast<int>(i));
  }
  return pairs;
}

template <typename T>
void run_training(const TrainArgs& a, const nn::TrainConfig& config, const std::vector<RgbdFrame>& frames) {
  const std::vector<TrainingPair> pairs = build_pairs(frames);
  nn::Trainer<T> trainer(config);
  std::mt19937_64 rng(a.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  MaskOptions mask_options;
  mask_options.max_fraction = a.max_fraction;

  std::ofstream log;
  if (a.log) {
    log.open(*a.log);
    if (!log) fail_io("cannot write " + a.log->string());
  }
  nn::StepStats stats;
  for (int step = 0; step < a.steps; ++step) {
    std::vector<GuidanceImage> guidance;
    std::vector<RgbdFrame> targets;
    for (int b = 0; b < a.batch_size; ++b) {
      const TrainingPair& p = pairs[pick(rng)];
      guidance.push_back(random_mask(p.guidance, rng(), mask_options).guidance);
      targets.push_back(frames[static_cast<std::size_t>(p.target)]);
    }
    stats = trainer.train_step(nn::make_batch<T>(guidance, targets, config.generator.d_max));
    if (log.is_open() && (stats.step % a.log_every == 0 || step + 1 == a.steps)) {
      log << json{{"step", stats.step},
                  {"generator_loss", stats.generator_loss},
                  {"discriminator_loss", stats.discriminator_loss},
                  {"depth_l1", stats.depth_l1},
                  {"adversarial", stats.adversarial}}
                 .dump()
          << '\n';
    }
  }
  nn::save_checkpoint(a.out.string(), trainer);
  std::cout << json{{"command", "train"},
                    {"steps", a.steps},
                    {"pairs", pairs.size()},
                    {"final_depth_l1", stats.depth_l1},
                    {"final_generator_loss", stats.generator_loss},
                    {"checkpoint", a.out.string()}}
                   .dump()
            << '\n';
}

}  // namespace

void cmd_train(const TrainArgs& a) {
  if (a.steps < 0) fail_invalid("--steps must be nonnegative");
  if (a.batch_size < 1) fail_invalid("--batch-size must be at least 1");
  if (a.log_every < 1) fail_invalid("--log-every must be at least 1");
  if (a.max_fraction < 0.0 || a.max_fraction > 1.0) fail_invalid("--max-fraction must lie in [0, 1]");
  const CameraModel camera = read_camera_json(a.dataset / "camera.json");
  const auto poses = read_poses_json(a.dataset / "poses.json");
  const auto manifest = read_manifest(a.dataset / "frames.jsonl");
  const auto frames = load_frames(manifest, poses, camera, parse_convention("", camera));
  if (frames.empty()) fail_invalid("training dataset has no frames");

  nn::TrainConfig config;
  if (a.config) {
    config = nn::train_config_from_json(read_text(*a.config));
    if (config.generator.width != camera.width() || config.generator.height != camera.height()) {
      fail_invalid("config input size " + std::to_string(config.generator.width) + "x" +
                   std::to_string(config.generator.height) + " differs from the dataset camera");
    }
  } else {
    config.generator.width = camera.width();
    config.generator.height = camera.height();
  }
  config.generator.seed = a.seed;
  config.discriminator.seed = a.seed + 1;
  config.generator.validate();
  if (a.dtype == "f32") {
    run_training<float>(a, config, frames);
  } else if (a.dtype == "f64") {
    run_training<double>(a, config, frames);
  } else {
    fail_invalid("--dtype must be f32 or f64");
  }
}

void cmd_synth(const SynthArgs& a) {
  if (a.frames < 1) fail_invalid("--frames must be at least 1");
  CameraModel camera = a.camera == "equirectangular"
                           ? CameraModel::equirectangular(a.width, a.height)
                           : (a.camera == "pinhole" ? CameraModel::pinhole(a.width, a.height, 0.5 * a.width,
                                                                           0.5 * a.width, 0.5 * a.width,
                                                                           0.5 * a.height)
                                                    : throw Error(ErrorKind::kInvalidArgument,
                                                                  "--camera must be equirectangular or pinhole"));
  SyntheticRoom room({-3.0, -2.5, -1.2}, {3.0, 2.5, 1.4}, a.seed);
  room.add_box({1.2, -0.6, -1.2}, {1.9, 0.4, 0.1});
  room.add_box({-2.2, 1.0, -1.2}, {-1.4, 1.8, 0.6});

  fs::create_directories(a.out_dir / "frames");
  std::vector<PoseEntry> poses;
  std::vector<ManifestEntry> manifest;
  const double start = -0.5 * a.spacing * (a.frames - 1);
  for (int i = 0; i < a.frames; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "f%03d", i);
    const double yaw = a.yaw_step_deg * i * M_PI / 180.0;
    const Pose pose = Pose::from_yaw(yaw, Vec3(start + a.spacing * i, 0.0, 0.0));
    const RgbdFrame f = room.render(pose, camera);
    write_frame_pngs(a.out_dir / "frames", id, f.rgb, f.depth);
    poses.push_back({id, pose});
    manifest.push_back({a.out_dir / "frames" / (std::string(id) + "_rgb.png"),
                        a.out_dir / "frames" / (std::string(id) + "_depth.png"), id});
  }
  write_camera_json(a.out_dir / "camera.json", camera);
  write_poses_json(a.out_dir / "poses.json", poses);
  write_manifest(a.out_dir / "frames.jsonl", manifest);
  std::cout << json{{"command", "synth"}, {"frames", a.frames}, {"out_dir", a.out_dir.string()}}.dump() << '\n';
}

}  // namespace gforge::cli
