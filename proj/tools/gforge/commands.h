#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gforge/io.h"
#include "gforge/masking.h"

namespace gforge::cli {

namespace fs = std::filesystem;

struct FrameSetArgs {
  fs::path manifest;
  fs::path poses;
  fs::path camera;
  std::string depth_convention;  // "ray", "z" or empty for the camera default
};

struct AccumulateArgs {
  FrameSetArgs frames;
  std::optional<double> voxel_size;
  fs::path out;
};

struct RenderArgs {
  fs::path cloud;
  fs::path poses;
  std::string pose_id;
  fs::path camera;
  int splat_radius = 0;
  fs::path out_dir;
};

struct MaskArgs {
  fs::path rgb;
  fs::path depth;
  std::uint64_t seed = 0;
  double max_fraction = 0.75;
  std::string mask_mode = "rectangles";
  fs::path out_dir;
};

struct TrainArgs {
  fs::path dataset;
  std::optional<fs::path> config;
  int steps = 100;
  std::uint64_t seed = 0;
  int batch_size = 1;
  double max_fraction = 0.75;
  std::string dtype = "f32";
  fs::path out;
  std::optional<fs::path> log;
  int log_every = 1;
};

struct CompleterArgs {
  std::optional<fs::path> checkpoint;
  bool passthrough = false;
};

struct RolloutArgs {
  FrameSetArgs frames;
  fs::path targets;
  CompleterArgs completer;
  bool no_accumulate = false;
  fs::path out_dir;
};

struct AlignArgs {
  fs::path dense;
  fs::path sparse;
  bool with_shift = false;
  double min_coverage = 0.10;
  std::optional<fs::path> out;
};

struct PerturbArgs {
  FrameSetArgs frames;
  CompleterArgs completer;
  std::uint64_t seed = 0;
  double horiz = 1.5;
  double vert = 0.1;
  int max_tries = 16;
  fs::path out_dir;
};

struct SynthArgs {
  fs::path out_dir;
  std::string camera = "equirectangular";
  int width = 64;
  int height = 32;
  int frames = 2;
  double spacing = 0.5;
  double yaw_step_deg = 0.0;
  std::uint64_t seed = 0;
};

// Each command prints a one-line JSON summary to stdout and throws
// gforge::Error on failure.
void cmd_accumulate(const AccumulateArgs& a);
void cmd_render(const RenderArgs& a);
void cmd_mask(const MaskArgs& a);
void cmd_train(const TrainArgs& a);
void cmd_rollout(const RolloutArgs& a);
void cmd_align(const AlignArgs& a);
void cmd_perturb(const PerturbArgs& a);
void cmd_synth(const SynthArgs& a);

// Shared helpers.
DepthConvention parse_convention(const std::string& name, const CameraModel& camera);
MaskMode parse_mask_mode(const std::string& name);
void write_frame_pngs(const fs::path& dir, const std::string& stem, const ColorImage& rgb, const DepthImage& depth);

}  // namespace gforge::cli
