#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gforge/completer.h"
#include "gforge/image.h"
#include "gforge/rollout.h"

namespace gforge {

struct PerturbOptions {
  double horizontal = 1.5;  // half-width of the uniform range for world X and Y, meters
  double vertical = 0.1;    // half-width for world Z (height), meters
  int max_tries = 16;
  double margin = 0.1;      // required clearance before the observed surface, meters
};

struct Perturbation {
  Pose pose;              // translated frame pose, or the original on fallback
  Vec3 delta = Vec3::Zero();
  double observed_depth = 0.0;  // depth read in the direction of delta
  int tries = 0;
  bool accepted = false;
  bool no_valid_depth = false;  // frame had no valid depth at all
};

// Depth of an equirectangular frame in the world-space direction `dir_world`:
// the pixel under the direction if valid, otherwise the median of valid depths
// in its 5x5 neighborhood (horizontal wrap). Returns 0 when none is valid.
double depth_in_direction(const RgbdFrame& frame, const Vec3& dir_world);

// Draws delta ~ U(-h, h)^2 x U(-v, v) in world axes (Z up) and accepts it iff
// |delta| < depth_in_direction(delta) - margin (a zero draw is always
// accepted). Falls back to the unperturbed pose after max_tries rejections.
// Throws kInvalidArgument for non-equirectangular frames.
Perturbation sample_perturbation(const RgbdFrame& frame, std::uint64_t seed, const PerturbOptions& options = {});

// Indices of the two frames nearest to frame `query` by camera-center
// distance, excluding the query itself when at least two others exist (ties
// go to the lower index). With two frames the pair is {0, 1}.
std::pair<int, int> nearest_two(std::span<const RgbdFrame> frames, int query);

struct AugmentedFrame {
  RgbdFrame frame;
  Perturbation perturbation;
  std::pair<int, int> context;
};

// Per-frame RNG stream derived from (seed, frame index).
std::uint64_t frame_seed(std::uint64_t seed, std::size_t index);

// For each frame: perturb, build a cloud from its two nearest frames, render
// at the perturbed pose and complete. Output rotations equal the inputs'.
std::vector<AugmentedFrame> augment_trajectory(std::span<const RgbdFrame> frames, const ViewCompleter& completer,
                                               std::uint64_t seed, const PerturbOptions& options = {},
                                               const RolloutOptions& rollout_options = {});

}  // namespace gforge
