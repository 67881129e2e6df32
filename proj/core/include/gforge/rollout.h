#pragma once

#include <span>
#include <vector>

#include "gforge/completer.h"
#include "gforge/pointcloud.h"

namespace gforge {

struct RolloutOptions {
  // When false every step renders from the context cloud only.
  bool accumulate_predictions = true;
  // Predicted pixels outside [min_depth, max_depth] are never lifted.
  double min_depth = 0.1;
  double max_depth = 20.0;
  RenderOptions render;
  AccumulateOptions accumulate;
};

struct RolloutResult {
  std::vector<RgbdFrame> frames;        // one prediction per target, in order
  std::vector<GuidanceImage> guidance;  // guidance each prediction was made from
  std::vector<std::size_t> cloud_sizes;  // cloud size after each step
  PointCloud cloud;                     // final cloud
};

// Turns a predicted view into a frame: colors clamp to [0, 1], and pixels whose
// depth is non-finite or outside [min_depth, max_depth] become invalid
// (depth 0).
RgbdFrame prediction_to_frame(const Prediction& prediction, const Pose& pose, const CameraModel& camera,
                              double min_depth, double max_depth);

// Multi-step view synthesis. For each target in order: render the current
// cloud, complete it, and (with accumulation on) lift the prediction into the
// cloud before the next target. Throws kInvalidArgument when the completer's
// size differs from the camera or there is no context.
RolloutResult rollout(std::span<const RgbdFrame> context, std::span<const Pose> targets,
                      const CameraModel& camera, const ViewCompleter& completer,
                      const RolloutOptions& options = {});

}  // namespace gforge
