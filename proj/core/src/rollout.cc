#include "gforge/rollout.h"

#include <cmath>

#include "gforge/error.h"

namespace gforge {

RgbdFrame prediction_to_frame(const Prediction& prediction, const Pose& pose, const CameraModel& camera,
                              double min_depth, double max_depth) {
  const int w = camera.width();
  const int h = camera.height();
  if (!prediction.rgb.same_size(w, h) || prediction.rgb.channels() != 3 || !prediction.depth.same_size(w, h)) {
    fail_invalid("prediction size does not match the target camera");
  }
  RgbdFrame f;
  f.rgb = prediction.rgb;
  for (double& c : f.rgb.data()) c = std::isfinite(c) ? std::clamp(c, 0.0, 1.0) : 0.0;
  f.depth = prediction.depth;
  f.valid = MaskImage(w, h, 1, 0);
  for (std::size_t i = 0; i < f.depth.pixel_count(); ++i) {
    const double d = f.depth.data()[i];
    if (std::isfinite(d) && d >= min_depth && d <= max_depth) {
      f.valid.data()[i] = 1;
    } else {
      f.depth.data()[i] = 0.0;
    }
  }
  f.pose = pose;
  f.camera = camera;
  return f;
}

RolloutResult rollout(std::span<const RgbdFrame> context, std::span<const Pose> targets,
                      const CameraModel& camera, const ViewCompleter& completer, const RolloutOptions& options) {
  if (context.empty()) fail_invalid("rollout needs at least one context frame");
  if (completer.width() != camera.width() || completer.height() != camera.height()) {
    fail_invalid("generator input size " + std::to_string(completer.width()) + "x" +
                 std::to_string(completer.height()) + " does not match camera " + std::to_string(camera.width()) +
                 "x" + std::to_string(camera.height()));
  }
  RolloutResult result;
  result.cloud = accumulate(context, options.accumulate);
  const auto next_source = static_cast<std::int32_t>(context.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    GuidanceImage guidance = render_guidance(result.cloud, targets[k], camera, options.render);
    Prediction pred = completer.complete(guidance, targets[k]);
    RgbdFrame frame = prediction_to_frame(pred, targets[k], camera, options.min_depth, options.max_depth);
    if (options.accumulate_predictions) {
      lift_frame(frame, next_source + static_cast<std::int32_t>(k), result.cloud);
      if (options.accumulate.voxel_size) result.cloud = voxel_dedup(result.cloud, *options.accumulate.voxel_size);
    }
    result.cloud_sizes.push_back(result.cloud.size());
    result.guidance.push_back(std::move(guidance));
    result.frames.push_back(std::move(frame));
  }
  return result;
}

}  // namespace gforge
