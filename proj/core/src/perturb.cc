#include "gforge/perturb.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gforge/error.h"

namespace gforge {

double depth_in_direction(const RgbdFrame& frame, const Vec3& dir_world) {
  const CameraModel& cam = frame.camera;
  const auto proj = project(cam, frame.pose.rotation().transpose() * dir_world);
  if (!proj) return 0.0;
  const int w = cam.width();
  const int h = cam.height();
  int px = static_cast<int>(std::floor(proj->u)) % w;
  if (px < 0) px += w;
  const int py = std::clamp(static_cast<int>(std::floor(proj->v)), 0, h - 1);
  if (frame.valid.at(px, py)) return frame.depth.at(px, py);
  std::vector<double> around;
  for (int dy = -2; dy <= 2; ++dy) {
    const int y = py + dy;
    if (y < 0 || y >= h) continue;
    for (int dx = -2; dx <= 2; ++dx) {
      const int x = ((px + dx) % w + w) % w;
      if (frame.valid.at(x, y)) around.push_back(frame.depth.at(x, y));
    }
  }
  if (around.empty()) return 0.0;
  std::sort(around.begin(), around.end());
  const std::size_t m = around.size() / 2;
  return around.size() % 2 ? around[m] : 0.5 * (around[m - 1] + around[m]);
}

Perturbation sample_perturbation(const RgbdFrame& frame, std::uint64_t seed, const PerturbOptions& options) {
  if (frame.camera.type() != CameraType::kEquirectangular) {
    fail_invalid("perturbation sampling needs an equirectangular frame");
  }
  Perturbation result;
  result.pose = frame.pose;
  if (frame.valid_count() == 0) {
    result.no_valid_depth = true;
    return result;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> horiz(-options.horizontal, options.horizontal);
  std::uniform_real_distribution<double> vert(-options.vertical, options.vertical);
  for (int attempt = 0; attempt < options.max_tries; ++attempt) {
    const double dx = horiz(rng);
    const double dy = horiz(rng);
    const double dz = vert(rng);
    const Vec3 delta(dx, dy, dz);
    result.tries = attempt + 1;
    const double len = delta.norm();
    if (len == 0.0) {
      result.accepted = true;
      result.delta = delta;
      return result;
    }
    const double depth = depth_in_direction(frame, delta / len);
    if (depth > 0.0 && len < depth - options.margin) {
      result.accepted = true;
      result.delta = delta;
      result.observed_depth = depth;
      result.pose = frame.pose.translated(delta);
      return result;
    }
  }
  return result;
}

std::pair<int, int> nearest_two(std::span<const RgbdFrame> frames, int query) {
  const int n = static_cast<int>(frames.size());
  if (n < 2) fail_invalid("nearest_two needs at least two frames");
  if (n == 2) return {0, 1};
  std::vector<std::pair<double, int>> order;
  const Vec3& q = frames[query].pose.translation();
  for (int i = 0; i < n; ++i) {
    if (i == query) continue;
    order.emplace_back((frames[i].pose.translation() - q).norm(), i);
  }
  std::sort(order.begin(), order.end());
  return {std::min(order[0].second, order[1].second), std::max(order[0].second, order[1].second)};
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::vector<AugmentedFrame> augment_trajectory(std::span<const RgbdFrame> frames, const ViewCompleter& completer,
                                               std::uint64_t seed, const PerturbOptions& options,
                                               const RolloutOptions& rollout_options) {
  if (frames.size() < 2) fail_invalid("augment_trajectory needs at least two frames");
  std::vector<AugmentedFrame> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    AugmentedFrame aug;
    aug.perturbation = sample_perturbation(frames[i], frame_seed(seed, i), options);
    aug.context = nearest_two(frames, static_cast<int>(i));
    const RgbdFrame pair[2] = {frames[aug.context.first], frames[aug.context.second]};
    const Pose target[1] = {aug.perturbation.pose};
    RolloutOptions single = rollout_options;
    single.accumulate_predictions = false;
    RolloutResult r = rollout(pair, target, frames[i].camera, completer, single);
    aug.frame = std::move(r.frames.front());
    out.push_back(std::move(aug));
  }
  return out;
}

}  // namespace gforge
