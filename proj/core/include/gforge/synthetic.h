#pragma once

#include <cstdint>

#include "gforge/completer.h"
#include "gforge/geometry.h"
#include "gforge/image.h"

namespace gforge {

// Axis-aligned box room [min, max] in world coordinates (Z up) with a
// procedural texture on every face. Rendering ray-casts each pixel center,
// so frames are exact up to floating point.
class SyntheticRoom {
 public:
  SyntheticRoom(const Vec3& min_corner, const Vec3& max_corner, std::uint64_t texture_seed = 0);

  // Adds an axis-aligned box obstacle inside the room.
  void add_box(const Vec3& min_corner, const Vec3& max_corner);

  RgbdFrame render(const Pose& pose, const CameraModel& camera) const;

  // Ray distance and color along a world-space ray (unit direction); returns
  // false when nothing is hit.
  bool trace(const Vec3& origin, const Vec3& direction, double& distance, Eigen::Vector3d& color) const;

 private:
  struct Box {
    Vec3 lo;
    Vec3 hi;
  };
  Eigen::Vector3d texture(const Vec3& point, int face) const;

  Box room_;
  std::vector<Box> obstacles_;
  std::uint64_t seed_;
};

// Completer that returns the room's true view at the target pose.
class RoomCompleter final : public ViewCompleter {
 public:
  RoomCompleter(const SyntheticRoom& room, const CameraModel& camera) : room_(room), camera_(camera) {}
  int width() const override { return camera_.width(); }
  int height() const override { return camera_.height(); }
  Prediction complete(const GuidanceImage& guidance, const Pose& target_pose) const override;

 private:
  const SyntheticRoom& room_;
  CameraModel camera_;
};

}  // namespace gforge
