#include "gforge/synthetic.h"

#include <cmath>
#include <limits>
#include <random>

#include "gforge/error.h"

namespace gforge {
namespace {

// Slab test. Returns entry and exit distances along the ray.
bool intersect_box(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& d, double& t_enter, double& t_exit,
                   int& enter_face, int& exit_face) {
  t_enter = -std::numeric_limits<double>::infinity();
  t_exit = std::numeric_limits<double>::infinity();
  enter_face = exit_face = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    int f0 = 2 * a;
    int f1 = 2 * a + 1;
    if (t0 > t1) {
      std::swap(t0, t1);
      std::swap(f0, f1);
    }
    if (t0 > t_enter) {
      t_enter = t0;
      enter_face = f0;
    }
    if (t1 < t_exit) {
      t_exit = t1;
      exit_face = f1;
    }
  }
  return t_enter <= t_exit;
}

}  // namespace

SyntheticRoom::SyntheticRoom(const Vec3& min_corner, const Vec3& max_corner, std::uint64_t texture_seed)
    : room_{min_corner, max_corner}, seed_(texture_seed) {
  if (!((max_corner - min_corner).array() > 0.0).all()) fail_invalid("room corners must be ordered");
}

void SyntheticRoom::add_box(const Vec3& min_corner, const Vec3& max_corner) {
  if (!((max_corner - min_corner).array() > 0.0).all()) fail_invalid("box corners must be ordered");
  obstacles_.push_back(Box{min_corner, max_corner});
}

Eigen::Vector3d SyntheticRoom::texture(const Vec3& p, int face) const {
  std::mt19937_64 rng(seed_ * 7919 + static_cast<std::uint64_t>(face + 1));
  std::uniform_real_distribution<double> base(0.25, 0.75);
  const Eigen::Vector3d tint(base(rng), base(rng), base(rng));
  const int axis = face / 2;
  const int ua = (axis + 1) % 3;
  const int va = (axis + 2) % 3;
  const double checker = ((static_cast<long>(std::floor(p[ua] / 0.5)) + static_cast<long>(std::floor(p[va] / 0.5))) & 1)
                             ? 0.18
                             : -0.18;
  const double stripe = 0.06 * std::sin(p[ua] * 9.0) * std::cos(p[va] * 7.0);
  Eigen::Vector3d c = tint.array() + checker + stripe;
  c = c.cwiseMax(0.0).cwiseMin(1.0);
  // Quantize to 8 bits so PNG round trips are lossless.
  for (int i = 0; i < 3; ++i) c[i] = std::round(c[i] * 255.0) / 255.0;
  return c;
}

bool SyntheticRoom::trace(const Vec3& origin, const Vec3& direction, double& distance,
                          Eigen::Vector3d& color) const {
  double t_in = 0.0, t_out = 0.0;
  int f_in = -1, f_out = -1;
  if (!intersect_box(room_.lo, room_.hi, origin, direction, t_in, t_out, f_in, f_out) || t_out <= 0.0) return false;
  double best = t_out;
  int best_face = f_out;
  int best_obstacle = -1;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (intersect_box(obstacles_[i].lo, obstacles_[i].hi, origin, direction, t_in, t_out, f_in, f_out) &&
        t_in > 1e-9 && t_in < best) {
      best = t_in;
      best_face = f_in;
      best_obstacle = static_cast<int>(i);
    }
  }
  distance = best;
  color = texture(origin + best * direction, best_face + 6 * (best_obstacle + 1));
  return true;
}

RgbdFrame SyntheticRoom::render(const Pose& pose, const CameraModel& camera) const {
  const int w = camera.width();
  const int h = camera.height();
  ColorImage rgb(w, h, 3, 0.0);
  DepthImage depth(w, h, 1, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 d_cam = pixel_ray(camera, x + 0.5, y + 0.5).direction;
      const Vec3 d_world = pose.rotation() * d_cam;
      double dist = 0.0;
      Eigen::Vector3d color;
      if (!trace(pose.translation(), d_world, dist, color)) continue;
      depth.at(x, y) = camera.type() == CameraType::kPinhole ? dist * d_cam.z() : dist;
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = color[c];
    }
  }
  return make_frame(std::move(rgb), std::move(depth), pose, camera);
}

Prediction RoomCompleter::complete(const GuidanceImage&, const Pose& target_pose) const {
  RgbdFrame f = room_.render(target_pose, camera_);
  return Prediction{std::move(f.rgb), std::move(f.depth)};
}

}  // namespace gforge
