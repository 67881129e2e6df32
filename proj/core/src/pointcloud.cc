#include "gforge/pointcloud.h"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "gforge/error.h"

namespace gforge {

void PointCloud::reserve(std::size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  source.reserve(n);
}

void PointCloud::push_back(const Vec3& position, const Eigen::Vector3d& color, std::int32_t source_index) {
  positions.push_back(position);
  colors.push_back(color);
  source.push_back(source_index);
}

void PointCloud::append(const PointCloud& other) {
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  source.insert(source.end(), other.source.begin(), other.source.end());
}

void lift_frame(const RgbdFrame& frame, std::int32_t source_index, PointCloud& out) {
  const CameraModel& cam = frame.camera;
  const Mat3& rot = frame.pose.rotation();
  const Vec3& t = frame.pose.translation();
  for (int y = 0; y < cam.height(); ++y) {
    for (int x = 0; x < cam.width(); ++x) {
      if (!frame.valid.at(x, y)) continue;
      const Vec3 p_cam = unproject(cam, x + 0.5, y + 0.5, frame.depth.at(x, y));
      out.push_back(rot * p_cam + t,
                    Eigen::Vector3d(frame.rgb.at(x, y, 0), frame.rgb.at(x, y, 1), frame.rgb.at(x, y, 2)),
                    source_index);
    }
  }
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

VoxelKey voxel_of(const Vec3& p, double edge) {
  return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / edge)),
                  static_cast<std::int64_t>(std::floor(p.y() / edge)),
                  static_cast<std::int64_t>(std::floor(p.z() / edge))};
}

}  // namespace

PointCloud voxel_dedup(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) fail_invalid("voxel size must be positive");
  std::unordered_set<VoxelKey, VoxelHash> seen;
  seen.reserve(cloud.size());
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (seen.insert(voxel_of(cloud.positions[i], voxel_size)).second) {
      out.push_back(cloud.positions[i], cloud.colors[i], cloud.source[i]);
    }
  }
  return out;
}

PointCloud accumulate(std::span<const RgbdFrame> frames, const AccumulateOptions& options) {
  if (frames.empty()) fail_invalid("accumulate needs at least one frame");
  std::size_t total = 0;
  for (const RgbdFrame& f : frames) {
    f.validate();
    total += f.valid_count();
  }
  PointCloud cloud;
  cloud.reserve(total);
  for (std::size_t i = 0; i < frames.size(); ++i) lift_frame(frames[i], static_cast<std::int32_t>(i), cloud);
  if (options.voxel_size) return voxel_dedup(cloud, *options.voxel_size);
  return cloud;
}

GuidanceImage render_guidance(const PointCloud& cloud, const Pose& pose, const CameraModel& camera,
                              const RenderOptions& options) {
  const int w = camera.width();
  const int h = camera.height();
  const bool wrap = camera.type() == CameraType::kEquirectangular;
  const int r = std::max(0, options.splat_radius);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> owner(zbuf.size(), kNone);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto proj = project(camera, pose.world_to_camera(cloud.positions[i]));
    if (!proj) continue;
    const double fu = std::floor(proj->u);
    const double fv = std::floor(proj->v);
    if (!std::isfinite(fu) || !std::isfinite(fv)) continue;
    int px = 0;
    int py = 0;
    if (wrap) {
      px = static_cast<int>(fu) % w;
      if (px < 0) px += w;
      py = std::clamp(static_cast<int>(fv), 0, h - 1);
    } else {
      if (fu < -r || fu >= w + r || fv < -r || fv >= h + r) continue;
      px = static_cast<int>(fu);
      py = static_cast<int>(fv);
    }
    for (int dy = -r; dy <= r; ++dy) {
      const int y = py + dy;
      if (y < 0 || y >= h) continue;
      for (int dx = -r; dx <= r; ++dx) {
        int x = px + dx;
        if (wrap) {
          x = ((x % w) + w) % w;
        } else if (x < 0 || x >= w) {
          continue;
        }
        const std::size_t k = static_cast<std::size_t>(y) * w + x;
        if (proj->depth < zbuf[k]) {
          zbuf[k] = proj->depth;
          owner[k] = i;
        }
      }
    }
  }

  GuidanceImage g = GuidanceImage::blank(w, h);
  for (std::size_t k = 0; k < owner.size(); ++k) {
    if (owner[k] == kNone) continue;
    g.valid.data()[k] = 1;
    g.depth.data()[k] = zbuf[k];
    const Eigen::Vector3d& c = cloud.colors[owner[k]];
    g.rgb.data()[3 * k] = c.x();
    g.rgb.data()[3 * k + 1] = c.y();
    g.rgb.data()[3 * k + 2] = c.z();
  }
  return g;
}

}  // namespace gforge
