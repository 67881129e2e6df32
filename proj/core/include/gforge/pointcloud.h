#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gforge/geometry.h"
#include "gforge/image.h"

namespace gforge {

// World-frame colored points; `source[i]` is the index of the frame point i
// was lifted from. Parallel arrays always share one length.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Eigen::Vector3d> colors;
  std::vector<std::int32_t> source;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void reserve(std::size_t n);
  void push_back(const Vec3& position, const Eigen::Vector3d& color, std::int32_t source_index);
  void append(const PointCloud& other);
};

struct AccumulateOptions {
  // Keep only the first point per cubic voxel of this edge length (meters),
  // keyed by floor(p / edge). Disabled when unset.
  std::optional<double> voxel_size;
};

// Lifts every valid pixel (pixel centers) of the frame into world space, in
// row-major pixel order.
void lift_frame(const RgbdFrame& frame, std::int32_t source_index, PointCloud& out);

// Frame-major, row-major accumulation. Throws kInvalidArgument for an empty
// frame list or a malformed frame.
PointCloud accumulate(std::span<const RgbdFrame> frames, const AccumulateOptions& options = {});

// First-come voxel filter over an existing cloud (order preserving).
PointCloud voxel_dedup(const PointCloud& cloud, double voxel_size);

struct RenderOptions {
  // Each point also covers the (2r+1)^2 pixel square around its pixel.
  int splat_radius = 0;
};

// Z-buffered point rasterization. A point lands on pixel (floor(u), floor(v)),
// the nearest pixel center; equirectangular u wraps modulo W and v clamps to
// the image, pinhole coordinates outside the image are dropped. The smallest
// depth wins with strict less-than, so equal depths keep the lowest point index.
GuidanceImage render_guidance(const PointCloud& cloud, const Pose& pose, const CameraModel& camera,
                              const RenderOptions& options = {});

// Binary little-endian PLY: double x y z, uchar red green blue, int source.
void write_cloud_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud_ply(const std::filesystem::path& path);

}  // namespace gforge
