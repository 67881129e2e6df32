#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gforge/geometry.h"
#include "gforge/image.h"

namespace gforge {

// 8-bit RGB PNG <-> [0, 1] colors (value / 255, written with round-to-nearest).
ColorImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const ColorImage& rgb);

// 16-bit grayscale PNG in millimeters; 0 means invalid. Depths round to the
// nearest millimeter and saturate at 65.535 m.
DepthImage read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth);

std::uint16_t depth_to_millimeters(double meters);

// Camera file: {"type": "equirectangular"|"pinhole", "width", "height",
// "fx", "fy", "cx", "cy"} (intrinsics only for pinhole).
CameraModel read_camera_json(const std::filesystem::path& path);
void write_camera_json(const std::filesystem::path& path, const CameraModel& camera);

// Pose file: [{"id": "...", "matrix": [16 numbers, row-major world<-camera]}].
// Order of the file is preserved.
struct PoseEntry {
  std::string id;
  Pose pose;
};
std::vector<PoseEntry> read_poses_json(const std::filesystem::path& path);
void write_poses_json(const std::filesystem::path& path, const std::vector<PoseEntry>& poses);
const Pose& find_pose(const std::vector<PoseEntry>& poses, const std::string& id);

// Manifest: JSON lines {"rgb_path", "depth_path", "pose_id"}; relative paths
// resolve against the manifest's directory.
struct ManifestEntry {
  std::filesystem::path rgb_path;
  std::filesystem::path depth_path;
  std::string pose_id;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

enum class DepthConvention { kRay, kZ };

// Loads every manifest frame. Pinhole depth stored as ray distance is
// converted to Z depth when `convention` is kRay; equirectangular frames only
// accept kRay.
std::vector<RgbdFrame> load_frames(const std::vector<ManifestEntry>& entries,
                                   const std::vector<PoseEntry>& poses, const CameraModel& camera,
                                   DepthConvention convention);

}  // namespace gforge
