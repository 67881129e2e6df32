#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "gforge/error.h"
#include "gforge/pointcloud.h"

namespace gforge {
namespace {

static_assert(std::endian::native == std::endian::little, "cloud I/O assumes a little-endian host");

constexpr const char* kHeaderEnd = "end_header\n";

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const char*& p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  p += sizeof(T);
  return value;
}

}  // namespace

void write_cloud_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\ncomment guidance-forge point cloud\n"
         << "element vertex " << cloud.size() << "\n"
         << "property double x\nproperty double y\nproperty double z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         << "property int source\n" << kHeaderEnd;
  std::string buf = header.str();
  buf.reserve(buf.size() + cloud.size() * 31);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) put<double>(buf, cloud.positions[i][a]);
    for (int c = 0; c < 3; ++c) {
      put<std::uint8_t>(buf, static_cast<std::uint8_t>(std::lround(std::clamp(cloud.colors[i][c], 0.0, 1.0) * 255.0)));
    }
    put<std::int32_t>(buf, cloud.source[i]);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

PointCloud read_cloud_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t end = data.find(kHeaderEnd);
  if (data.rfind("ply\n", 0) != 0 || end == std::string::npos) fail_invalid(path.string() + ": not a PLY file");
  std::istringstream header(data.substr(0, end));
  std::string line;
  std::size_t count = 0;
  bool have_count = false;
  while (std::getline(header, line)) {
    if (line.rfind("format", 0) == 0 && line != "format binary_little_endian 1.0") {
      fail_invalid(path.string() + ": unsupported PLY format");
    }
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoull(line.substr(15));
      have_count = true;
    }
  }
  if (!have_count) fail_invalid(path.string() + ": missing vertex count");
  const std::size_t body = end + std::strlen(kHeaderEnd);
  constexpr std::size_t kStride = 3 * sizeof(double) + 3 + sizeof(std::int32_t);
  if (data.size() - body != count * kStride) fail_invalid(path.string() + ": truncated vertex data");
  PointCloud cloud;
  cloud.reserve(count);
  const char* p = data.data() + body;
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 pos;
    for (int a = 0; a < 3; ++a) pos[a] = get<double>(p);
    Eigen::Vector3d color;
    for (int c = 0; c < 3; ++c) color[c] = get<std::uint8_t>(p) / 255.0;
    cloud.push_back(pos, color, get<std::int32_t>(p));
  }
  return cloud;
}

}  // namespace gforge
