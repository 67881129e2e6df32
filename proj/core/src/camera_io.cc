#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gforge/error.h"
#include "gforge/io.h"

namespace gforge {

using nlohmann::json;

namespace {

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail_invalid(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write " + path.string());
  out << text;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) fail_invalid(std::string("missing numeric field '") + key + "'");
  return j[key].get<double>();
}

}  // namespace

CameraModel read_camera_json(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) fail_invalid("camera file needs a 'type'");
  const std::string type = j["type"];
  const int width = static_cast<int>(number_field(j, "width"));
  const int height = static_cast<int>(number_field(j, "height"));
  if (type == "equirectangular") return CameraModel::equirectangular(width, height);
  if (type == "pinhole") {
    return CameraModel::pinhole(width, height, number_field(j, "fx"), number_field(j, "fy"), number_field(j, "cx"),
                                number_field(j, "cy"));
  }
  fail_invalid("unknown camera type '" + type + "'");
}

void write_camera_json(const std::filesystem::path& path, const CameraModel& camera) {
  json j;
  j["width"] = camera.width();
  j["height"] = camera.height();
  if (camera.type() == CameraType::kEquirectangular) {
    j["type"] = "equirectangular";
  } else {
    j["type"] = "pinhole";
    j["fx"] = camera.fx();
    j["fy"] = camera.fy();
    j["cx"] = camera.cx();
    j["cy"] = camera.cy();
  }
  write_text(path, j.dump(2) + "\n");
}

std::vector<PoseEntry> read_poses_json(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  if (!j.is_array()) fail_invalid("pose file must be a JSON array");
  std::vector<PoseEntry> out;
  for (const json& e : j) {
    if (!e.is_object() || !e.contains("id") || !e.contains("matrix") || !e["matrix"].is_array() ||
        e["matrix"].size() != 16) {
      fail_invalid("pose entries need 'id' and a 16-number 'matrix'");
    }
    Mat4 m;
    for (int i = 0; i < 16; ++i) {
      if (!e["matrix"][i].is_number()) fail_invalid("pose matrix entries must be numbers");
      m(i / 4, i % 4) = e["matrix"][i].get<double>();
    }
    std::string id = e["id"].is_string() ? e["id"].get<std::string>() : e["id"].dump();
    out.push_back(PoseEntry{std::move(id), Pose::from_matrix(m)});
  }
  return out;
}

void write_poses_json(const std::filesystem::path& path, const std::vector<PoseEntry>& poses) {
  json j = json::array();
  for (const PoseEntry& p : poses) {
    json m = json::array();
    const Mat4 mat = p.pose.matrix();
    for (int i = 0; i < 16; ++i) m.push_back(mat(i / 4, i % 4));
    j.push_back({{"id", p.id}, {"matrix", m}});
  }
  write_text(path, j.dump(2) + "\n");
}

const Pose& find_pose(const std::vector<PoseEntry>& poses, const std::string& id) {
  for (const PoseEntry& p : poses) {
    if (p.id == id) return p.pose;
  }
  fail_invalid("unknown pose id '" + id + "'");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_invalid(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("rgb_path") || !j.contains("depth_path") || !j.contains("pose_id")) {
      fail_invalid(path.string() + ":" + std::to_string(line_no) + ": needs rgb_path, depth_path, pose_id");
    }
    ManifestEntry e;
    e.rgb_path = base / j["rgb_path"].get<std::string>();
    e.depth_path = base / j["depth_path"].get<std::string>();
    e.pose_id = j["pose_id"].is_string() ? j["pose_id"].get<std::string>() : j["pose_id"].dump();
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  const std::filesystem::path base = path.parent_path();
  std::ostringstream text;
  for (const ManifestEntry& e : entries) {
    json j;
    j["rgb_path"] = e.rgb_path.lexically_relative(base.empty() ? "." : base).generic_string();
    j["depth_path"] = e.depth_path.lexically_relative(base.empty() ? "." : base).generic_string();
    j["pose_id"] = e.pose_id;
    text << j.dump() << "\n";
  }
  write_text(path, text.str());
}

std::vector<RgbdFrame> load_frames(const std::vector<ManifestEntry>& entries,
                                   const std::vector<PoseEntry>& poses, const CameraModel& camera,
                                   DepthConvention convention) {
  if (camera.type() == CameraType::kEquirectangular && convention == DepthConvention::kZ) {
    fail_invalid("equirectangular depth must use the ray convention");
  }
  std::vector<RgbdFrame> frames;
  for (const ManifestEntry& e : entries) {
    ColorImage rgb = read_rgb_png(e.rgb_path);
    DepthImage depth = read_depth_png(e.depth_path);
    if (!rgb.same_size(camera.width(), camera.height()) || !depth.same_size(camera.width(), camera.height())) {
      fail_invalid("frame " + e.rgb_path.string() + " does not match the camera size");
    }
    if (camera.type() == CameraType::kPinhole && convention == DepthConvention::kRay) {
      for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
          const double a = (x + 0.5 - camera.cx()) / camera.fx();
          const double b = (y + 0.5 - camera.cy()) / camera.fy();
          depth.at(x, y) /= std::sqrt(1.0 + a * a + b * b);
        }
      }
    }
    frames.push_back(make_frame(std::move(rgb), std::move(depth), find_pose(poses, e.pose_id), camera));
  }
  return frames;
}

}  // namespace gforge
