#pragma once

#include <cstddef>
#include <vector>

#include "gforge/geometry.h"

namespace gforge {

// Row-major interleaved image: element (x, y, c) lives at
// ((y * width + x) * channels + c).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_size(int width, int height) const { return width_ == width && height_ == height; }
  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using ColorImage = Image<double>;   // 3 channels in [0, 1]
using DepthImage = Image<double>;   // 1 channel, meters
using MaskImage = Image<unsigned char>;  // 1 channel, 0 or 1

struct RgbdFrame {
  ColorImage rgb;
  DepthImage depth;
  MaskImage valid;
  Pose pose;
  CameraModel camera = CameraModel::equirectangular(2, 1);

  // Throws kInvalidArgument when shapes disagree with the camera, a valid
  // pixel has non-positive or non-finite depth, or colors leave [0, 1].
  void validate() const;
  std::size_t valid_count() const;
};

// Builds a frame whose validity is depth > 0 (the on-disk convention).
RgbdFrame make_frame(ColorImage rgb, DepthImage depth, const Pose& pose, const CameraModel& camera);

// Invalid pixels carry rgb = 0 and depth = 0.
struct GuidanceImage {
  ColorImage rgb;
  DepthImage depth;
  MaskImage valid;

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  double coverage() const;
  void validate() const;

  static GuidanceImage blank(int width, int height);
  bool operator==(const GuidanceImage&) const = default;
};

}  // namespace gforge
