#pragma once

#include "gforge/geometry.h"
#include "gforge/image.h"

namespace gforge {

struct Prediction {
  ColorImage rgb;    // 3 channels in [0, 1]
  DepthImage depth;  // meters
};

// Anything that turns a guidance image at a target pose into a dense RGB-D
// view: the trained generator, or a stub in tests.
class ViewCompleter {
 public:
  virtual ~ViewCompleter() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual Prediction complete(const GuidanceImage& guidance, const Pose& target_pose) const = 0;
};

// Returns the guidance unchanged (zeros where invalid).
class PassthroughCompleter final : public ViewCompleter {
 public:
  PassthroughCompleter(int width, int height) : width_(width), height_(height) {}
  int width() const override { return width_; }
  int height() const override { return height_; }
  Prediction complete(const GuidanceImage& guidance, const Pose&) const override {
    return Prediction{guidance.rgb, guidance.depth};
  }

 private:
  int width_;
  int height_;
};

}  // namespace gforge
