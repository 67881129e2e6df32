#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gforge/geometry.h"
#include "gforge/image.h"

namespace gforge {

struct ScaleFit {
  double scale = 1.0;
  double shift = 0.0;  // stays 0 unless the affine fit is requested
  double residual = 0.0;  // sum over valid pixels of (s * dense + t - sparse)^2
  std::size_t valid_pixels = 0;
  DepthImage aligned;  // s * dense + t everywhere
};

// Least-squares fit of dense relative depth onto sparse metric depth over the
// valid pixels: s = sum(dense * sparse) / sum(dense^2). With `with_shift` a
// shift t is fitted jointly. Throws kInvalidArgument when no pixel is valid
// or dense is identically zero on the valid set.
ScaleFit align_scale(const DepthImage& dense, const DepthImage& sparse, const MaskImage& sparse_valid,
                     bool with_shift = false);

// True iff the valid share of the image is at least `min_fraction`.
bool coverage_filter(const MaskImage& sparse_valid, double min_fraction = 0.10);

struct PairSelectorOptions {
  double max_distance = 1.0;      // meters
  double min_rotation_deg = 20.0;
  double max_rotation_deg = 60.0;
};

// All pairs (i, j), i < j, whose relative rotation angle lies within the
// inclusive degree range and whose camera centers are at most max_distance
// apart. Lexicographic order.
std::vector<std::pair<int, int>> pair_selector(std::span<const Pose> poses, const PairSelectorOptions& options = {});

}  // namespace gforge
