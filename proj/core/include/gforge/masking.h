#pragma once

#include <cstdint>

#include "gforge/image.h"

namespace gforge {

enum class MaskMode { kRectangles, kPixels };

struct MaskOptions {
  double max_fraction = 0.75;
  MaskMode mode = MaskMode::kRectangles;
};

struct MaskResult {
  GuidanceImage guidance;
  double target_fraction = 0.0;  // f ~ U(0, max_fraction)
  double masked_fraction = 0.0;  // share of the full image area zeroed
};

// Training-time occlusion of guidance pixels. A target share f of the full
// image area is drawn uniformly from [0, max_fraction]; axis-aligned
// rectangles with sides in [H/8, H/2] x [W/8, W/2] are then zeroed until the
// masked area reaches f. The rectangle that crosses f is applied row by row
// and stops at the first row that reaches it, so the masked share exceeds f
// by less than one rectangle row. kPixels masks ceil(f * H * W) pixels of a
// seeded permutation instead. Unmasked pixels are copied bit for bit.
MaskResult random_mask(const GuidanceImage& guidance, std::uint64_t seed, const MaskOptions& options = {});

}  // namespace gforge
