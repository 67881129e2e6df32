#include "gforge/depth_align.h"

#include <cmath>
#include <numbers>

#include "gforge/error.h"

namespace gforge {

ScaleFit align_scale(const DepthImage& dense, const DepthImage& sparse, const MaskImage& sparse_valid,
                     bool with_shift) {
  if (!dense.same_size(sparse.width(), sparse.height()) ||
      !sparse_valid.same_size(sparse.width(), sparse.height())) {
    fail_invalid("align_scale inputs differ in size");
  }
  double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < sparse.pixel_count(); ++i) {
    if (!sparse_valid.data()[i]) continue;
    const double x = dense.data()[i];
    const double y = sparse.data()[i];
    if (!std::isfinite(x) || !std::isfinite(y)) fail_invalid("non-finite depth on the valid set");
    sxx += x * x;
    sxy += x * y;
    sx += x;
    sy += y;
    ++n;
  }
  if (n == 0) fail_invalid("align_scale needs at least one valid sparse pixel");
  if (sxx == 0.0) fail_invalid("dense depth is zero over the valid set");

  ScaleFit fit;
  fit.valid_pixels = n;
  if (with_shift) {
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    if (n < 2 || std::abs(det) <= 1e-12 * nn * sxx) {
      fail_invalid("affine fit is degenerate (dense depth constant on the valid set)");
    }
    fit.scale = (nn * sxy - sx * sy) / det;
    fit.shift = (sy - fit.scale * sx) / nn;
  } else {
    fit.scale = sxy / sxx;
  }

  fit.aligned = DepthImage(dense.width(), dense.height(), 1);
  for (std::size_t i = 0; i < dense.pixel_count(); ++i) {
    fit.aligned.data()[i] = fit.scale * dense.data()[i] + fit.shift;
    if (sparse_valid.data()[i]) {
      const double r = fit.aligned.data()[i] - sparse.data()[i];
      fit.residual += r * r;
    }
  }
  return fit;
}

bool coverage_filter(const MaskImage& sparse_valid, double min_fraction) {
  const std::size_t total = sparse_valid.pixel_count();
  if (total == 0) return min_fraction <= 0.0;
  std::size_t n = 0;
  for (auto v : sparse_valid.data()) n += v ? 1 : 0;
  // Tolerance absorbs rounding in min_fraction * total at the inclusive boundary.
  return static_cast<double>(n) >= min_fraction * static_cast<double>(total) - 1e-9;
}

std::vector<std::pair<int, int>> pair_selector(std::span<const Pose> poses, const PairSelectorOptions& options) {
  const double lo = options.min_rotation_deg * std::numbers::pi / 180.0;
  const double hi = options.max_rotation_deg * std::numbers::pi / 180.0;
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      if ((poses[i].translation() - poses[j].translation()).norm() > options.max_distance) continue;
      const double angle = rotation_angle_between(poses[i], poses[j]);
      if (angle >= lo && angle <= hi) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

}  // namespace gforge
