#include "gforge/masking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gforge/error.h"

namespace gforge {
namespace {

void zero_pixel(GuidanceImage& g, std::size_t k) {
  g.valid.data()[k] = 0;
  g.depth.data()[k] = 0.0;
  g.rgb.data()[3 * k] = 0.0;
  g.rgb.data()[3 * k + 1] = 0.0;
  g.rgb.data()[3 * k + 2] = 0.0;
}

}  // namespace

MaskResult random_mask(const GuidanceImage& guidance, std::uint64_t seed, const MaskOptions& options) {
  if (!(options.max_fraction >= 0.0 && options.max_fraction <= 1.0)) {
    fail_invalid("max_fraction must lie in [0, 1]");
  }
  const int w = guidance.width();
  const int h = guidance.height();
  const std::size_t area = static_cast<std::size_t>(w) * h;

  MaskResult result{guidance, 0.0, 0.0};
  std::mt19937_64 rng(seed);
  result.target_fraction = std::uniform_real_distribution<double>(0.0, options.max_fraction)(rng);
  if (area == 0 || result.target_fraction <= 0.0) return result;

  const std::size_t target = static_cast<std::size_t>(std::ceil(result.target_fraction * static_cast<double>(area)));
  std::vector<unsigned char> masked(area, 0);
  std::size_t masked_count = 0;

  if (options.mode == MaskMode::kPixels) {
    std::vector<std::size_t> order(area);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < target; ++i) masked[order[i]] = 1;
    masked_count = target;
  } else {
    const int min_h = std::max(1, h / 8);
    const int max_h = std::max(min_h, h / 2);
    const int min_w = std::max(1, w / 8);
    const int max_w = std::max(min_w, w / 2);
    std::uniform_int_distribution<int> height_dist(min_h, max_h);
    std::uniform_int_distribution<int> width_dist(min_w, max_w);
    while (masked_count < target) {
      const int rh = height_dist(rng);
      const int rw = width_dist(rng);
      const int y0 = std::uniform_int_distribution<int>(0, h - rh)(rng);
      const int x0 = std::uniform_int_distribution<int>(0, w - rw)(rng);
      for (int y = y0; y < y0 + rh && masked_count < target; ++y) {
        for (int x = x0; x < x0 + rw; ++x) {
          unsigned char& m = masked[static_cast<std::size_t>(y) * w + x];
          if (!m) {
            m = 1;
            ++masked_count;
          }
        }
      }
    }
  }

  for (std::size_t k = 0; k < area; ++k) {
    if (masked[k]) zero_pixel(result.guidance, k);
  }
  result.masked_fraction = static_cast<double>(masked_count) / static_cast<double>(area);
  return result;
}

}  // namespace gforge
