#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gforge/geometry.h"
#include "gforge/image.h"
#include "gforge/nn/discriminator.h"
#include "gforge/nn/generator.h"
#include "gforge/nn/kernels.h"
#include "gforge/pointcloud.h"

namespace gforge::testing {

// O(N * H * W) render: every pixel scans all points for the nearest one
// that lands on it (strictly smaller depth wins, so the lowest index keeps ties).
GuidanceImage brute_force_render(const PointCloud& cloud, const Pose& pose, const CameraModel& camera);

// Direct six-loop partial convolution; returns y and writes the updated mask.
nn::Tensor<double> scalar_partial_conv(const nn::Tensor<double>& x, const nn::Tensor<double>& mask,
                                       const nn::Tensor<double>& w, const nn::Tensor<double>& b,
                                       const nn::ConvGeometry& g, nn::Tensor<double>& mask_out);

// Direct zero-padded correlation.
nn::Tensor<double> scalar_conv(const nn::Tensor<double>& x, const nn::Tensor<double>& w, const nn::Tensor<double>* b,
                               const nn::ConvGeometry& g);

// Scale (and optional shift) from the normal equations solved by Eigen's QR.
std::pair<double, double> normal_equation_fit(const DepthImage& dense, const DepthImage& sparse,
                                              const MaskImage& valid, bool with_shift);

// Pair filter using quaternion angles instead of the rotation trace.
std::vector<std::pair<int, int>> brute_force_pairs(std::span<const Pose> poses, double max_distance, double min_deg,
                                                   double max_deg);

// Nearest two other frames by full sort of all distances.
std::pair<int, int> brute_force_nearest_two(const std::vector<Vec3>& centers, int query);

// Random uniform tensor in [lo, hi).
nn::Tensor<double> random_tensor(const nn::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

// Micro networks used for the finite-difference checks (32x32 input).
nn::GeneratorConfig micro_generator_config(std::uint64_t seed = 3);
nn::DiscriminatorConfig micro_discriminator_config(std::uint64_t seed = 4);

// Pinhole frame of random depth and color; every pixel valid unless
// `valid_fraction` < 1.
RgbdFrame random_frame(const CameraModel& camera, const Pose& pose, std::uint64_t seed, double valid_fraction = 1.0);

}  // namespace gforge::testing
