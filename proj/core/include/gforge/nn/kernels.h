#pragma once

#include "gforge/nn/tensor.h"

namespace gforge::nn {

// Spatial geometry of a strided 2-D correlation from an (in_h, in_w) input to
// an (out_h, out_w) output. Input row iy = oy * stride - pad_top + ky; taps
// that fall outside the input read zero.
struct ConvGeometry {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad_top = 0;
  int pad_left = 0;
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;

  int window() const { return kernel_h * kernel_w; }
};

// Symmetric padding, out = floor((in + 2 pad - k) / stride) + 1.
ConvGeometry conv_geometry(int in_h, int in_w, int kernel, int stride, int pad);
// TensorFlow "SAME": out = ceil(in / stride), extra padding goes bottom/right.
ConvGeometry conv_geometry_same(int in_h, int in_w, int kernel, int stride);
// Geometry of the correlation whose adjoint is a transposed convolution from
// (in_h, in_w) up to ((in - 1) * stride - 2 pad + kernel).
ConvGeometry transposed_geometry(int in_h, int in_w, int kernel, int stride, int pad);

// y = conv(x, w) (+ bias added after the full window sum). x: (N, in_h, in_w,
// Ci), w: (kh, kw, Ci, Co), y: (N, out_h, out_w, Co).
template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, const ConvGeometry& g,
                    Tensor<T>& y);

// dx = conv^T(dy); also the forward pass of a transposed convolution.
template <typename T>
void conv2d_backward_data(const Tensor<T>& dy, const Tensor<T>& w, const ConvGeometry& g, Tensor<T>& dx);

// dw += correlation of x with dy; db += sum of dy (when non-null).
template <typename T>
void conv2d_backward_filter(const Tensor<T>& x, const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>& dw,
                            Tensor<T>* db);

// Per-window valid count of a (N, in_h, in_w, 1) mask, for partial
// convolution. Taps in the zero-padding border count as valid so that a full
// mask reproduces the standard convolution exactly; a window with no valid
// in-bounds tap sums to 0.
template <typename T>
Tensor<T> window_mask_sum(const Tensor<T>& mask, const ConvGeometry& g);

// Average pooling with "SAME" padding that averages only in-bounds taps.
template <typename T>
void avg_pool_forward(const Tensor<T>& x, const ConvGeometry& g, Tensor<T>& y);
template <typename T>
void avg_pool_backward(const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>& dx);

}  // namespace gforge::nn
