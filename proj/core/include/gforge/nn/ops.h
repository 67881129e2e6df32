#pragma once

#include "gforge/nn/kernels.h"
#include "gforge/nn/tape.h"

namespace gforge::nn {

// Differentiable operations recorded on a Tape. A bias or affine argument of
// -1 means "absent".

template <typename T>
using Var = typename Tape<T>::Var;

template <typename T>
Var<T> conv2d(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b, const ConvGeometry& g);

// Partial convolution: per output window with valid count S > 0,
// y = (W . (x * m)) * (K / S) + b, else y = 0 (no bias). `mask` is
// (N, H, W, 1) in {0, 1}. The updated mask (1 where S > 0) is written to
// `mask_out` when non-null.
template <typename T>
Var<T> partial_conv2d(Tape<T>& tape, Var<T> x, const Tensor<T>& mask, Var<T> w, Var<T> b, const ConvGeometry& g,
                      Tensor<T>* mask_out);

// Transposed convolution (adjoint of conv2d with geometry `g`, where g maps the
// upsampled output to this op's input). Weight shape (kh, kw, Cout, Cin).
template <typename T>
Var<T> conv_transpose2d(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b, const ConvGeometry& g);

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

// Per-channel normalization over (N, H, W). Train mode uses batch statistics
// and updates the running ones; eval mode uses the running statistics.
template <typename T>
Var<T> batch_norm(Tape<T>& tape, Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T>& stats, bool train,
                  double eps, double momentum);

// Per-sample, per-channel normalization over (H, W), no affine terms.
template <typename T>
Var<T> instance_norm(Tape<T>& tape, Var<T> x, double eps);

template <typename T>
Var<T> leaky_relu(Tape<T>& tape, Var<T> x, double slope);
template <typename T>
Var<T> sigmoid(Tape<T>& tape, Var<T> x);
template <typename T>
Var<T> softplus(Tape<T>& tape, Var<T> x);

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b);
// a * x + b elementwise with scalar constants.
template <typename T>
Var<T> affine(Tape<T>& tape, Var<T> x, double a, double b);
// Weighted sum of same-shape tensors.
template <typename T>
Var<T> weighted_sum(Tape<T>& tape, Var<T> a, double ca, Var<T> b, double cb);
template <typename T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b);
template <typename T>
Var<T> avg_pool(Tape<T>& tape, Var<T> x, const ConvGeometry& g);

template <typename T>
Var<T> mean(Tape<T>& tape, Var<T> x);
// min(0, x) elementwise.
template <typename T>
Var<T> min_zero(Tape<T>& tape, Var<T> x);
// sum(mask * |pred - target|) / sum(mask); 0 when the mask is empty.
template <typename T>
Var<T> masked_l1_mean(Tape<T>& tape, Var<T> pred, const Tensor<T>& target, const Tensor<T>& mask);

// W / sigma with sigma = u^T W_mat v, where W_mat is the (last dim) x
// (product of leading dims) view of `w`. u and v are constants here.
template <typename T>
Var<T> spectral_weight(Tape<T>& tape, Var<T> w, const Tensor<T>& u, const Tensor<T>& v);

}  // namespace gforge::nn
