#include "gforge/nn/kernels.h"

#include <algorithm>
#include <vector>

#include "gforge/error.h"
#include "gforge/parallel.h"

namespace gforge::nn {

ConvGeometry conv_geometry(int in_h, int in_w, int kernel, int stride, int pad) {
  if (kernel < 1 || stride < 1 || pad < 0) fail_invalid("bad convolution geometry");
  ConvGeometry g;
  g.kernel_h = g.kernel_w = kernel;
  g.stride = stride;
  g.pad_top = g.pad_left = pad;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_h = (in_h + 2 * pad - kernel) / stride + 1;
  g.out_w = (in_w + 2 * pad - kernel) / stride + 1;
  if (g.out_h < 1 || g.out_w < 1) fail_invalid("convolution input too small for its kernel");
  return g;
}

ConvGeometry conv_geometry_same(int in_h, int in_w, int kernel, int stride) {
  if (kernel < 1 || stride < 1) fail_invalid("bad convolution geometry");
  ConvGeometry g;
  g.kernel_h = g.kernel_w = kernel;
  g.stride = stride;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const int pad_h = std::max((g.out_h - 1) * stride + kernel - in_h, 0);
  const int pad_w = std::max((g.out_w - 1) * stride + kernel - in_w, 0);
  g.pad_top = pad_h / 2;
  g.pad_left = pad_w / 2;
  return g;
}

ConvGeometry transposed_geometry(int in_h, int in_w, int kernel, int stride, int pad) {
  const int up_h = (in_h - 1) * stride - 2 * pad + kernel;
  const int up_w = (in_w - 1) * stride - 2 * pad + kernel;
  ConvGeometry g = conv_geometry(up_h, up_w, kernel, stride, pad);
  if (g.out_h != in_h || g.out_w != in_w) fail_invalid("transposed convolution geometry is not invertible");
  return g;
}

namespace {

template <typename T>
void check_conv_shapes(const Tensor<T>& w, const ConvGeometry& g, int in_channels) {
  if (w.rank() != 4 || w.dim(0) != g.kernel_h || w.dim(1) != g.kernel_w || w.dim(2) != in_channels) {
    fail_invalid("convolution weight shape " + shape_string(w.shape()) + " does not match the input");
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, const ConvGeometry& g,
                    Tensor<T>& y) {
  if (x.rank() != 4 || x.dim(1) != g.in_h || x.dim(2) != g.in_w) {
    fail_invalid("convolution input shape " + shape_string(x.shape()) + " does not match its geometry");
  }
  const int n_batch = x.dim(0);
  const int ci_n = x.dim(3);
  check_conv_shapes(w, g, ci_n);
  const int co_n = w.dim(3);
  if (bias && static_cast<int>(bias->size()) != co_n) fail_invalid("convolution bias length mismatch");
  y = Tensor<T>({n_batch, g.out_h, g.out_w, co_n}, T(0));
  const std::size_t total = static_cast<std::size_t>(n_batch) * g.out_h * g.out_w;
  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();
  parallel_chunks(total, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int ox = static_cast<int>(idx % g.out_w);
      const int oy = static_cast<int>((idx / g.out_w) % g.out_h);
      const int n = static_cast<int>(idx / (static_cast<std::size_t>(g.out_w) * g.out_h));
      T* yo = yd + idx * co_n;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* xi = xd + ((static_cast<std::size_t>(n) * g.in_h + iy) * g.in_w + ix) * ci_n;
          const T* wk = wd + static_cast<std::size_t>(ky * g.kernel_w + kx) * ci_n * co_n;
          for (int ci = 0; ci < ci_n; ++ci) {
            const T xv = xi[ci];
            if (xv == T(0)) continue;
            const T* wr = wk + static_cast<std::size_t>(ci) * co_n;
            for (int co = 0; co < co_n; ++co) yo[co] += xv * wr[co];
          }
        }
      }
      if (bias) {
        const T* b = bias->data();
        for (int co = 0; co < co_n; ++co) yo[co] += b[co];
      }
    }
  });
}

template <typename T>
void conv2d_backward_data(const Tensor<T>& dy, const Tensor<T>& w, const ConvGeometry& g, Tensor<T>& dx) {
  if (dy.rank() != 4 || dy.dim(1) != g.out_h || dy.dim(2) != g.out_w || w.rank() != 4 ||
      w.dim(3) != dy.dim(3)) {
    fail_invalid("conv backward-data shape mismatch " + shape_string(dy.shape()) + " / " + shape_string(w.shape()));
  }
  const int n_batch = dy.dim(0);
  const int ci_n = w.dim(2);
  const int co_n = w.dim(3);
  check_conv_shapes(w, g, ci_n);
  // Per tap, weights transposed to (Co, Ci) so the inner loop runs over Ci.
  const int taps = g.window();
  std::vector<T> wt(static_cast<std::size_t>(taps) * co_n * ci_n);
  for (int t = 0; t < taps; ++t) {
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int co = 0; co < co_n; ++co) {
        wt[(static_cast<std::size_t>(t) * co_n + co) * ci_n + ci] =
            w.data()[(static_cast<std::size_t>(t) * ci_n + ci) * co_n + co];
      }
    }
  }
  dx = Tensor<T>({n_batch, g.in_h, g.in_w, ci_n}, T(0));
  const std::size_t total = static_cast<std::size_t>(n_batch) * g.in_h * g.in_w;
  const T* dyd = dy.data();
  T* dxd = dx.data();
  parallel_chunks(total, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int ix = static_cast<int>(idx % g.in_w);
      const int iy = static_cast<int>((idx / g.in_w) % g.in_h);
      const int n = static_cast<int>(idx / (static_cast<std::size_t>(g.in_w) * g.in_h));
      T* acc = dxd + idx * ci_n;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        const int ty = iy + g.pad_top - ky;
        if (ty < 0 || ty % g.stride != 0) continue;
        const int oy = ty / g.stride;
        if (oy >= g.out_h) continue;
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const int tx = ix + g.pad_left - kx;
          if (tx < 0 || tx % g.stride != 0) continue;
          const int ox = tx / g.stride;
          if (ox >= g.out_w) continue;
          const T* dyr = dyd + ((static_cast<std::size_t>(n) * g.out_h + oy) * g.out_w + ox) * co_n;
          const T* wk = wt.data() + static_cast<std::size_t>(ky * g.kernel_w + kx) * co_n * ci_n;
          for (int co = 0; co < co_n; ++co) {
            const T gv = dyr[co];
            if (gv == T(0)) continue;
            const T* wr = wk + static_cast<std::size_t>(co) * ci_n;
            for (int ci = 0; ci < ci_n; ++ci) acc[ci] += gv * wr[ci];
          }
        }
      }
    }
  });
}

template <typename T>
void conv2d_backward_filter(const Tensor<T>& x, const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>& dw,
                            Tensor<T>* db) {
  const int n_batch = x.dim(0);
  const int ci_n = x.dim(3);
  const int co_n = dy.dim(3);
  if (dw.rank() != 4 || dw.dim(0) != g.kernel_h || dw.dim(1) != g.kernel_w || dw.dim(2) != ci_n ||
      dw.dim(3) != co_n || dy.dim(0) != n_batch || dy.dim(1) != g.out_h || dy.dim(2) != g.out_w) {
    fail_invalid("conv backward-filter shape mismatch");
  }
  const std::size_t total = static_cast<std::size_t>(n_batch) * g.out_h * g.out_w;
  const int chunks = std::max(1, std::min<int>(thread_count(), static_cast<int>(std::max<std::size_t>(total, 1))));
  std::vector<std::vector<T>> partial_w(chunks, std::vector<T>(dw.size(), T(0)));
  std::vector<std::vector<T>> partial_b(chunks, std::vector<T>(db ? co_n : 0, T(0)));
  const T* xd = x.data();
  const T* dyd = dy.data();
  parallel_chunks(total, [&](int chunk, std::size_t begin, std::size_t end) {
    T* pw = partial_w[chunk].data();
    T* pb = db ? partial_b[chunk].data() : nullptr;
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int ox = static_cast<int>(idx % g.out_w);
      const int oy = static_cast<int>((idx / g.out_w) % g.out_h);
      const int n = static_cast<int>(idx / (static_cast<std::size_t>(g.out_w) * g.out_h));
      const T* dyr = dyd + idx * co_n;
      if (pb) {
        for (int co = 0; co < co_n; ++co) pb[co] += dyr[co];
      }
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* xi = xd + ((static_cast<std::size_t>(n) * g.in_h + iy) * g.in_w + ix) * ci_n;
          T* wk = pw + static_cast<std::size_t>(ky * g.kernel_w + kx) * ci_n * co_n;
          for (int ci = 0; ci < ci_n; ++ci) {
            const T xv = xi[ci];
            if (xv == T(0)) continue;
            T* wr = wk + static_cast<std::size_t>(ci) * co_n;
            for (int co = 0; co < co_n; ++co) wr[co] += xv * dyr[co];
          }
        }
      }
    }
  });
  for (int c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += partial_w[c][i];
    if (db) {
      for (int co = 0; co < co_n; ++co) (*db)[co] += partial_b[c][co];
    }
  }
}

template <typename T>
Tensor<T> window_mask_sum(const Tensor<T>& mask, const ConvGeometry& g) {
  if (mask.rank() != 4 || mask.dim(3) != 1 || mask.dim(1) != g.in_h || mask.dim(2) != g.in_w) {
    fail_invalid("partial convolution mask must be (N, H, W, 1) matching the input");
  }
  const int n_batch = mask.dim(0);
  Tensor<T> sums({n_batch, g.out_h, g.out_w, 1}, T(0));
  for (int n = 0; n < n_batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        T s = T(0);
        T padding = T(0);
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            const bool inside = iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w;
            if (inside) {
              s += mask.at(n, iy, ix, 0);
            } else {
              padding += T(1);
            }
          }
        }
        sums.at(n, oy, ox, 0) = s > T(0) ? s + padding : T(0);
      }
    }
  }
  return sums;
}

template <typename T>
void avg_pool_forward(const Tensor<T>& x, const ConvGeometry& g, Tensor<T>& y) {
  const int n_batch = x.dim(0);
  const int c_n = x.dim(3);
  y = Tensor<T>({n_batch, g.out_h, g.out_w, c_n}, T(0));
  for (int n = 0; n < n_batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        int count = 0;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            ++count;
            for (int c = 0; c < c_n; ++c) y.at(n, oy, ox, c) += x.at(n, iy, ix, c);
          }
        }
        const T inv = T(1) / static_cast<T>(count);
        for (int c = 0; c < c_n; ++c) y.at(n, oy, ox, c) *= inv;
      }
    }
  }
}

template <typename T>
void avg_pool_backward(const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>& dx) {
  const int n_batch = dy.dim(0);
  const int c_n = dy.dim(3);
  dx = Tensor<T>({n_batch, g.in_h, g.in_w, c_n}, T(0));
  for (int n = 0; n < n_batch; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        int count = 0;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w) ++count;
          }
        }
        const T inv = T(1) / static_cast<T>(count);
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            for (int c = 0; c < c_n; ++c) dx.at(n, iy, ix, c) += dy.at(n, oy, ox, c) * inv;
          }
        }
      }
    }
  }
}

#define GFORGE_INSTANTIATE_KERNELS(T)                                                                       \
  template void conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, const ConvGeometry&, \
                                  Tensor<T>&);                                                              \
  template void conv2d_backward_data<T>(const Tensor<T>&, const Tensor<T>&, const ConvGeometry&, Tensor<T>&); \
  template void conv2d_backward_filter<T>(const Tensor<T>&, const Tensor<T>&, const ConvGeometry&, Tensor<T>&, \
                                          Tensor<T>*);                                                      \
  template Tensor<T> window_mask_sum<T>(const Tensor<T>&, const ConvGeometry&);                            \
  template void avg_pool_forward<T>(const Tensor<T>&, const ConvGeometry&, Tensor<T>&);                    \
  template void avg_pool_backward<T>(const Tensor<T>&, const ConvGeometry&, Tensor<T>&);

GFORGE_INSTANTIATE_KERNELS(float)
GFORGE_INSTANTIATE_KERNELS(double)

#undef GFORGE_INSTANTIATE_KERNELS

}  // namespace gforge::nn
