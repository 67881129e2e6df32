#include "gforge/nn/ops.h"

#include <algorithm>
#include <cmath>

#include "gforge/error.h"

namespace gforge::nn {
namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail_invalid(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

template <typename T>
bool wants(const Tape<T>& t, Var<T> v) {
  return v >= 0 && t.requires_grad(v);
}

// Neumaier-compensated running sum; loss reductions over whole images keep
// their error near one ulp of the total.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Shared normalization backward: dx = inv_std / M (M dxh - sum dxh - xh sum(dxh xh)).
template <typename T>
void normalize_backward(const T* dxhat, const T* xhat, std::size_t count, std::size_t stride, double inv_std,
                        T* dx) {
  double sum = 0.0;
  double sum_x = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sum += dxhat[i * stride];
    sum_x += static_cast<double>(dxhat[i * stride]) * xhat[i * stride];
  }
  const double m = static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    dx[i * stride] += static_cast<T>(inv_std / m * (m * dxhat[i * stride] - sum - xhat[i * stride] * sum_x));
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b, const ConvGeometry& g) {
  Tensor<T> y;
  conv2d_forward<T>(tape.value(x), tape.value(w), b >= 0 ? &tape.value(b) : nullptr, g, y);
  const bool rg = tape.any_requires_grad({x, w, b});
  return tape.push(std::move(y), rg, [x, w, b, g](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    if (wants(t, x)) {
      Tensor<T> dx;
      conv2d_backward_data(dy, t.value(w), g, dx);
      t.grad(x).add_inplace(dx);
    }
    if (wants(t, w) || wants(t, b)) {
      const Tensor<T>& wv = t.value(w);
      Tensor<T> dw(wv.shape(), T(0));
      Tensor<T> db({wv.dim(3)}, T(0));
      conv2d_backward_filter<T>(t.value(x), dy, g, dw, &db);
      if (wants(t, w)) t.grad(w).add_inplace(dw);
      if (wants(t, b)) t.grad(b).add_inplace(db);
    }
  });
}

template <typename T>
Var<T> partial_conv2d(Tape<T>& tape, Var<T> x, const Tensor<T>& mask, Var<T> w, Var<T> b, const ConvGeometry& g,
                      Tensor<T>* mask_out) {
  const Tensor<T>& xv = tape.value(x);
  if (mask.rank() != 4 || mask.dim(0) != xv.dim(0) || mask.dim(1) != xv.dim(1) || mask.dim(2) != xv.dim(2) ||
      mask.dim(3) != 1) {
    fail_invalid("partial_conv2d: mask " + shape_string(mask.shape()) + " does not match input " +
                 shape_string(xv.shape()));
  }
  const int ci_n = xv.dim(3);
  Tensor<T> xm = xv;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    const T m = mask[p];
    for (int c = 0; c < ci_n; ++c) xm[p * ci_n + c] *= m;
  }
  Tensor<T> z;
  conv2d_forward<T>(xm, tape.value(w), nullptr, g, z);
  const Tensor<T> sums = window_mask_sum(mask, g);
  const T window = static_cast<T>(g.window());
  Tensor<T> ratio(sums.shape(), T(0));
  for (std::size_t p = 0; p < sums.size(); ++p) ratio[p] = sums[p] > T(0) ? window / sums[p] : T(0);
  const int co_n = z.dim(3);
  const Tensor<T>* bias = b >= 0 ? &tape.value(b) : nullptr;
  for (std::size_t p = 0; p < ratio.size(); ++p) {
    T* zp = z.data() + p * co_n;
    if (ratio[p] == T(0)) {
      for (int c = 0; c < co_n; ++c) zp[c] = T(0);
      continue;
    }
    for (int c = 0; c < co_n; ++c) zp[c] = zp[c] * ratio[p] + (bias ? (*bias)[c] : T(0));
  }
  if (mask_out) {
    *mask_out = Tensor<T>(sums.shape(), T(0));
    for (std::size_t p = 0; p < sums.size(); ++p) (*mask_out)[p] = sums[p] > T(0) ? T(1) : T(0);
  }
  const bool rg = tape.any_requires_grad({x, w, b});
  return tape.push(std::move(z), rg, [x, w, b, g, mask, ratio, xm = std::move(xm)](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    const int co = dy.dim(3);
    Tensor<T> dy_eff = dy;
    for (std::size_t p = 0; p < ratio.size(); ++p) {
      for (int c = 0; c < co; ++c) dy_eff[p * co + c] *= ratio[p];
    }
    if (wants(t, x)) {
      Tensor<T> dxm;
      conv2d_backward_data(dy_eff, t.value(w), g, dxm);
      const int ci = dxm.dim(3);
      for (std::size_t p = 0; p < mask.size(); ++p) {
        for (int c = 0; c < ci; ++c) dxm[p * ci + c] *= mask[p];
      }
      t.grad(x).add_inplace(dxm);
    }
    if (wants(t, w)) {
      Tensor<T> dw(t.value(w).shape(), T(0));
      conv2d_backward_filter<T>(xm, dy_eff, g, dw, nullptr);
      t.grad(w).add_inplace(dw);
    }
    if (wants(t, b)) {
      Tensor<T>& db = t.grad(b);
      for (std::size_t p = 0; p < ratio.size(); ++p) {
        if (ratio[p] == T(0)) continue;
        for (int c = 0; c < co; ++c) db[c] += dy[p * co + c];
      }
    }
  });
}

template <typename T>
Var<T> conv_transpose2d(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b, const ConvGeometry& g) {
  Tensor<T> y;
  conv2d_backward_data(tape.value(x), tape.value(w), g, y);
  if (b >= 0) {
    const Tensor<T>& bv = tape.value(b);
    const int c_n = y.dim(3);
    if (static_cast<int>(bv.size()) != c_n) fail_invalid("transposed convolution bias length mismatch");
    for (std::size_t p = 0; p < y.size() / c_n; ++p) {
      for (int c = 0; c < c_n; ++c) y[p * c_n + c] += bv[c];
    }
  }
  const bool rg = tape.any_requires_grad({x, w, b});
  return tape.push(std::move(y), rg, [x, w, b, g](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    if (wants(t, x)) {
      Tensor<T> dx;
      conv2d_forward<T>(dy, t.value(w), nullptr, g, dx);
      t.grad(x).add_inplace(dx);
    }
    if (wants(t, w)) {
      Tensor<T> dw(t.value(w).shape(), T(0));
      conv2d_backward_filter<T>(dy, t.value(x), g, dw, nullptr);
      t.grad(w).add_inplace(dw);
    }
    if (wants(t, b)) {
      Tensor<T>& db = t.grad(b);
      const int c_n = dy.dim(3);
      for (std::size_t p = 0; p < dy.size() / c_n; ++p) {
        for (int c = 0; c < c_n; ++c) db[c] += dy[p * c_n + c];
      }
    }
  });
}

template <typename T>
Var<T> batch_norm(Tape<T>& tape, Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T>& stats, bool train,
                  double eps, double momentum) {
  const Tensor<T>& xv = tape.value(x);
  const int c_n = xv.dim(3);
  const std::size_t count = xv.size() / c_n;
  const Tensor<T>& gv = tape.value(gamma);
  const Tensor<T>& bv = tape.value(beta);
  if (static_cast<int>(gv.size()) != c_n || static_cast<int>(bv.size()) != c_n) fail_invalid("batch_norm: affine size");
  if (stats.running_mean.empty()) {
    stats.running_mean = Tensor<T>({c_n}, T(0));
    stats.running_var = Tensor<T>({c_n}, T(1));
  }
  std::vector<double> inv_std(c_n);
  Tensor<T> xhat(xv.shape());
  for (int c = 0; c < c_n; ++c) {
    double mu = 0.0;
    double var = 0.0;
    if (train) {
      for (std::size_t i = 0; i < count; ++i) mu += xv[i * c_n + c];
      mu /= static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i) {
        const double d = xv[i * c_n + c] - mu;
        var += d * d;
      }
      const double unbiased = count > 1 ? var / static_cast<double>(count - 1) : 0.0;
      var /= static_cast<double>(count);
      stats.running_mean[c] = static_cast<T>(momentum * stats.running_mean[c] + (1.0 - momentum) * mu);
      stats.running_var[c] = static_cast<T>(momentum * stats.running_var[c] + (1.0 - momentum) * unbiased);
    } else {
      mu = stats.running_mean[c];
      var = stats.running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < count; ++i) {
      xhat[i * c_n + c] = static_cast<T>((xv[i * c_n + c] - mu) * inv_std[c]);
    }
  }
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < count; ++i) {
    for (int c = 0; c < c_n; ++c) y[i * c_n + c] = gv[c] * xhat[i * c_n + c] + bv[c];
  }
  const bool rg = tape.any_requires_grad({x, gamma, beta});
  return tape.push(std::move(y), rg,
                   [x, gamma, beta, train, inv_std, xhat = std::move(xhat), c_n, count](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    const Tensor<T>& g = t.value(gamma);
    if (wants(t, gamma)) {
      Tensor<T>& dg = t.grad(gamma);
      for (std::size_t i = 0; i < count; ++i) {
        for (int c = 0; c < c_n; ++c) dg[c] += dy[i * c_n + c] * xhat[i * c_n + c];
      }
    }
    if (wants(t, beta)) {
      Tensor<T>& db = t.grad(beta);
      for (std::size_t i = 0; i < count; ++i) {
        for (int c = 0; c < c_n; ++c) db[c] += dy[i * c_n + c];
      }
    }
    if (wants(t, x)) {
      Tensor<T>& dx = t.grad(x);
      if (train) {
        Tensor<T> dxhat(dy.shape());
        for (std::size_t i = 0; i < count; ++i) {
          for (int c = 0; c < c_n; ++c) dxhat[i * c_n + c] = dy[i * c_n + c] * g[c];
        }
        for (int c = 0; c < c_n; ++c) {
          normalize_backward(dxhat.data() + c, xhat.data() + c, count, static_cast<std::size_t>(c_n), inv_std[c],
                             dx.data() + c);
        }
      } else {
        for (std::size_t i = 0; i < count; ++i) {
          for (int c = 0; c < c_n; ++c) dx[i * c_n + c] += static_cast<T>(dy[i * c_n + c] * g[c] * inv_std[c]);
        }
      }
    }
  });
}

template <typename T>
Var<T> instance_norm(Tape<T>& tape, Var<T> x, double eps) {
  const Tensor<T>& xv = tape.value(x);
  const int n_batch = xv.dim(0);
  const int c_n = xv.dim(3);
  const std::size_t count = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  std::vector<double> inv_std(static_cast<std::size_t>(n_batch) * c_n);
  Tensor<T> y(xv.shape());
  for (int n = 0; n < n_batch; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * count * c_n;
    for (int c = 0; c < c_n; ++c) {
      double mu = 0.0;
      for (std::size_t i = 0; i < count; ++i) mu += xv[base + i * c_n + c];
      mu /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        const double d = xv[base + i * c_n + c] - mu;
        var += d * d;
      }
      var /= static_cast<double>(count);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[static_cast<std::size_t>(n) * c_n + c] = is;
      for (std::size_t i = 0; i < count; ++i) {
        y[base + i * c_n + c] = static_cast<T>((xv[base + i * c_n + c] - mu) * is);
      }
    }
  }
  Tensor<T> xhat = y;
  const bool rg = tape.any_requires_grad({x});
  return tape.push(std::move(y), rg,
                   [x, inv_std, xhat = std::move(xhat), n_batch, c_n, count](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    Tensor<T>& dx = t.grad(x);
    for (int n = 0; n < n_batch; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * count * c_n;
      for (int c = 0; c < c_n; ++c) {
        normalize_backward(dy.data() + base + c, xhat.data() + base + c, count, static_cast<std::size_t>(c_n),
                           inv_std[static_cast<std::size_t>(n) * c_n + c], dx.data() + base + c);
      }
    }
  });
}

template <typename T>
Var<T> leaky_relu(Tape<T>& tape, Var<T> x, double slope) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  const T s = static_cast<T>(slope);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const bool pos = xv[i] > T(0);
    y[i] = pos ? xv[i] : s * xv[i];
  }
  if (tape.record_branches()) {
    for (std::size_t i = 0; i < xv.size(); ++i) tape.record_branch(xv[i] > T(0));
  }
  return tape.push(std::move(y), tape.requires_grad(x), [x, s](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    const Tensor<T>& xv = t.value(x);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += xv[i] > T(0) ? dy[i] : s * dy[i];
  });
}

template <typename T>
Var<T> sigmoid(Tape<T>& tape, Var<T> x) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const T v = xv[i];
    y[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  Tensor<T> out = y;
  return tape.push(std::move(y), tape.requires_grad(x), [x, out = std::move(out)](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * out[i] * (T(1) - out[i]);
  });
}

template <typename T>
Var<T> softplus(Tape<T>& tape, Var<T> x) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const T v = xv[i];
    y[i] = std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v)));
  }
  return tape.push(std::move(y), tape.requires_grad(x), [x](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    const Tensor<T>& xv = t.value(x);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const T v = xv[i];
      const T sig = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
      dx[i] += dy[i] * sig;
    }
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b) {
  require_same_shape(tape.value(a), tape.value(b), "add");
  Tensor<T> y = tape.value(a);
  y.add_inplace(tape.value(b));
  return tape.push(std::move(y), tape.any_requires_grad({a, b}), [a, b](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    if (wants(t, a)) t.grad(a).add_inplace(dy);
    if (wants(t, b)) t.grad(b).add_inplace(dy);
  });
}

template <typename T>
Var<T> affine(Tape<T>& tape, Var<T> x, double a, double b) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = static_cast<T>(a * xv[i] + b);
  return tape.push(std::move(y), tape.requires_grad(x), [x, a](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += static_cast<T>(a * dy[i]);
  });
}

template <typename T>
Var<T> weighted_sum(Tape<T>& tape, Var<T> a, double ca, Var<T> b, double cb) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  require_same_shape(av, bv, "weighted_sum");
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = static_cast<T>(ca * av[i] + cb * bv[i]);
  return tape.push(std::move(y), tape.any_requires_grad({a, b}), [a, ca, b, cb](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    if (wants(t, a)) {
      Tensor<T>& da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += static_cast<T>(ca * dy[i]);
    }
    if (wants(t, b)) {
      Tensor<T>& db = t.grad(b);
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += static_cast<T>(cb * dy[i]);
    }
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  if (av.rank() != 4 || bv.rank() != 4 || av.dim(0) != bv.dim(0) || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2)) {
    fail_invalid("concat_channels: spatial shape mismatch");
  }
  const int ca = av.dim(3);
  const int cb = bv.dim(3);
  const std::size_t pixels = av.size() / ca;
  Tensor<T> y({av.dim(0), av.dim(1), av.dim(2), ca + cb});
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < ca; ++c) y[p * (ca + cb) + c] = av[p * ca + c];
    for (int c = 0; c < cb; ++c) y[p * (ca + cb) + ca + c] = bv[p * cb + c];
  }
  return tape.push(std::move(y), tape.any_requires_grad({a, b}), [a, b, ca, cb, pixels](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    if (wants(t, a)) {
      Tensor<T>& da = t.grad(a);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < ca; ++c) da[p * ca + c] += dy[p * (ca + cb) + c];
      }
    }
    if (wants(t, b)) {
      Tensor<T>& db = t.grad(b);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < cb; ++c) db[p * cb + c] += dy[p * (ca + cb) + ca + c];
      }
    }
  });
}

template <typename T>
Var<T> avg_pool(Tape<T>& tape, Var<T> x, const ConvGeometry& g) {
  Tensor<T> y;
  avg_pool_forward(tape.value(x), g, y);
  return tape.push(std::move(y), tape.requires_grad(x), [x, g](Tape<T>& t, Var<T> self) {
    Tensor<T> dx;
    avg_pool_backward(t.grad(self), g, dx);
    t.grad(x).add_inplace(dx);
  });
}

template <typename T>
Var<T> mean(Tape<T>& tape, Var<T> x) {
  const Tensor<T>& xv = tape.value(x);
  CompensatedSum s;
  for (std::size_t i = 0; i < xv.size(); ++i) s.add(xv[i]);
  const std::size_t n = xv.size();
  Tensor<T> y({1}, static_cast<T>(n ? s.value() / static_cast<double>(n) : 0.0));
  return tape.push(std::move(y), tape.requires_grad(x), [x, n](Tape<T>& t, Var<T> self) {
    const double g = static_cast<double>(t.grad(self)[0]) / static_cast<double>(n);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < n; ++i) dx[i] += static_cast<T>(g);
  });
}

template <typename T>
Var<T> min_zero(Tape<T>& tape, Var<T> x) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = std::min(xv[i], T(0));
  if (tape.record_branches()) {
    for (std::size_t i = 0; i < xv.size(); ++i) tape.record_branch(xv[i] < T(0));
  }
  return tape.push(std::move(y), tape.requires_grad(x), [x](Tape<T>& t, Var<T> self) {
    const Tensor<T>& dy = t.grad(self);
    const Tensor<T>& xv = t.value(x);
    Tensor<T>& dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (xv[i] < T(0)) dx[i] += dy[i];
    }
  });
}

template <typename T>
Var<T> masked_l1_mean(Tape<T>& tape, Var<T> pred, const Tensor<T>& target, const Tensor<T>& mask) {
  const Tensor<T>& pv = tape.value(pred);
  require_same_shape(pv, target, "masked_l1_mean");
  require_same_shape(pv, mask, "masked_l1_mean");
  CompensatedSum total;
  double weight = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    total.add(static_cast<double>(mask[i]) * std::abs(static_cast<double>(pv[i]) - target[i]));
    weight += mask[i];
  }
  if (tape.record_branches()) {
    for (std::size_t i = 0; i < pv.size(); ++i) tape.record_branch(pv[i] > target[i]);
  }
  Tensor<T> y({1}, static_cast<T>(weight > 0.0 ? total.value() / weight : 0.0));
  return tape.push(std::move(y), tape.requires_grad(pred), [pred, target, mask, weight](Tape<T>& t, Var<T> self) {
    if (weight <= 0.0) return;
    const double g = static_cast<double>(t.grad(self)[0]) / weight;
    const Tensor<T>& pv = t.value(pred);
    Tensor<T>& dp = t.grad(pred);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const T d = pv[i] - target[i];
      const double sign = d > T(0) ? 1.0 : (d < T(0) ? -1.0 : 0.0);
      dp[i] += static_cast<T>(g * mask[i] * sign);
    }
  });
}

template <typename T>
Var<T> spectral_weight(Tape<T>& tape, Var<T> w, const Tensor<T>& u, const Tensor<T>& v) {
  const Tensor<T>& wv = tape.value(w);
  const int rows = wv.dim(wv.rank() - 1);
  const std::size_t cols = wv.size() / rows;
  if (static_cast<int>(u.size()) != rows || v.size() != cols) fail_invalid("spectral_weight: u/v dimension mismatch");
  double sigma = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    double row = 0.0;
    for (int o = 0; o < rows; ++o) row += static_cast<double>(u[o]) * wv[k * rows + o];
    sigma += row * v[k];
  }
  sigma = std::max(sigma, 1e-12);
  Tensor<T> y(wv.shape());
  for (std::size_t i = 0; i < wv.size(); ++i) y[i] = static_cast<T>(wv[i] / sigma);
  return tape.push(std::move(y), tape.requires_grad(w), [w, u, v, sigma, rows, cols](Tape<T>& t, Var<T> self) {
    const Tensor<T>& gy = t.grad(self);
    const Tensor<T>& wv = t.value(w);
    double inner = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) inner += static_cast<double>(gy[i]) * wv[i];
    const double coeff = inner / (sigma * sigma);
    Tensor<T>& dw = t.grad(w);
    for (std::size_t k = 0; k < cols; ++k) {
      for (int o = 0; o < rows; ++o) {
        const std::size_t i = k * rows + o;
        dw[i] += static_cast<T>(gy[i] / sigma - coeff * u[o] * v[k]);
      }
    }
  });
}

#define GFORGE_INSTANTIATE_OPS(T)                                                                                  \
  template Var<T> conv2d<T>(Tape<T>&, Var<T>, Var<T>, Var<T>, const ConvGeometry&);                                \
  template Var<T> partial_conv2d<T>(Tape<T>&, Var<T>, const Tensor<T>&, Var<T>, Var<T>, const ConvGeometry&,       \
                                    Tensor<T>*);                                                                   \
  template Var<T> conv_transpose2d<T>(Tape<T>&, Var<T>, Var<T>, Var<T>, const ConvGeometry&);                      \
  template Var<T> batch_norm<T>(Tape<T>&, Var<T>, Var<T>, Var<T>, BatchNormStats<T>&, bool, double, double);       \
  template Var<T> instance_norm<T>(Tape<T>&, Var<T>, double);                                                      \
  template Var<T> leaky_relu<T>(Tape<T>&, Var<T>, double);                                                         \
  template Var<T> sigmoid<T>(Tape<T>&, Var<T>);                                                                    \
  template Var<T> softplus<T>(Tape<T>&, Var<T>);                                                                   \
  template Var<T> add<T>(Tape<T>&, Var<T>, Var<T>);                                                                \
  template Var<T> affine<T>(Tape<T>&, Var<T>, double, double);                                                     \
  template Var<T> weighted_sum<T>(Tape<T>&, Var<T>, double, Var<T>, double);                                       \
  template Var<T> concat_channels<T>(Tape<T>&, Var<T>, Var<T>);                                                    \
  template Var<T> avg_pool<T>(Tape<T>&, Var<T>, const ConvGeometry&);                                              \
  template Var<T> mean<T>(Tape<T>&, Var<T>);                                                                       \
  template Var<T> min_zero<T>(Tape<T>&, Var<T>);                                                                   \
  template Var<T> masked_l1_mean<T>(Tape<T>&, Var<T>, const Tensor<T>&, const Tensor<T>&);                         \
  template Var<T> spectral_weight<T>(Tape<T>&, Var<T>, const Tensor<T>&, const Tensor<T>&);

GFORGE_INSTANTIATE_OPS(float)
GFORGE_INSTANTIATE_OPS(double)

#undef GFORGE_INSTANTIATE_OPS

}  // namespace gforge::nn
