#include "auvox/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace auvox {

double uniform_init_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

// C += A * B with A [m,k], B [k,n], C [m,n], all row-major. The i-k-j order
// streams B and C rows, which the compiler vectorizes.
template <typename S>
void gemm_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    S* __restrict ci = c + i * n;
    const S* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const S av = ai[p];
      if (av == S(0)) continue;
      const S* __restrict bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C += A * B^T with A [m,k], B [n,k], C [m,n]: contiguous dot products.
template <typename S>
void gemm_abt_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const S* __restrict ai = a + i * k;
    S* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const S* __restrict bj = b + j * k;
      S acc = S(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

template <typename S>
void require(bool ok, const char* what) {
  if (!ok) throw ShapeMismatchError(what);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename S>
Conv2d<S>::Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      weight_({out_c, in_c, k, k}),
      bias_({out_c}),
      dweight_({out_c, in_c, k, k}),
      dbias_({out_c}) {
  if (k % 2 == 0 || k == 0) throw InvalidDescriptorError("conv kernel size must be odd");
}

template <typename S>
void Conv2d<S>::im2col(const S* x, std::size_t h, std::size_t w, S* col) const {
  // col [in_c*k*k, h*w]; zero padding k/2 keeps the spatial size.
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k_ / 2);
  const std::size_t hw = h * w;
  std::size_t q = 0;
  for (std::size_t c = 0; c < in_c_; ++c) {
    const S* xc = x + c * hw;
    for (std::size_t dy = 0; dy < k_; ++dy) {
      for (std::size_t dx = 0; dx < k_; ++dx, ++q) {
        S* row = col + q * hw;
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - pad;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - pad;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
          S* dst = row + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(dst, dst + w, S(0));
            continue;
          }
          const S* src = xc + static_cast<std::size_t>(sy) * w;
          for (std::size_t xcol = 0; xcol < w; ++xcol) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xcol) + ox;
            dst[xcol] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w))
                            ? S(0)
                            : src[static_cast<std::size_t>(sx)];
          }
        }
      }
    }
  }
}

template <typename S>
Tensor<S> Conv2d<S>::forward(const Tensor<S>& x, bool cache) {
  require<S>(x.rank() == 4 && x.dim(1) == in_c_, "Conv2d: input shape mismatch");
  const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w;
  const std::size_t kk = in_c_ * k_ * k_;

  Tensor<S> y({b, out_c_, h, w});
  std::vector<S> col(kk * hw);
  for (std::size_t s = 0; s < b; ++s) {
    im2col(x.data() + s * in_c_ * hw, h, w, col.data());
    S* ys = y.data() + s * out_c_ * hw;
    for (std::size_t oc = 0; oc < out_c_; ++oc)
      std::fill(ys + oc * hw, ys + (oc + 1) * hw, bias_[oc]);
    gemm_acc(weight_.data(), col.data(), ys, out_c_, kk, hw);
  }
  if (cache) {
    x_cache_ = x;
    has_cache_ = true;
  }
  return y;
}

template <typename S>
Tensor<S> Conv2d<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Conv2d::backward without cached forward");
  const Tensor<S>& x = x_cache_;
  const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w;
  const std::size_t kk = in_c_ * k_ * k_;
  require<S>(dy.rank() == 4 && dy.dim(0) == b && dy.dim(1) == out_c_ && dy.dim(2) == h &&
                 dy.dim(3) == w,
             "Conv2d: dy shape mismatch");

  Tensor<S> dx(x.dims());
  std::vector<S> col(kk * hw);
  std::vector<S> dcol(kk * hw);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k_ / 2);

  for (std::size_t s = 0; s < b; ++s) {
    const S* dys = dy.data() + s * out_c_ * hw;

    im2col(x.data() + s * in_c_ * hw, h, w, col.data());
    // dW[oc,q] += sum_p dy[oc,p] * col[q,p]
    gemm_abt_acc(dys, col.data(), dweight_.data(), out_c_, hw, kk);
    for (std::size_t oc = 0; oc < out_c_; ++oc) {
      S acc = S(0);
      const S* row = dys + oc * hw;
      for (std::size_t p = 0; p < hw; ++p) acc += row[p];
      dbias_[oc] += acc;
    }

    // dcol[q,p] = sum_oc W[oc,q] * dy[oc,p], then scatter back (col2im).
    std::fill(dcol.begin(), dcol.end(), S(0));
    for (std::size_t oc = 0; oc < out_c_; ++oc) {
      const S* wrow = weight_.data() + oc * kk;
      const S* dyrow = dys + oc * hw;
      for (std::size_t q = 0; q < kk; ++q) {
        const S wv = wrow[q];
        if (wv == S(0)) continue;
        S* __restrict drow = dcol.data() + q * hw;
        for (std::size_t p = 0; p < hw; ++p) drow[p] += wv * dyrow[p];
      }
    }
    S* dxs = dx.data() + s * in_c_ * hw;
    std::size_t q = 0;
    for (std::size_t c = 0; c < in_c_; ++c) {
      S* dxc = dxs + c * hw;
      for (std::size_t dyk = 0; dyk < k_; ++dyk) {
        for (std::size_t dxk = 0; dxk < k_; ++dxk, ++q) {
          const S* row = dcol.data() + q * hw;
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dyk) - pad;
          const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dxk) - pad;
          for (std::size_t y = 0; y < h; ++y) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            S* dst = dxc + static_cast<std::size_t>(sy) * w;
            const S* src = row + y * w;
            const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -ox);
            const std::ptrdiff_t x1 =
                std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w),
                                         static_cast<std::ptrdiff_t>(w) - ox);
            for (std::ptrdiff_t xi = x0; xi < x1; ++xi)
              dst[static_cast<std::size_t>(xi + ox)] += src[static_cast<std::size_t>(xi)];
          }
        }
      }
    }
  }
  has_cache_ = false;
  return dx;
}

template <typename S>
void Conv2d<S>::collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
  out.push_back({prefix + ".weight", &weight_, &dweight_});
  out.push_back({prefix + ".bias", &bias_, &dbias_});
}

template <typename S>
void Conv2d<S>::init_params(Rng& rng) {
  const double bound = uniform_init_bound(in_c_ * k_ * k_, out_c_ * k_ * k_);
  for (std::size_t i = 0; i < weight_.size(); ++i)
    weight_[i] = static_cast<S>(rng.uniform(-bound, bound));
  bias_.zero();
}

template <typename S>
void Conv2d<S>::zero_grad() {
  dweight_.zero();
  dbias_.zero();
}

// -------------------------------------------------------------- MaxPool2

template <typename S>
Tensor<S> MaxPool2<S>::forward(const Tensor<S>& x, bool cache) {
  require<S>(x.rank() == 4, "MaxPool2: input must be rank 4");
  const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  require<S>(oh >= 1 && ow >= 1, "MaxPool2: input too small");

  Tensor<S> y({b, c, oh, ow});
  if (cache) {
    x_dims_ = x.dims();
    argmax_.assign(y.size(), 0);
  }
  std::size_t o = 0;
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (s * c + ch) * h * w;
      for (std::size_t py = 0; py < oh; ++py) {
        for (std::size_t px = 0; px < ow; ++px, ++o) {
          const std::size_t i0 = base + (2 * py) * w + 2 * px;
          std::size_t best = i0;
          S bv = x[i0];
          const std::size_t cand[3] = {i0 + 1, i0 + w, i0 + w + 1};
          for (std::size_t idx : cand) {
            if (x[idx] > bv) {
              bv = x[idx];
              best = idx;
            }
          }
          y[o] = bv;
          if (cache) argmax_[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  has_cache_ = cache;
  return y;
}

template <typename S>
Tensor<S> MaxPool2<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("MaxPool2::backward without cached forward");
  require<S>(dy.size() == argmax_.size(), "MaxPool2: dy shape mismatch");
  Tensor<S> dx(x_dims_);
  // Each output gradient lands on exactly one argmax position.
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += dy[o];
  has_cache_ = false;
  return dx;
}

// ----------------------------------------------------------------- Dense

template <typename S>
Dense<S>::Dense(std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_({out, in}), bias_({out}), dweight_({out, in}), dbias_({out}) {}

template <typename S>
Tensor<S> Dense<S>::forward(const Tensor<S>& x, bool cache) {
  require<S>(x.rank() == 2 && x.dim(1) == in_, "Dense: input shape mismatch");
  const std::size_t b = x.dim(0);
  Tensor<S> y({b, out_});
  for (std::size_t s = 0; s < b; ++s) {
    const S* xs = x.data() + s * in_;
    S* ys = y.data() + s * out_;
    for (std::size_t o = 0; o < out_; ++o) {
      const S* __restrict wrow = weight_.data() + o * in_;
      S acc = bias_[o];
      for (std::size_t i = 0; i < in_; ++i) acc += wrow[i] * xs[i];
      ys[o] = acc;
    }
  }
  if (cache) {
    x_cache_ = x;
    has_cache_ = true;
  }
  return y;
}

template <typename S>
Tensor<S> Dense<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Dense::backward without cached forward");
  const Tensor<S>& x = x_cache_;
  const std::size_t b = x.dim(0);
  require<S>(dy.rank() == 2 && dy.dim(0) == b && dy.dim(1) == out_, "Dense: dy shape mismatch");

  // dW = dy^T x; db = column sums of dy; dx = dy W.
  for (std::size_t s = 0; s < b; ++s) {
    const S* dys = dy.data() + s * out_;
    const S* xs = x.data() + s * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const S g = dys[o];
      if (g == S(0)) continue;
      S* __restrict wrow = dweight_.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) wrow[i] += g * xs[i];
      dbias_[o] += g;
    }
  }
  Tensor<S> dx({b, in_});
  gemm_acc(dy.data(), weight_.data(), dx.data(), b, out_, in_);
  has_cache_ = false;
  return dx;
}

template <typename S>
void Dense<S>::collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
  out.push_back({prefix + ".weight", &weight_, &dweight_});
  out.push_back({prefix + ".bias", &bias_, &dbias_});
}

template <typename S>
void Dense<S>::init_params(Rng& rng) {
  const double bound = uniform_init_bound(in_, out_);
  for (std::size_t i = 0; i < weight_.size(); ++i)
    weight_[i] = static_cast<S>(rng.uniform(-bound, bound));
  bias_.zero();
}

template <typename S>
void Dense<S>::zero_grad() {
  dweight_.zero();
  dbias_.zero();
}

// ----------------------------------------------------------- activations

template <typename S>
Tensor<S> Relu<S>::forward(const Tensor<S>& x, bool cache) {
  Tensor<S> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > S(0) ? x[i] : S(0);
  if (cache) {
    y_cache_ = y;
    has_cache_ = true;
  }
  return y;
}

template <typename S>
Tensor<S> Relu<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Relu::backward without cached forward");
  require<S>(dy.size() == y_cache_.size(), "Relu: dy shape mismatch");
  Tensor<S> dx(y_cache_.dims());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = y_cache_[i] > S(0) ? dy[i] : S(0);
  has_cache_ = false;
  return dx;
}

template <typename S>
Tensor<S> Sigmoid<S>::forward(const Tensor<S>& x, bool cache) {
  Tensor<S> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const S v = x[i];
    if (v >= S(0)) {
      y[i] = S(1) / (S(1) + std::exp(-v));
    } else {
      const S e = std::exp(v);
      y[i] = e / (S(1) + e);
    }
  }
  if (cache) {
    y_cache_ = y;
    has_cache_ = true;
  }
  return y;
}

template <typename S>
Tensor<S> Sigmoid<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Sigmoid::backward without cached forward");
  require<S>(dy.size() == y_cache_.size(), "Sigmoid: dy shape mismatch");
  Tensor<S> dx(y_cache_.dims());
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const S p = y_cache_[i];
    dx[i] = dy[i] * p * (S(1) - p);
  }
  has_cache_ = false;
  return dx;
}

template <typename S>
Tensor<S> Softmax<S>::forward(const Tensor<S>& x, bool cache) {
  require<S>(x.rank() >= 1, "Softmax: empty shape");
  const std::size_t k = x.dim(x.rank() - 1);
  const std::size_t rows = x.size() / k;
  Tensor<S> y(x.dims());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xr = x.data() + r * k;
    S* yr = y.data() + r * k;
    S mx = xr[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, xr[j]);
    S sum = S(0);
    for (std::size_t j = 0; j < k; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < k; ++j) yr[j] /= sum;
  }
  if (cache) {
    y_cache_ = y;
    has_cache_ = true;
  }
  return y;
}

template <typename S>
Tensor<S> Softmax<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Softmax::backward without cached forward");
  require<S>(dy.size() == y_cache_.size(), "Softmax: dy shape mismatch");
  const std::size_t k = y_cache_.dim(y_cache_.rank() - 1);
  const std::size_t rows = y_cache_.size() / k;
  Tensor<S> dx(y_cache_.dims());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* p = y_cache_.data() + r * k;
    const S* g = dy.data() + r * k;
    S dot = S(0);
    for (std::size_t j = 0; j < k; ++j) dot += p[j] * g[j];
    S* d = dx.data() + r * k;
    for (std::size_t j = 0; j < k; ++j) d[j] = p[j] * (g[j] - dot);
  }
  has_cache_ = false;
  return dx;
}

template <typename S>
Tensor<S> Flatten<S>::forward(const Tensor<S>& x, bool cache) {
  require<S>(x.rank() >= 2, "Flatten: input must be rank >= 2");
  if (cache) {
    x_dims_ = x.dims();
    has_cache_ = true;
  }
  Tensor<S> y = x;
  y.reshape({x.dim(0), x.size() / x.dim(0)});
  return y;
}

template <typename S>
Tensor<S> Flatten<S>::backward(const Tensor<S>& dy) {
  if (!has_cache_) throw MissingCacheError("Flatten::backward without cached forward");
  Tensor<S> dx = dy;
  dx.reshape(x_dims_);
  has_cache_ = false;
  return dx;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Dense<float>;
template class Dense<double>;
template class Relu<float>;
template class Relu<double>;
template class Sigmoid<float>;
template class Sigmoid<double>;
template class Softmax<float>;
template class Softmax<double>;
template class Flatten<float>;
template class Flatten<double>;

}  // namespace auvox
