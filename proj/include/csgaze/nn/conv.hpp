#pragma once

#include "csgaze/nn/tensor.hpp"

namespace csgaze::nn {

// 2-d convolution over (C, H, W) tensors with zero padding.
template <typename S>
struct Conv2d {
  Param<S> w;  // (oc, ic, kh, kw)
  Param<S> b;  // (oc)
  int stride = 1;
  int pad = 0;

  struct Cache {
    Tensor<S> x;
  };

  void init(const std::string& name, int ic, int oc, int k, int stride_, int pad_, const Rng& rng,
            double gain = 2.0) {
    stride = stride_;
    pad = pad_;
    w.init_shape(name + ".w", {oc, ic, k, k});
    b.init_shape(name + ".b", {oc});
    w.init_random(rng, gain);
  }

  int out_extent(int in) const { return (in + 2 * pad - w.value.shape[2]) / stride + 1; }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
    require(x.shape.size() == 3 && x.shape[0] == w.value.shape[1], "conv: input shape mismatch");
    int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
    int oc = w.value.shape[0], k = w.value.shape[2];
    int oh = out_extent(h), ow = out_extent(wd);
    require(oh > 0 && ow > 0, "conv: output would be empty");
    Tensor<S> y({oc, oh, ow});
    for (int o = 0; o < oc; ++o) {
      S* yo = y.data() + static_cast<std::size_t>(o) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) yo[i] = b.value.at(o);
      for (int c = 0; c < ic; ++c) {
        const S* xc = x.data() + static_cast<std::size_t>(c) * h * wd;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            S wv = w.value.at(o, c, ky, kx);
            if (wv == S(0)) continue;
            for (int yy = 0; yy < oh; ++yy) {
              int iy = yy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              const S* xrow = xc + static_cast<std::size_t>(iy) * wd;
              S* yrow = yo + static_cast<std::size_t>(yy) * ow;
              for (int xx = 0; xx < ow; ++xx) {
                int ix = xx * stride + kx - pad;
                if (ix < 0 || ix >= wd) continue;
                yrow[xx] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
    if (cache) cache->x = x;
    return y;
  }

  Tensor<S> backward(const Cache& cache, const Tensor<S>& dy) {
    const Tensor<S>& x = cache.x;
    int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
    int oc = w.value.shape[0], k = w.value.shape[2];
    int oh = dy.shape[1], ow = dy.shape[2];
    require(dy.shape[0] == oc && oh == out_extent(h) && ow == out_extent(wd),
            "conv: grad shape mismatch");
    Tensor<S> dx({ic, h, wd});
    for (int o = 0; o < oc; ++o) {
      const S* go = dy.data() + static_cast<std::size_t>(o) * oh * ow;
      S gb = 0;
      for (int i = 0; i < oh * ow; ++i) gb += go[i];
      b.grad.at(o) += gb;
      for (int c = 0; c < ic; ++c) {
        const S* xc = x.data() + static_cast<std::size_t>(c) * h * wd;
        S* dxc = dx.data() + static_cast<std::size_t>(c) * h * wd;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            S wv = w.value.at(o, c, ky, kx);
            S gw = 0;
            for (int yy = 0; yy < oh; ++yy) {
              int iy = yy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              const S* xrow = xc + static_cast<std::size_t>(iy) * wd;
              S* dxrow = dxc + static_cast<std::size_t>(iy) * wd;
              const S* grow = go + static_cast<std::size_t>(yy) * ow;
              for (int xx = 0; xx < ow; ++xx) {
                int ix = xx * stride + kx - pad;
                if (ix < 0 || ix >= wd) continue;
                gw += grow[xx] * xrow[ix];
                dxrow[ix] += grow[xx] * wv;
              }
            }
            w.grad.at(o, c, ky, kx) += gw;
          }
        }
      }
    }
    return dx;
  }

  void visit(const ParamVisitor<S>& f) {
    f(w);
    f(b);
  }
};

// --- parameter-free spatial ops -------------------------------------------

// Non-overlapping average pooling by an integer factor.
template <typename S>
inline Tensor<S> avg_pool(const Tensor<S>& x, int f) {
  int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  require(h % f == 0 && w % f == 0, "avg_pool: extent not divisible by factor");
  Tensor<S> y({c, h / f, w / f});
  S inv = S(1) / static_cast<S>(f * f);
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h / f; ++yy)
      for (int xx = 0; xx < w / f; ++xx) {
        S acc = 0;
        for (int a = 0; a < f; ++a)
          for (int bq = 0; bq < f; ++bq) acc += x.at(ch, yy * f + a, xx * f + bq);
        y.at(ch, yy, xx) = acc * inv;
      }
  return y;
}

template <typename S>
inline Tensor<S> avg_pool_backward(const Tensor<S>& dy, int f) {
  int c = dy.shape[0], h = dy.shape[1], w = dy.shape[2];
  Tensor<S> dx({c, h * f, w * f});
  S inv = S(1) / static_cast<S>(f * f);
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        S g = dy.at(ch, yy, xx) * inv;
        for (int a = 0; a < f; ++a)
          for (int bq = 0; bq < f; ++bq) dx.at(ch, yy * f + a, xx * f + bq) = g;
      }
  return dx;
}

// Nearest-neighbor 2x upsampling.
template <typename S>
inline Tensor<S> upsample2(const Tensor<S>& x) {
  int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  Tensor<S> y({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        S v = x.at(ch, yy, xx);
        y.at(ch, 2 * yy, 2 * xx) = v;
        y.at(ch, 2 * yy, 2 * xx + 1) = v;
        y.at(ch, 2 * yy + 1, 2 * xx) = v;
        y.at(ch, 2 * yy + 1, 2 * xx + 1) = v;
      }
  return y;
}

template <typename S>
inline Tensor<S> upsample2_backward(const Tensor<S>& dy) {
  int c = dy.shape[0], h = dy.shape[1] / 2, w = dy.shape[2] / 2;
  Tensor<S> dx({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        dx.at(ch, yy, xx) = dy.at(ch, 2 * yy, 2 * xx) + dy.at(ch, 2 * yy, 2 * xx + 1) +
                            dy.at(ch, 2 * yy + 1, 2 * xx) + dy.at(ch, 2 * yy + 1, 2 * xx + 1);
  return dx;
}

// Bilinear upsampling from (c, n, n) to (c, m, m) with center-aligned
// sampling: src = (dst + 0.5) * n / m - 0.5, clamped at the borders.
template <typename S>
struct BilinearPlan {
  int in = 0, out = 0;
  std::vector<int> i0, i1;
  std::vector<S> w1;  // weight on i1; weight on i0 is 1 - w1

  BilinearPlan() = default;
  BilinearPlan(int in_, int out_) : in(in_), out(out_), i0(out_), i1(out_), w1(out_) {
    for (int d = 0; d < out; ++d) {
      double s = (d + 0.5) * static_cast<double>(in) / out - 0.5;
      s = std::max(0.0, std::min(s, static_cast<double>(in - 1)));
      int lo = static_cast<int>(s);
      i0[d] = lo;
      i1[d] = std::min(lo + 1, in - 1);
      w1[d] = static_cast<S>(s - lo);
    }
  }
};

template <typename S>
inline Tensor<S> bilinear_up(const Tensor<S>& x, const BilinearPlan<S>& p) {
  int c = x.shape[0];
  require(x.shape[1] == p.in && x.shape[2] == p.in, "bilinear_up: plan mismatch");
  Tensor<S> y({c, p.out, p.out});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < p.out; ++yy) {
      S wy = p.w1[yy];
      int y0 = p.i0[yy], y1 = p.i1[yy];
      for (int xx = 0; xx < p.out; ++xx) {
        S wx = p.w1[xx];
        int x0 = p.i0[xx], x1 = p.i1[xx];
        S top = x.at(ch, y0, x0) * (S(1) - wx) + x.at(ch, y0, x1) * wx;
        S bot = x.at(ch, y1, x0) * (S(1) - wx) + x.at(ch, y1, x1) * wx;
        y.at(ch, yy, xx) = top * (S(1) - wy) + bot * wy;
      }
    }
  return y;
}

template <typename S>
inline Tensor<S> bilinear_up_backward(const Tensor<S>& dy, const BilinearPlan<S>& p) {
  int c = dy.shape[0];
  Tensor<S> dx({c, p.in, p.in});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < p.out; ++yy) {
      S wy = p.w1[yy];
      int y0 = p.i0[yy], y1 = p.i1[yy];
      for (int xx = 0; xx < p.out; ++xx) {
        S wx = p.w1[xx];
        int x0 = p.i0[xx], x1 = p.i1[xx];
        S g = dy.at(ch, yy, xx);
        dx.at(ch, y0, x0) += g * (S(1) - wx) * (S(1) - wy);
        dx.at(ch, y0, x1) += g * wx * (S(1) - wy);
        dx.at(ch, y1, x0) += g * (S(1) - wx) * wy;
        dx.at(ch, y1, x1) += g * wx * wy;
      }
    }
  return dx;
}

}  // namespace csgaze::nn
