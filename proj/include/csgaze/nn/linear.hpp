#pragma once

#include "csgaze/nn/tensor.hpp"

namespace csgaze::nn {

// Fully connected layer, y = x W^T + b, applied row-wise to (n, in) inputs.
template <typename S>
struct Linear {
  Param<S> w;  // (out, in)
  Param<S> b;  // (out)

  struct Cache {
    Tensor<S> x;
  };

  void init(const std::string& name, int in, int out, const Rng& rng, double gain = 2.0) {
    w.init_shape(name + ".w", {out, in});
    b.init_shape(name + ".b", {out});
    w.init_random(rng, gain);
  }

  int in_dim() const { return w.value.shape[1]; }
  int out_dim() const { return w.value.shape[0]; }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
    require(x.shape.size() == 2 && x.shape[1] == in_dim(), "linear: input shape mismatch");
    int n = x.shape[0], in = in_dim(), out = out_dim();
    Tensor<S> y({n, out});
    for (int i = 0; i < n; ++i) {
      const S* xi = x.row(i);
      S* yi = y.row(i);
      for (int o = 0; o < out; ++o) {
        const S* wo = w.value.row(o);
        S acc = b.value.at(o);
        for (int k = 0; k < in; ++k) acc += wo[k] * xi[k];
        yi[o] = acc;
      }
    }
    if (cache) cache->x = x;
    return y;
  }

  // Accumulates parameter gradients and returns dL/dx.
  Tensor<S> backward(const Cache& cache, const Tensor<S>& dy) {
    int n = cache.x.shape[0], in = in_dim(), out = out_dim();
    require(dy.shape.size() == 2 && dy.shape[0] == n && dy.shape[1] == out,
            "linear: grad shape mismatch");
    Tensor<S> dx({n, in});
    for (int i = 0; i < n; ++i) {
      const S* xi = cache.x.row(i);
      const S* di = dy.row(i);
      S* dxi = dx.row(i);
      for (int o = 0; o < out; ++o) {
        S g = di[o];
        if (g == S(0)) continue;
        S* gw = w.grad.row(o);
        const S* wo = w.value.row(o);
        b.grad.at(o) += g;
        for (int k = 0; k < in; ++k) {
          gw[k] += g * xi[k];
          dxi[k] += g * wo[k];
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

}  // namespace csgaze::nn
