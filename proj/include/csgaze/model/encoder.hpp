#pragma once

#include "csgaze/model/config.hpp"
#include "csgaze/nn/conv.hpp"
#include "csgaze/nn/ops.hpp"

namespace csgaze::model {

using nn::Tensor;

// Residual downsampling stage: 3x3 stride-2 conv, 3x3 conv, 1x1 stride-2
// skip projection; GELU activations.
template <typename S>
struct ResStage {
  nn::Conv2d<S> conv1, conv2, skip;

  struct Cache {
    typename nn::Conv2d<S>::Cache c1, c2, cs;
    Tensor<S> pre1, pre_out;
  };

  void init(const std::string& name, int cin, int cout, const Rng& rng) {
    conv1.init(name + ".conv1", cin, cout, 3, 2, 1, rng);
    conv2.init(name + ".conv2", cout, cout, 3, 1, 1, rng);
    skip.init(name + ".skip", cin, cout, 1, 2, 0, rng);
  }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    Tensor<S> a = conv1.forward(x, cache ? &c.c1 : nullptr);
    c.pre1 = a;
    nn::gelu_forward(a);
    Tensor<S> b = conv2.forward(a, cache ? &c.c2 : nullptr);
    Tensor<S> s = skip.forward(x, cache ? &c.cs : nullptr);
    for (std::size_t i = 0; i < b.v.size(); ++i) b.v[i] += s.v[i];
    c.pre_out = b;
    nn::gelu_forward(b);
    return b;
  }

  Tensor<S> backward(const Cache& c, Tensor<S> dy) {
    nn::gelu_backward(c.pre_out, dy);
    Tensor<S> da = conv2.backward(c.c2, dy);
    nn::gelu_backward(c.pre1, da);
    Tensor<S> dx = conv1.backward(c.c1, da);
    Tensor<S> dxs = skip.backward(c.cs, dy);
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxs.v[i];
    return dx;
  }

  void visit(const nn::ParamVisitor<S>& f) {
    conv1.visit(f);
    conv2.visit(f);
    skip.visit(f);
  }
};

// Images to token grids: average pool, patchify stem, two residual stages,
// then a 1x1 linear projection to the output dim.  Tokens are the flattened
// grid (row-major); the global vector is their mean.
template <typename S>
struct ConvEncoder {
  int pool_factor = 4;
  nn::Conv2d<S> stem;
  ResStage<S> stage1, stage2;
  nn::Conv2d<S> proj;

  struct Output {
    Tensor<S> tokens;  // (T, d)
    Tensor<S> global;  // (1, d)
    int grid = 0;
  };

  struct Cache {
    typename nn::Conv2d<S>::Cache stem_c, proj_c;
    typename ResStage<S>::Cache s1, s2;
    Tensor<S> stem_pre;
    int grid = 0;
  };

  void init(const std::string& name, const ModelConfig& cfg, int d_out, const Rng& rng) {
    pool_factor = cfg.pool_factor;
    stem.init(name + ".stem", 3, cfg.stem_channels, cfg.stem_kernel, cfg.stem_kernel, 0, rng);
    stage1.init(name + ".stage1", cfg.stem_channels, cfg.stage1_channels, rng);
    stage2.init(name + ".stage2", cfg.stage1_channels, cfg.stage2_channels, rng);
    proj.init(name + ".proj", cfg.stage2_channels, d_out, 1, 1, 0, rng, 1.0);
  }

  int out_dim() const { return proj.w.value.shape[0]; }

  Output forward(const Tensor<S>& img, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    Tensor<S> x = nn::avg_pool(img, pool_factor);
    x = stem.forward(x, cache ? &c.stem_c : nullptr);
    c.stem_pre = x;
    nn::gelu_forward(x);
    x = stage1.forward(x, cache ? &c.s1 : nullptr);
    x = stage2.forward(x, cache ? &c.s2 : nullptr);
    Tensor<S> feat = proj.forward(x, cache ? &c.proj_c : nullptr);  // (d, g, g)
    int d = feat.shape[0], g = feat.shape[1];
    c.grid = g;
    Output out;
    out.grid = g;
    out.tokens = Tensor<S>({g * g, d});
    out.global = Tensor<S>({1, d});
    for (int e = 0; e < d; ++e) {
      S acc = 0;
      for (int yy = 0; yy < g; ++yy)
        for (int xx = 0; xx < g; ++xx) {
          S v = feat.at(e, yy, xx);
          out.tokens.at(yy * g + xx, e) = v;
          acc += v;
        }
      out.global.at(0, e) = acc / static_cast<S>(g * g);
    }
    return out;
  }

  // d_tokens may be empty when only the global vector was consumed.
  void backward(const Cache& c, const Tensor<S>& d_tokens, const Tensor<S>& d_global) {
    int d = out_dim(), g = c.grid;
    Tensor<S> dfeat({d, g, g});
    S inv = S(1) / static_cast<S>(g * g);
    for (int e = 0; e < d; ++e) {
      S gg = d_global.empty() ? S(0) : d_global.at(0, e) * inv;
      for (int yy = 0; yy < g; ++yy)
        for (int xx = 0; xx < g; ++xx)
          dfeat.at(e, yy, xx) =
              gg + (d_tokens.empty() ? S(0) : d_tokens.at(yy * g + xx, e));
    }
    Tensor<S> dx = proj.backward(c.proj_c, dfeat);
    dx = stage2.backward(c.s2, std::move(dx));
    dx = stage1.backward(c.s1, std::move(dx));
    nn::gelu_backward(c.stem_pre, dx);
    stem.backward(c.stem_c, dx);  // gradient w.r.t. the raster is discarded
  }

  void visit(const nn::ParamVisitor<S>& f) {
    stem.visit(f);
    stage1.visit(f);
    stage2.visit(f);
    proj.visit(f);
  }
};

}  // namespace csgaze::model
