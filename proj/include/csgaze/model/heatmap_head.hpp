#pragma once

#include "csgaze/core/heatmap.hpp"
#include "csgaze/core/types.hpp"
#include "csgaze/model/config.hpp"
#include "csgaze/nn/conv.hpp"
#include "csgaze/nn/linear.hpp"
#include "csgaze/nn/ops.hpp"

namespace csgaze::model {

using nn::Tensor;

// Fraction of each token-grid cell covered by the head box; this is the
// "whose gaze" conditioning channel.  It is never all-zero for a valid box.
template <typename S>
inline Tensor<S> build_head_mask(const HeadBox& box, int grid) {
  Tensor<S> m({1, grid, grid});
  double cell = 1.0 / grid;
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) {
      double ox = std::max(0.0, std::min(box.x1, (x + 1) * cell) - std::max(box.x0, x * cell));
      double oy = std::max(0.0, std::min(box.y1, (y + 1) * cell) - std::max(box.y0, y * cell));
      m.at(0, y, x) = static_cast<S>(ox * oy / (cell * cell));
    }
  return m;
}

// Decodes scene tokens + head mask + face embedding into a 64x64 gaze
// heatmap in [0,1]: 1x1 mix, two upsample+conv stages, 1x1 to logits,
// bilinear resize to 64, sigmoid.
template <typename S>
struct HeatmapHead {
  nn::Linear<S> face_cond;  // d_face -> broadcast channels
  nn::Conv2d<S> mix, up_conv1, up_conv2, out_conv;
  nn::BilinearPlan<S> plan;
  int grid = 0;

  struct Cache {
    typename nn::Linear<S>::Cache fc;
    typename nn::Conv2d<S>::Cache mixc, u1, u2, oc;
    Tensor<S> pre_mix, pre_u1, pre_u2, logits_lo, out;  // out is post-sigmoid
  };

  void init(const std::string& name, const ModelConfig& cfg, const Rng& rng) {
    grid = cfg.token_grid();
    int fc = cfg.face_cond_channels;
    face_cond.init(name + ".face_cond", cfg.d_face, fc, rng, 1.0);
    mix.init(name + ".mix", cfg.d_scene + 1 + fc, cfg.decoder_channels1, 1, 1, 0, rng);
    up_conv1.init(name + ".up_conv1", cfg.decoder_channels1, cfg.decoder_channels2, 3, 1, 1, rng);
    up_conv2.init(name + ".up_conv2", cfg.decoder_channels2, cfg.decoder_channels2, 3, 1, 1, rng);
    out_conv.init(name + ".out_conv", cfg.decoder_channels2, 1, 1, 1, 0, rng, 1.0);
    plan = nn::BilinearPlan<S>(grid * 4, kHeatmapSize);
  }

  // scene_tokens: (T, d_scene) from the scene encoder; face_emb: (1, d_face).
  Tensor<S> forward(const Tensor<S>& scene_tokens, const Tensor<S>& face_emb,
                    const Tensor<S>& head_mask, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    int d = scene_tokens.shape[1];
    int fc = face_cond.out_dim();
    Tensor<S> cond = face_cond.forward(face_emb, cache ? &c.fc : nullptr);
    Tensor<S> x({d + 1 + fc, grid, grid});
    for (int y = 0; y < grid; ++y)
      for (int xx = 0; xx < grid; ++xx) {
        for (int e = 0; e < d; ++e) x.at(e, y, xx) = scene_tokens.at(y * grid + xx, e);
        x.at(d, y, xx) = head_mask.at(0, y, xx);
        for (int e = 0; e < fc; ++e) x.at(d + 1 + e, y, xx) = cond.at(0, e);
      }
    Tensor<S> h = mix.forward(x, cache ? &c.mixc : nullptr);
    c.pre_mix = h;
    nn::gelu_forward(h);
    h = up_conv1.forward(nn::upsample2(h), cache ? &c.u1 : nullptr);
    c.pre_u1 = h;
    nn::gelu_forward(h);
    h = up_conv2.forward(nn::upsample2(h), cache ? &c.u2 : nullptr);
    c.pre_u2 = h;
    nn::gelu_forward(h);
    Tensor<S> logits = out_conv.forward(h, cache ? &c.oc : nullptr);  // (1, 4g, 4g)
    c.logits_lo = logits;
    Tensor<S> out = nn::bilinear_up(logits, plan);  // (1, 64, 64)
    for (auto& v : out.v) v = nn::sigmoid(v);
    c.out = out;
    return out;
  }

  // Returns (d scene_tokens, d face_emb).  dout is w.r.t. the post-sigmoid map.
  std::pair<Tensor<S>, Tensor<S>> backward(const Cache& c, const Tensor<S>& dout) {
    Tensor<S> dlog_hi = dout;
    for (std::size_t i = 0; i < dlog_hi.v.size(); ++i) {
      S y = c.out.v[i];
      dlog_hi.v[i] *= y * (S(1) - y);  // sigmoid'
    }
    Tensor<S> dlog = nn::bilinear_up_backward(dlog_hi, plan);
    Tensor<S> dh = out_conv.backward(c.oc, dlog);
    nn::gelu_backward(c.pre_u2, dh);
    dh = nn::upsample2_backward(up_conv2.backward(c.u2, dh));
    nn::gelu_backward(c.pre_u1, dh);
    dh = nn::upsample2_backward(up_conv1.backward(c.u1, dh));
    nn::gelu_backward(c.pre_mix, dh);
    Tensor<S> dx = mix.backward(c.mixc, dh);
    int d = dx.shape[0] - 1 - face_cond.out_dim();
    Tensor<S> d_tokens({grid * grid, d});
    Tensor<S> d_cond({1, face_cond.out_dim()});
    for (int y = 0; y < grid; ++y)
      for (int xx = 0; xx < grid; ++xx) {
        for (int e = 0; e < d; ++e) d_tokens.at(y * grid + xx, e) = dx.at(e, y, xx);
        for (int e = 0; e < face_cond.out_dim(); ++e)
          d_cond.at(0, e) += dx.at(d + 1 + e, y, xx);
      }
    Tensor<S> d_face = face_cond.backward(c.fc, d_cond);
    return {std::move(d_tokens), std::move(d_face)};
  }

  void visit(const nn::ParamVisitor<S>& f) {
    face_cond.visit(f);
    mix.visit(f);
    up_conv1.visit(f);
    up_conv2.visit(f);
    out_conv.visit(f);
  }
};

}  // namespace csgaze::model
