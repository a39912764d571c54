#pragma once

#include <array>
#include <tuple>
#include <utility>

#include "csgaze/model/config.hpp"
#include "csgaze/nn/attention.hpp"
#include "csgaze/nn/linear.hpp"
#include "csgaze/nn/ops.hpp"

namespace csgaze::model {

using nn::Tensor;

// Convex combination of the two face embeddings with learnable logits.
// With fixed_equal the weights are pinned at exactly (0.5, 0.5) and the
// logits receive no gradient (the two-person mutual-gaze mode).
template <typename S>
struct FaceFuse {
  nn::Param<S> alpha_logits;  // (2)
  bool fixed_equal = false;

  struct Cache {
    Tensor<S> f_p, f_a;
    std::array<S, 2> weights{};
  };

  void init(const std::string& name, bool fixed) {
    fixed_equal = fixed;
    alpha_logits.init_shape(name + ".alpha_logits", {2});  // zeros: starts at (0.5, 0.5)
  }

  std::array<S, 2> weights() const {
    if (fixed_equal) return {S(0.5), S(0.5)};
    S w[2] = {alpha_logits.value.at(0), alpha_logits.value.at(1)};
    nn::softmax_span(w, 2);
    return {w[0], w[1]};
  }

  Tensor<S> forward(const Tensor<S>& f_p, const Tensor<S>& f_a, Cache* cache) const {
    require(f_p.same_shape(f_a) && f_p.shape[0] == 1, "face fuse: embedding shape mismatch");
    auto w = weights();
    Tensor<S> out({1, f_p.shape[1]});
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = w[0] * f_p.v[i] + w[1] * f_a.v[i];
    if (cache) {
      cache->f_p = f_p;
      cache->f_a = f_a;
      cache->weights = w;
    }
    return out;
  }

  // Returns (d f_p, d f_a).
  std::pair<Tensor<S>, Tensor<S>> backward(const Cache& c, const Tensor<S>& dout) {
    Tensor<S> dp({1, c.f_p.shape[1]}), da({1, c.f_a.shape[1]});
    S dw[2] = {0, 0};
    for (std::size_t i = 0; i < dout.v.size(); ++i) {
      dp.v[i] = c.weights[0] * dout.v[i];
      da.v[i] = c.weights[1] * dout.v[i];
      dw[0] += dout.v[i] * c.f_p.v[i];
      dw[1] += dout.v[i] * c.f_a.v[i];
    }
    if (!fixed_equal) {
      S w[2] = {c.weights[0], c.weights[1]};
      S dl[2];
      nn::softmax_backward_span(w, dw, dl, 2);
      alpha_logits.grad.at(0) += dl[0];
      alpha_logits.grad.at(1) += dl[1];
    }
    return {std::move(dp), std::move(da)};
  }

  void visit(const nn::ParamVisitor<S>& f) { f(alpha_logits); }
};

// Scene tokens attend over context-text tokens; the attended rows are
// mean-pooled and a projected scene global is added back as a residual.
template <typename S>
struct CrossAttend {
  nn::MultiHeadAttention<S> mha;
  nn::Linear<S> global_proj;  // d_scene -> d_attn residual path

  struct Cache {
    typename nn::MultiHeadAttention<S>::Cache mc;
    typename nn::Linear<S>::Cache gc;
    int n_q = 0;
  };

  void init(const std::string& name, const ModelConfig& cfg, const Rng& rng) {
    mha.init(name + ".mha", cfg.d_scene, cfg.d_text, cfg.d_attn, cfg.heads, rng);
    global_proj.init(name + ".global_proj", cfg.d_scene, cfg.d_attn, rng, 1.0);
  }

  Tensor<S> forward(const Tensor<S>& scene_tokens, const Tensor<S>& scene_global,
                    const Tensor<S>& text_tokens, const std::vector<char>& text_mask,
                    Cache* cache) const {
    Tensor<S> attended = mha.forward(scene_tokens, text_tokens, text_mask, cache ? &cache->mc : nullptr);
    int n_q = attended.shape[0], d = attended.shape[1];
    Tensor<S> fused = global_proj.forward(scene_global, cache ? &cache->gc : nullptr);
    S inv = S(1) / static_cast<S>(n_q);
    for (int i = 0; i < n_q; ++i) {
      const S* row = attended.row(i);
      for (int e = 0; e < d; ++e) fused.at(0, e) += row[e] * inv;
    }
    if (cache) cache->n_q = n_q;
    return fused;  // (1, d_attn)
  }

  // Returns (d scene_tokens, d scene_global, d text_tokens).
  std::tuple<Tensor<S>, Tensor<S>, Tensor<S>> backward(const Cache& c, const Tensor<S>& dout) {
    int d = dout.shape[1];
    Tensor<S> d_attended({c.n_q, d});
    S inv = S(1) / static_cast<S>(c.n_q);
    for (int i = 0; i < c.n_q; ++i)
      for (int e = 0; e < d; ++e) d_attended.at(i, e) = dout.at(0, e) * inv;
    auto [d_tokens, d_text] = mha.backward(c.mc, d_attended);
    Tensor<S> d_global = global_proj.backward(c.gc, dout);
    return {std::move(d_tokens), std::move(d_global), std::move(d_text)};
  }

  void visit(const nn::ParamVisitor<S>& f) {
    mha.visit(f);
    global_proj.visit(f);
  }
};

// Self-attention over the two-token sequence [scene-context fusion,
// projected face fusion], mean-pooled to one vector.  There is deliberately
// no residual around the attention: each source reaches the classifier only
// through its attention mass, so the per-source mass (averaged over heads
// and queries) is a faithful modality-usage statistic for the
// explainability report.
template <typename S>
struct SelfAttendMerge {
  nn::Linear<S> face_proj;  // d_face -> d_attn
  nn::MultiHeadAttention<S> mha;

  struct Cache {
    typename nn::Linear<S>::Cache fc;
    typename nn::MultiHeadAttention<S>::Cache mc;
  };

  struct Output {
    Tensor<S> merged;                 // (1, d_attn)
    std::array<double, 2> attention;  // mass on [scene-context, face] tokens
  };

  void init(const std::string& name, const ModelConfig& cfg, const Rng& rng) {
    face_proj.init(name + ".face_proj", cfg.d_face, cfg.d_attn, rng, 1.0);
    mha.init(name + ".mha", cfg.d_attn, cfg.d_attn, cfg.d_attn, cfg.heads, rng);
  }

  Output forward(const Tensor<S>& s_fused, const Tensor<S>& f_merged, Cache* cache) const {
    int d = s_fused.shape[1];
    Tensor<S> f_tok = face_proj.forward(f_merged, cache ? &cache->fc : nullptr);
    Tensor<S> seq({2, d});
    for (int e = 0; e < d; ++e) {
      seq.at(0, e) = s_fused.at(0, e);
      seq.at(1, e) = f_tok.at(0, e);
    }
    std::vector<char> mask(2, 1);
    typename nn::MultiHeadAttention<S>::Cache local_mc;
    auto* mc = cache ? &cache->mc : &local_mc;
    Tensor<S> att = mha.forward(seq, seq, mask, mc);
    Output out;
    out.merged = Tensor<S>({1, d});
    for (int e = 0; e < d; ++e)
      out.merged.at(0, e) = S(0.5) * (att.at(0, e) + att.at(1, e));
    const Tensor<S>& a = mc->attn;  // (h, 2, 2)
    int h = a.shape[0];
    double mass0 = 0, mass1 = 0;
    for (int t = 0; t < h; ++t)
      for (int q = 0; q < 2; ++q) {
        mass0 += static_cast<double>(a.at(t, q, 0));
        mass1 += static_cast<double>(a.at(t, q, 1));
      }
    out.attention = {mass0 / (2.0 * h), mass1 / (2.0 * h)};
    return out;
  }

  // Returns (d s_fused, d f_merged).
  std::pair<Tensor<S>, Tensor<S>> backward(const Cache& c, const Tensor<S>& d_merged) {
    int d = d_merged.shape[1];
    Tensor<S> d_att({2, d});
    for (int e = 0; e < d; ++e) {
      S g = S(0.5) * d_merged.at(0, e);
      d_att.at(0, e) = g;
      d_att.at(1, e) = g;
    }
    auto [dq, dkv] = mha.backward(c.mc, d_att);
    // The sequence fed both the query and the key/value inputs.
    Tensor<S> d_seq({2, d});
    for (std::size_t i = 0; i < d_seq.v.size(); ++i) d_seq.v[i] = dq.v[i] + dkv.v[i];
    Tensor<S> d_s({1, d});
    Tensor<S> d_ftok({1, d});
    for (int e = 0; e < d; ++e) {
      d_s.at(0, e) = d_seq.at(0, e);
      d_ftok.at(0, e) = d_seq.at(1, e);
    }
    Tensor<S> d_fmerged = face_proj.backward(c.fc, d_ftok);
    return {std::move(d_s), std::move(d_fmerged)};
  }

  void visit(const nn::ParamVisitor<S>& f) {
    face_proj.visit(f);
    mha.visit(f);
  }
};

// Two-layer classification head.
template <typename S>
struct Classifier {
  nn::Linear<S> l1, l2;

  struct Cache {
    typename nn::Linear<S>::Cache c1, c2;
    Tensor<S> pre;
  };

  void init(const std::string& name, const ModelConfig& cfg, const Rng& rng) {
    l1.init(name + ".l1", cfg.d_attn, cfg.classifier_hidden, rng);
    l2.init(name + ".l2", cfg.classifier_hidden, cfg.n_outputs(), rng);
  }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    Tensor<S> h = l1.forward(x, cache ? &c.c1 : nullptr);
    c.pre = h;
    nn::gelu_forward(h);
    return l2.forward(h, cache ? &c.c2 : nullptr);
  }

  Tensor<S> backward(const Cache& c, const Tensor<S>& dlogits) {
    Tensor<S> dh = l2.backward(c.c2, dlogits);
    nn::gelu_backward(c.pre, dh);
    return l1.backward(c.c1, dh);
  }

  void visit(const nn::ParamVisitor<S>& f) {
    l1.visit(f);
    l2.visit(f);
  }
};

}  // namespace csgaze::model
