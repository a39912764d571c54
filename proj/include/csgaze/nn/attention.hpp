#pragma once

#include <limits>
#include <vector>

#include "csgaze/nn/linear.hpp"
#include "csgaze/nn/ops.hpp"

namespace csgaze::nn {

// Multi-head scaled dot-product attention.  Queries and keys/values may
// come from different sources and dimensions.  Key positions with
// mask[j] == false receive -inf scores, i.e. exactly zero attention mass.
template <typename S>
struct MultiHeadAttention {
  Linear<S> q_proj, k_proj, v_proj, o_proj;
  int heads = 1;

  struct Cache {
    typename Linear<S>::Cache qc, kc, vc, oc;
    Tensor<S> q, k, v;     // (n, d_model) each
    Tensor<S> attn;        // (h, n_q, n_kv)
    std::vector<char> mask;
  };

  void init(const std::string& name, int d_q_in, int d_kv_in, int d_model, int h, const Rng& rng) {
    require(h > 0 && d_model % h == 0, "attention: head count must divide model dim");
    heads = h;
    // Xavier-ish gain keeps score magnitudes moderate at init.
    q_proj.init(name + ".q", d_q_in, d_model, rng, 1.0);
    k_proj.init(name + ".k", d_kv_in, d_model, rng, 1.0);
    v_proj.init(name + ".v", d_kv_in, d_model, rng, 1.0);
    o_proj.init(name + ".o", d_model, d_model, rng, 1.0);
  }

  int d_model() const { return q_proj.out_dim(); }

  // mask has one flag per key/value row; at least one must be set.
  Tensor<S> forward(const Tensor<S>& q_in, const Tensor<S>& kv_in, const std::vector<char>& mask,
                    Cache* cache) const {
    int n_q = q_in.shape[0], n_kv = kv_in.shape[0];
    require(mask.size() == static_cast<std::size_t>(n_kv), "attention: mask length mismatch");
    bool any = false;
    for (char m : mask) any = any || (m != 0);
    require(any, "attention: mask disables every key position");

    Cache local;
    Cache& c = cache ? *cache : local;
    c.q = q_proj.forward(q_in, cache ? &c.qc : nullptr);
    c.k = k_proj.forward(kv_in, cache ? &c.kc : nullptr);
    c.v = v_proj.forward(kv_in, cache ? &c.vc : nullptr);
    c.mask = mask;

    int dm = d_model(), dh = dm / heads;
    S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));
    c.attn = Tensor<S>({heads, n_q, n_kv});
    Tensor<S> ctx({n_q, dm});
    for (int t = 0; t < heads; ++t) {
      int off = t * dh;
      for (int i = 0; i < n_q; ++i) {
        S* arow = &c.attn.at(t, i, 0);
        const S* qi = c.q.row(i) + off;
        for (int j = 0; j < n_kv; ++j) {
          if (!mask[j]) {
            arow[j] = -std::numeric_limits<S>::infinity();
            continue;
          }
          const S* kj = c.k.row(j) + off;
          S dot = 0;
          for (int e = 0; e < dh; ++e) dot += qi[e] * kj[e];
          arow[j] = dot * scale;
        }
        softmax_span(arow, n_kv);
        S* ci = ctx.row(i) + off;
        for (int j = 0; j < n_kv; ++j) {
          S a = arow[j];
          if (a == S(0)) continue;
          const S* vj = c.v.row(j) + off;
          for (int e = 0; e < dh; ++e) ci[e] += a * vj[e];
        }
      }
    }
    return o_proj.forward(ctx, cache ? &c.oc : nullptr);
  }

  // Head-resolved attention weights from the last cached forward.
  static const Tensor<S>& attention(const Cache& c) { return c.attn; }

  // Returns (d q_in, d kv_in).
  std::pair<Tensor<S>, Tensor<S>> backward(const Cache& c, const Tensor<S>& dout) {
    int n_q = c.q.shape[0], n_kv = c.k.shape[0];
    int dm = d_model(), dh = dm / heads;
    S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

    Tensor<S> dctx = o_proj.backward(c.oc, dout);
    Tensor<S> dq({n_q, dm}), dk({n_kv, dm}), dv({n_kv, dm});
    std::vector<S> da(static_cast<std::size_t>(n_kv));
    std::vector<S> ds(static_cast<std::size_t>(n_kv));
    for (int t = 0; t < heads; ++t) {
      int off = t * dh;
      for (int i = 0; i < n_q; ++i) {
        const S* arow = c.attn.data() + (static_cast<std::size_t>(t) * n_q + i) * n_kv;
        const S* dci = dctx.row(i) + off;
        // dA and dV from ctx = A V.
        for (int j = 0; j < n_kv; ++j) {
          S a = arow[j];
          const S* vj = c.v.row(j) + off;
          S acc = 0;
          for (int e = 0; e < dh; ++e) acc += dci[e] * vj[e];
          da[j] = acc;
          if (a != S(0)) {
            S* dvj = dv.row(j) + off;
            for (int e = 0; e < dh; ++e) dvj[e] += a * dci[e];
          }
        }
        softmax_backward_span(arow, da.data(), ds.data(), n_kv);
        // dQ and dK from scores = QK^T * scale.
        S* dqi = dq.row(i) + off;
        const S* qi = c.q.row(i) + off;
        for (int j = 0; j < n_kv; ++j) {
          S g = ds[j] * scale;
          if (g == S(0)) continue;
          const S* kj = c.k.row(j) + off;
          S* dkj = dk.row(j) + off;
          for (int e = 0; e < dh; ++e) {
            dqi[e] += g * kj[e];
            dkj[e] += g * qi[e];
          }
        }
      }
    }
    Tensor<S> dq_in = q_proj.backward(c.qc, dq);
    Tensor<S> dkv_in = k_proj.backward(c.kc, dk);
    Tensor<S> dkv_in2 = v_proj.backward(c.vc, dv);
    for (std::size_t i = 0; i < dkv_in.v.size(); ++i) dkv_in.v[i] += dkv_in2.v[i];
    return {std::move(dq_in), std::move(dkv_in)};
  }

  void visit(const ParamVisitor<S>& f) {
    q_proj.visit(f);
    k_proj.visit(f);
    v_proj.visit(f);
    o_proj.visit(f);
  }
};

}  // namespace csgaze::nn
