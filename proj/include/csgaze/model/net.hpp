#pragma once

#include <array>
#include <string>
#include <vector>

#include "csgaze/model/config.hpp"
#include "csgaze/model/encoder.hpp"
#include "csgaze/model/fusion.hpp"
#include "csgaze/model/heatmap_head.hpp"
#include "csgaze/model/text_encoder.hpp"

namespace csgaze::model {

// Which input modalities the forward pass may use.  Disabled modalities are
// replaced by zero features of the same shape (their encoders are skipped
// entirely); at least one must stay enabled.
struct ModalityMask {
  bool face = true;
  bool scene = true;
  bool context = true;

  void validate() const {
    require(face || scene || context, "modality mask: all modalities disabled");
  }
  std::string tag() const {
    std::string s;
    if (face) s += "F";
    if (scene) s += s.empty() ? "S" : "+S";
    if (context) s += s.empty() ? "C" : "+C";
    return s;
  }
};

// One sample at the model boundary: rasters as float tensors in [0,1],
// plus the context string (or a precomputed text embedding).
template <typename S>
struct NetInput {
  nn::Tensor<S> scene;   // (3, H, W)
  nn::Tensor<S> face_p;  // (3, H, W) principal crop
  nn::Tensor<S> face_a;  // (3, H, W) associate crop
  std::string context_text;
  nn::Tensor<S> text_embedding;  // optional (n, d_text); overrides context_text
};

template <typename S>
struct ForwardTrace {
  nn::Tensor<S> logits;  // (1, n_outputs)
  std::vector<double> probs;
  nn::Tensor<S> f_merged;  // (1, d_face)
  nn::Tensor<S> s_fused;   // (1, d_attn)
  nn::Tensor<S> merged;    // (1, d_attn)
  std::array<double, 2> alpha{};             // face fusion weights (principal, associate)
  std::array<double, 2> merge_attention{};   // mass on [scene-context, face]
};

// The full context-aware social gaze model.  One face encoder is shared by
// both crops; gradients from the two calls accumulate into the same
// parameters.
template <typename S>
class CSGazeNet {
 public:
  using Tensor = nn::Tensor<S>;

  explicit CSGazeNet(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng dummy(0);
    build(dummy);
  }

  const ModelConfig& config() const { return cfg_; }

  void init(std::uint64_t seed) {
    Rng base(seed);
    build(base);
  }

  // ---- phase 2: social gaze classification ------------------------------

  struct ClassifyCache {
    typename ConvEncoder<S>::Cache face_p, face_a, scene;
    typename TextEncoder<S>::Cache text;
    typename FaceFuse<S>::Cache fuse;
    typename CrossAttend<S>::Cache cross;
    typename SelfAttendMerge<S>::Cache merge;
    typename Classifier<S>::Cache cls;
    ModalityMask mask;
    bool text_precomputed = false;
  };

  ForwardTrace<S> forward(const NetInput<S>& in, const ModalityMask& mask,
                          ClassifyCache* cache) const {
    mask.validate();
    ClassifyCache local;
    ClassifyCache& c = cache ? *cache : local;
    c.mask = mask;

    Tensor f_p({1, cfg_.d_face}), f_a({1, cfg_.d_face});
    if (mask.face) {
      f_p = face_enc.forward(in.face_p, cache ? &c.face_p : nullptr).global;
      f_a = face_enc.forward(in.face_a, cache ? &c.face_a : nullptr).global;
    }
    Tensor f_merged = fuse.forward(f_p, f_a, &c.fuse);

    int t_s = cfg_.scene_tokens();
    Tensor scene_tokens({t_s, cfg_.d_scene}), scene_global({1, cfg_.d_scene});
    if (mask.scene) {
      auto enc = scene_enc.forward(in.scene, cache ? &c.scene : nullptr);
      scene_tokens = std::move(enc.tokens);
      scene_global = std::move(enc.global);
    }

    Tensor text_tokens;
    std::vector<char> text_mask;
    c.text_precomputed = !in.text_embedding.empty();
    if (c.text_precomputed) {
      auto t = TextEncoder<S>::from_precomputed(in.text_embedding, cache ? &c.text : nullptr);
      text_tokens = std::move(t.tokens);
      text_mask = std::move(t.mask);
    } else if (mask.context) {
      auto t = text_enc.forward(in.context_text, cache ? &c.text : nullptr);
      text_tokens = std::move(t.tokens);
      text_mask = std::move(t.mask);
    } else {
      // Single zero token: carries no information but keeps the attention
      // shapes valid.
      text_tokens = Tensor({1, cfg_.d_text});
      text_mask.assign(1, 1);
    }
    if (!mask.context && c.text_precomputed) text_tokens.zero();

    Tensor s_fused = cross.forward(scene_tokens, scene_global, text_tokens, text_mask,
                                   cache ? &c.cross : nullptr);
    auto merged = merge.forward(s_fused, f_merged, &c.merge);

    ForwardTrace<S> tr;
    tr.logits = cls.forward(merged.merged, cache ? &c.cls : nullptr);
    tr.f_merged = std::move(f_merged);
    tr.s_fused = std::move(s_fused);
    tr.merged = std::move(merged.merged);
    tr.merge_attention = merged.attention;
    auto w = fuse.weights();
    tr.alpha = {static_cast<double>(w[0]), static_cast<double>(w[1])};
    tr.probs.resize(static_cast<std::size_t>(tr.logits.shape[1]));
    double mx = static_cast<double>(tr.logits.at(0, 0));
    for (int i = 1; i < tr.logits.shape[1]; ++i)
      mx = std::max(mx, static_cast<double>(tr.logits.at(0, i)));
    double sum = 0;
    for (int i = 0; i < tr.logits.shape[1]; ++i) {
      tr.probs[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(tr.logits.at(0, i)) - mx);
      sum += tr.probs[static_cast<std::size_t>(i)];
    }
    for (auto& p : tr.probs) p /= sum;
    return tr;
  }

  void backward(const ClassifyCache& c, const Tensor& dlogits) {
    Tensor d_merged = cls.backward(c.cls, dlogits);
    auto [d_s_fused, d_f_merged] = merge.backward(c.merge, d_merged);
    auto [d_fp, d_fa] = fuse.backward(c.fuse, d_f_merged);
    if (c.mask.face) {
      Tensor none;
      face_enc.backward(c.face_p, none, d_fp);
      face_enc.backward(c.face_a, none, d_fa);
    }
    auto [d_tokens, d_global, d_text] = cross.backward(c.cross, d_s_fused);
    if (c.mask.scene) scene_enc.backward(c.scene, d_tokens, d_global);
    if (c.mask.context && !c.text_precomputed) text_enc.backward(c.text, d_text);
  }

  // ---- phase 1: gaze-following heatmap -----------------------------------

  struct GazeCache {
    typename ConvEncoder<S>::Cache scene, face;
    typename HeatmapHead<S>::Cache head;
  };

  Tensor forward_gaze(const Tensor& scene, const Tensor& face, const Tensor& head_mask,
                      GazeCache* cache) const {
    auto enc = scene_enc.forward(scene, cache ? &cache->scene : nullptr);
    auto fenc = face_enc.forward(face, cache ? &cache->face : nullptr);
    return heat.forward(enc.tokens, fenc.global, head_mask, cache ? &cache->head : nullptr);
  }

  void backward_gaze(const GazeCache& c, const Tensor& d_heatmap) {
    auto [d_tokens, d_face] = heat.backward(c.head, d_heatmap);
    Tensor none;
    scene_enc.backward(c.scene, d_tokens, none);
    face_enc.backward(c.face, none, d_face);
  }

  // ---- parameter plumbing -------------------------------------------------

  void visit_all(const nn::ParamVisitor<S>& f) {
    face_enc.visit(f);
    scene_enc.visit(f);
    text_enc.visit(f);
    fuse.visit(f);
    cross.visit(f);
    merge.visit(f);
    cls.visit(f);
    heat.visit(f);
  }

  // Parameters touched by heatmap pretraining: both encoders + decoder.
  void visit_phase1(const nn::ParamVisitor<S>& f) {
    face_enc.visit(f);
    scene_enc.visit(f);
    heat.visit(f);
  }

  // Parameters in the classification graph (everything but the decoder).
  void visit_phase2(const nn::ParamVisitor<S>& f) {
    face_enc.visit(f);
    scene_enc.visit(f);
    text_enc.visit(f);
    fuse.visit(f);
    cross.visit(f);
    merge.visit(f);
    cls.visit(f);
  }

  void zero_grad() {
    visit_all([](nn::Param<S>& p) { p.grad.zero(); });
  }

  bool is_encoder_param(const std::string& name) const {
    return name.rfind("face_enc.", 0) == 0 || name.rfind("scene_enc.", 0) == 0;
  }

  void set_encoders_trainable(bool trainable) {
    visit_all([&](nn::Param<S>& p) {
      if (is_encoder_param(p.name)) p.trainable = trainable;
    });
  }

  ConvEncoder<S> face_enc;
  ConvEncoder<S> scene_enc;
  TextEncoder<S> text_enc;
  FaceFuse<S> fuse;
  CrossAttend<S> cross;
  SelfAttendMerge<S> merge;
  Classifier<S> cls;
  HeatmapHead<S> heat;

 private:
  void build(const Rng& base) {
    face_enc.init("face_enc", cfg_, cfg_.d_face, base);
    scene_enc.init("scene_enc", cfg_, cfg_.d_scene, base);
    text_enc.init("text_enc", cfg_, base);
    fuse.init("fuse", cfg_.fixed_equal_alpha);
    cross.init("cross", cfg_, base);
    merge.init("merge", cfg_, base);
    cls.init("cls", cfg_, base);
    heat.init("heat", cfg_, base);
  }

  ModelConfig cfg_;
};

}  // namespace csgaze::model
