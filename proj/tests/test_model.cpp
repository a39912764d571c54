#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "csgaze/model/checkpoint.hpp"
#include "csgaze/model/net.hpp"
#include "csgaze/train/loss.hpp"
#include "oracles.hpp"

using namespace csgaze;
using namespace csgaze::model;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.image_size = 32;
  c.pool_factor = 2;
  c.stem_kernel = 4;
  c.stem_channels = 4;
  c.stage1_channels = 6;
  c.stage2_channels = 8;
  c.d_face = 12;
  c.d_scene = 12;
  c.d_attn = 12;
  c.heads = 2;
  c.d_text = 8;
  c.text_buckets = 64;
  c.max_text_tokens = 8;
  c.decoder_channels1 = 6;
  c.decoder_channels2 = 4;
  c.face_cond_channels = 3;
  c.classifier_hidden = 10;
  return c;
}

template <typename S>
NetInput<S> random_input(const ModelConfig& cfg, Rng& rng) {
  NetInput<S> in;
  in.scene = nn::Tensor<S>({3, cfg.image_size, cfg.image_size});
  in.face_p = nn::Tensor<S>({3, cfg.image_size, cfg.image_size});
  in.face_a = nn::Tensor<S>({3, cfg.image_size, cfg.image_size});
  for (auto* t : {&in.scene, &in.face_p, &in.face_a})
    for (auto& v : t->v) v = static_cast<S>(rng.uniform());
  in.context_text = "the left person looks at the right person. the right person faces the left.";
  return in;
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "csgaze_model_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(ConfigTest, TokenGridAndJson) {
  ModelConfig def;
  EXPECT_EQ(def.token_grid(), 4);  // 224 -> 56 -> 14 -> 7 -> 4
  EXPECT_EQ(def.scene_tokens(), 16);
  EXPECT_EQ(def.n_outputs(), 5);
  def.mode = NetMode::kBinary;
  EXPECT_EQ(def.n_outputs(), 2);

  ModelConfig tiny = tiny_config();
  EXPECT_EQ(tiny.token_grid(), 1);

  nlohmann::json j = tiny;
  ModelConfig back = j.get<ModelConfig>();
  EXPECT_EQ(back.image_size, tiny.image_size);
  EXPECT_EQ(back.d_attn, tiny.d_attn);
  EXPECT_EQ(back.mode, tiny.mode);

  // Partial JSON keeps defaults for missing keys; unknown keys are an error.
  ModelConfig partial = nlohmann::json{{"heads", 8}}.get<ModelConfig>();
  EXPECT_EQ(partial.heads, 8);
  EXPECT_EQ(partial.image_size, 224);
  EXPECT_THROW(nlohmann::json({{"not_a_key", 1}}).get<ModelConfig>(), Error);

  ModelConfig bad = tiny;
  bad.image_size = 33;
  EXPECT_THROW(bad.validate(), Error);
  bad = tiny;
  bad.heads = 5;  // does not divide d_attn = 12... except it doesn't: 12 % 5 != 0
  EXPECT_THROW(bad.validate(), Error);
}

TEST(NetTest, ForwardShapesAndProbabilities) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(7);
  Rng rng(1);
  auto in = random_input<float>(cfg, rng);
  auto tr = net.forward(in, ModalityMask{}, nullptr);
  EXPECT_EQ(tr.logits.shape, (std::vector<int>{1, 5}));
  EXPECT_EQ(tr.f_merged.shape, (std::vector<int>{1, cfg.d_face}));
  EXPECT_EQ(tr.s_fused.shape, (std::vector<int>{1, cfg.d_attn}));
  EXPECT_EQ(tr.merged.shape, (std::vector<int>{1, cfg.d_attn}));
  double sum = 0;
  for (double p : tr.probs) {
    EXPECT_GT(p, 0.0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_NEAR(tr.merge_attention[0] + tr.merge_attention[1], 1.0, 1e-6);

  ModelConfig bcfg = cfg;
  bcfg.mode = NetMode::kBinary;
  CSGazeNet<float> bnet(bcfg);
  bnet.init(7);
  auto btr = bnet.forward(in, ModalityMask{}, nullptr);
  EXPECT_EQ(btr.logits.shape, (std::vector<int>{1, 2}));
}

TEST(NetTest, AlphaInvariants) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(3);
  Rng rng(2);
  auto in = random_input<float>(cfg, rng);

  // Fresh init: zero logits give exactly (0.5, 0.5).
  auto tr = net.forward(in, ModalityMask{}, nullptr);
  EXPECT_EQ(tr.alpha[0], 0.5);
  EXPECT_EQ(tr.alpha[1], 0.5);

  // Equal weights mean the fusion is the exact vector mean.
  typename CSGazeNet<float>::ClassifyCache cache;
  net.forward(in, ModalityMask{}, &cache);
  auto f_p = net.face_enc.forward(in.face_p, nullptr).global;
  auto f_a = net.face_enc.forward(in.face_a, nullptr).global;
  for (int e = 0; e < cfg.d_face; ++e)
    EXPECT_EQ(tr.f_merged.at(0, e), 0.5f * f_p.at(0, e) + 0.5f * f_a.at(0, e));

  // Learnable mode: softmax simplex after arbitrary logits.
  net.fuse.alpha_logits.value.v = {1.3f, -0.4f};
  auto w = net.fuse.weights();
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-6);
  EXPECT_GT(w[0], w[1]);
  // Frozen expected value: logits ln(4) apart give weights (0.8, 0.2).
  net.fuse.alpha_logits.value.v = {static_cast<float>(std::log(4.0)), 0.0f};
  w = net.fuse.weights();
  EXPECT_NEAR(w[0], 0.8, 1e-6);
  EXPECT_NEAR(w[1], 0.2, 1e-6);

  // Fixed-equal mode pins the weights regardless of the logits.
  ModelConfig fcfg = cfg;
  fcfg.fixed_equal_alpha = true;
  CSGazeNet<float> fnet(fcfg);
  fnet.init(3);
  fnet.fuse.alpha_logits.value.v = {5.0f, -5.0f};
  auto fw = fnet.fuse.weights();
  EXPECT_EQ(fw[0], 0.5f);
  EXPECT_EQ(fw[1], 0.5f);
  // ... and the logits receive no gradient.
  typename CSGazeNet<float>::ClassifyCache fc;
  auto ftr = fnet.forward(in, ModalityMask{}, &fc);
  nn::Tensor<float> dlogits({1, 5});
  dlogits.fill(0.3f);
  fnet.zero_grad();
  fnet.backward(fc, dlogits);
  EXPECT_EQ(fnet.fuse.alpha_logits.grad.at(0), 0.0f);
  EXPECT_EQ(fnet.fuse.alpha_logits.grad.at(1), 0.0f);
  (void)ftr;
}

TEST(NetTest, SeededInitIsBitwiseReproducible) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> a(cfg), b(cfg);
  a.init(42);
  b.init(42);
  Rng rng(5);
  auto in = random_input<float>(cfg, rng);
  auto ta = a.forward(in, ModalityMask{}, nullptr);
  auto tb = b.forward(in, ModalityMask{}, nullptr);
  EXPECT_EQ(ta.logits.v, tb.logits.v);  // bitwise

  CSGazeNet<float> c(cfg);
  c.init(43);
  auto tc = c.forward(in, ModalityMask{}, nullptr);
  EXPECT_NE(tc.logits.v, ta.logits.v);
}

TEST(NetTest, ModalityMasking) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(9);
  Rng rng(6);
  auto in = random_input<float>(cfg, rng);

  ModalityMask no_face{false, true, true};
  auto tr = net.forward(in, no_face, nullptr);
  for (float v : tr.f_merged.v) EXPECT_EQ(v, 0.0f);

  // With the face masked the face pixels must not influence the output.
  auto in2 = in;
  for (auto& v : in2.face_p.v) v = 0.123f;
  auto tr2 = net.forward(in2, no_face, nullptr);
  EXPECT_EQ(tr.logits.v, tr2.logits.v);
  // ... but they do when the face is on.
  auto on1 = net.forward(in, ModalityMask{}, nullptr);
  auto on2 = net.forward(in2, ModalityMask{}, nullptr);
  EXPECT_NE(on1.logits.v, on2.logits.v);

  // Scene and context masking likewise silence their inputs.
  ModalityMask no_scene{true, false, true};
  auto in3 = in;
  for (auto& v : in3.scene.v) v = 0.5f;
  EXPECT_EQ(net.forward(in, no_scene, nullptr).logits.v,
            net.forward(in3, no_scene, nullptr).logits.v);
  ModalityMask no_ctx{true, true, false};
  auto in4 = in;
  in4.context_text = "completely different words here";
  EXPECT_EQ(net.forward(in, no_ctx, nullptr).logits.v,
            net.forward(in4, no_ctx, nullptr).logits.v);

  ModalityMask none{false, false, false};
  EXPECT_THROW(net.forward(in, none, nullptr), Error);
}

TEST(NetTest, PrecomputedTextEmbeddingOverridesTokenizer) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(13);
  Rng rng(8);
  auto in = random_input<float>(cfg, rng);

  // Reproduce the tokenizer's embedding by hand and feed it precomputed:
  // the result must match the in-model text path exactly.
  auto rows = tokenize_to_buckets(in.context_text, cfg.text_buckets, cfg.max_text_tokens);
  auto emb = net.text_enc.emb.forward(rows, nullptr);
  auto in_pre = in;
  in_pre.text_embedding = emb;
  auto a = net.forward(in, ModalityMask{}, nullptr);
  auto b = net.forward(in_pre, ModalityMask{}, nullptr);
  EXPECT_EQ(a.logits.v, b.logits.v);

  // A different embedding changes the answer.
  for (auto& v : in_pre.text_embedding.v) v += 0.7f;
  auto c = net.forward(in_pre, ModalityMask{}, nullptr);
  EXPECT_NE(c.logits.v, a.logits.v);
}

TEST(TextEncoderTest, TokenizerProperties) {
  auto rows = tokenize_to_buckets("a b c", 64, 8);
  EXPECT_EQ(rows.size(), 3u);
  for (int r : rows) {
    EXPECT_GE(r, 0);
    EXPECT_LT(r, 64);
  }
  // Deterministic and whitespace-insensitive between tokens.
  EXPECT_EQ(tokenize_to_buckets("a  b \t c", 64, 8), rows);
  // Truncation to max_tokens.
  EXPECT_EQ(tokenize_to_buckets("w w w w w", 64, 3).size(), 3u);
  // Same word, same bucket.
  auto two = tokenize_to_buckets("person person", 64, 8);
  EXPECT_EQ(two[0], two[1]);
  EXPECT_THROW(tokenize_to_buckets("   ", 64, 8), Error);
}

TEST(GazeHeadTest, HeadMaskCoverage) {
  // Full-image box covers every cell completely.
  auto full = build_head_mask<float>({0.0, 0.0, 1.0, 1.0}, 4);
  EXPECT_EQ(full.shape, (std::vector<int>{1, 4, 4}));
  for (float v : full.v) EXPECT_NEAR(v, 1.0f, 1e-6);

  // A box inside the top-left cell hits only that cell, by its area fraction.
  auto corner = build_head_mask<float>({0.0, 0.0, 0.125, 0.125}, 4);
  EXPECT_NEAR(corner.at(0, 0, 0), 0.25f, 1e-6);  // half by half of the cell
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      if (x || y) EXPECT_EQ(corner.at(0, y, x), 0.0f);
}

TEST(GazeHeadTest, ForwardRangeAndBackward) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(21);
  Rng rng(10);
  auto in = random_input<float>(cfg, rng);
  auto head_mask = build_head_mask<float>({0.1, 0.1, 0.4, 0.4}, cfg.token_grid());

  typename CSGazeNet<float>::GazeCache cache;
  auto out = net.forward_gaze(in.scene, in.face_p, head_mask, &cache);
  EXPECT_EQ(out.shape, (std::vector<int>{1, kHeatmapSize, kHeatmapSize}));
  for (float v : out.v) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);  // sigmoid output
  }

  auto target = build_heatmap_target(0.3, 0.6);
  nn::Tensor<float> dpred;
  train::heatmap_mse(out, target, &dpred);
  net.zero_grad();
  net.backward_gaze(cache, dpred);
  double heat_gsum = 0, enc_gsum = 0;
  net.visit_phase1([&](nn::Param<float>& p) {
    double s = 0;
    for (float g : p.grad.v) s += std::abs(g);
    if (p.name.rfind("heat.", 0) == 0)
      heat_gsum += s;
    else
      enc_gsum += s;
  });
  EXPECT_GT(heat_gsum, 0.0);
  EXPECT_GT(enc_gsum, 0.0);
}

TEST(CheckpointTest, RoundTripIsBitwiseExact) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(33);
  auto dir = temp_dir();
  auto path = dir / "model.ckpt";
  save_checkpoint(net, path, "init", 0);

  auto data = load_checkpoint_data(path);
  EXPECT_EQ(data.phase, "init");
  EXPECT_EQ(data.step, 0);
  EXPECT_EQ(data.config.d_face, cfg.d_face);

  CSGazeNet<float> back(data.config);
  apply_checkpoint(back, data);
  // float32 payload and float32 params: the round trip is bitwise.
  std::vector<float> orig, loaded;
  net.visit_all([&](nn::Param<float>& p) { orig.insert(orig.end(), p.value.v.begin(), p.value.v.end()); });
  back.visit_all(
      [&](nn::Param<float>& p) { loaded.insert(loaded.end(), p.value.v.begin(), p.value.v.end()); });
  ASSERT_EQ(orig.size(), loaded.size());
  EXPECT_EQ(orig, loaded);

  Rng rng(3);
  auto in = random_input<float>(cfg, rng);
  EXPECT_EQ(net.forward(in, ModalityMask{}, nullptr).logits.v,
            back.forward(in, ModalityMask{}, nullptr).logits.v);
}

TEST(CheckpointTest, MismatchesAreNamedErrors) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> net(cfg);
  net.init(1);
  auto dir = temp_dir();
  auto path = dir / "mismatch.ckpt";
  save_checkpoint(net, path, "init", 0);
  auto data = load_checkpoint_data(path);

  // A model with a different width cannot load: error names the tensor.
  ModelConfig other = cfg;
  other.d_face = 16;
  CSGazeNet<float> wider(other);
  try {
    apply_checkpoint(wider, data);
    FAIL() << "expected shape mismatch";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("face_enc"), std::string::npos) << e.what();
  }

  // Missing tensor: drop one from the table.
  auto dropped = data;
  dropped.tensors.erase("cls.l2.b");
  try {
    apply_checkpoint(net, dropped);
    FAIL() << "expected missing tensor error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cls.l2.b"), std::string::npos) << e.what();
  }

  // Garbage file and truncated payload both fail cleanly.
  write_text_file(dir / "junk.ckpt", "not a checkpoint");
  EXPECT_THROW(load_checkpoint_data(dir / "junk.ckpt"), Error);
  auto full = read_text_file(path);
  write_text_file(dir / "trunc.ckpt", full.substr(0, full.size() / 2));
  EXPECT_THROW(load_checkpoint_data(dir / "trunc.ckpt"), Error);
}

TEST(CheckpointTest, EncoderHandoffLeavesHeadFresh) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<float> pretrained(cfg);
  pretrained.init(55);
  // Nudge every parameter so the pretrained weights are distinguishable.
  pretrained.visit_all([](nn::Param<float>& p) {
    for (auto& v : p.value.v) v += 0.25f;
  });
  auto data = snapshot(pretrained, "pretrain-complete", 10);

  CSGazeNet<float> fresh(cfg);
  fresh.init(56);
  CSGazeNet<float> reference(cfg);
  reference.init(56);
  int applied = apply_encoder_weights(fresh, data);
  EXPECT_GT(applied, 0);
  fresh.visit_all([&](nn::Param<float>& p) {
    if (fresh.is_encoder_param(p.name)) {
      EXPECT_EQ(p.value.v, data.tensors.at(p.name).second) << p.name;
    }
  });
  reference.visit_all([&](nn::Param<float>& rp) {
    if (reference.is_encoder_param(rp.name)) return;
    fresh.visit_all([&](nn::Param<float>& fp) {
      if (fp.name == rp.name) EXPECT_EQ(fp.value.v, rp.value.v) << rp.name;
    });
  });
}

TEST(NetGradTest, FullClassifyGraphMatchesFiniteDifferences) {
  for (std::uint64_t seed : {11ull, 12ull}) {
    ModelConfig cfg = tiny_config();
    CSGazeNet<double> net(cfg);
    net.init(seed);
    Rng rng(seed + 100);
    auto in = random_input<double>(cfg, rng);
    int label = 2;

    auto loss = [&]() {
      auto tr = net.forward(in, ModalityMask{}, nullptr);
      return train::categorical_ce(tr.logits, label, static_cast<nn::Tensor<double>*>(nullptr));
    };
    typename CSGazeNet<double>::ClassifyCache cache;
    auto tr = net.forward(in, ModalityMask{}, &cache);
    nn::Tensor<double> dlogits;
    train::categorical_ce(tr.logits, label, &dlogits);
    net.zero_grad();
    net.backward(cache, dlogits);

    auto params =
        oracle::collect_params([&](const nn::ParamVisitor<double>& f) { net.visit_phase2(f); });
    Rng pick(seed + 7);
    auto rep = oracle::finite_diff_report(loss, params, 2, 1e-5, pick);
    EXPECT_LT(rep.max_rel_err, 1e-4) << "seed " << seed << " worst " << rep.worst_param;
  }
}

TEST(NetGradTest, GazeGraphMatchesFiniteDifferences) {
  ModelConfig cfg = tiny_config();
  CSGazeNet<double> net(cfg);
  net.init(77);
  Rng rng(78);
  auto in = random_input<double>(cfg, rng);
  auto head_mask = build_head_mask<double>({0.2, 0.2, 0.5, 0.5}, cfg.token_grid());
  auto target = build_heatmap_target(0.7, 0.3);

  auto loss = [&]() {
    auto out = net.forward_gaze(in.scene, in.face_p, head_mask, nullptr);
    return train::heatmap_mse(out, target, static_cast<nn::Tensor<double>*>(nullptr));
  };
  typename CSGazeNet<double>::GazeCache cache;
  auto out = net.forward_gaze(in.scene, in.face_p, head_mask, &cache);
  nn::Tensor<double> dpred;
  train::heatmap_mse(out, target, &dpred);
  net.zero_grad();
  net.backward_gaze(cache, dpred);

  auto params =
      oracle::collect_params([&](const nn::ParamVisitor<double>& f) { net.visit_phase1(f); });
  Rng pick(79);
  auto rep = oracle::finite_diff_report(loss, params, 2, 1e-5, pick);
  EXPECT_LT(rep.max_rel_err, 1e-4) << rep.worst_param;
}
