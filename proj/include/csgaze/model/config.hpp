#pragma once

#include <string>

#include <json.hpp>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"

namespace csgaze::model {

enum class NetMode { kMulticlass, kBinary };

inline const char* to_string(NetMode m) {
  return m == NetMode::kMulticlass ? "multiclass" : "binary";
}

inline NetMode parse_net_mode(const std::string& s) {
  if (s == "multiclass") return NetMode::kMulticlass;
  if (s == "binary") return NetMode::kBinary;
  raise("unknown mode '" + s + "' (want multiclass or binary)");
}

// Architecture hyperparameters.  The same config drives both training
// phases; the checkpoint echoes it so weights can never silently load into
// a different architecture.
struct ModelConfig {
  int image_size = 224;      // scene and face crops are resized to this
  int pool_factor = 4;       // pre-pool before the conv stem
  int stem_kernel = 4;       // patchify kernel == stride after pooling
  int stem_channels = 12;
  int stage1_channels = 24;
  int stage2_channels = 48;

  int d_face = 256;   // face embedding dim
  int d_scene = 256;  // scene token/global dim
  int d_attn = 256;   // shared attention dim
  int heads = 4;

  int d_text = 64;          // token embedding dim
  int text_buckets = 512;   // hashed vocabulary size
  int max_text_tokens = 48;

  int decoder_channels1 = 24;  // gaze heatmap decoder
  int decoder_channels2 = 16;
  int face_cond_channels = 8;

  int classifier_hidden = 128;
  int n_classes = kNumGazeClasses;
  NetMode mode = NetMode::kMulticlass;
  bool fixed_equal_alpha = false;  // pin face fusion weights at (0.5, 0.5)

  int n_outputs() const { return mode == NetMode::kBinary ? 2 : n_classes; }

  // Token grid extent after stem and the two stride-2 stages.
  int token_grid() const {
    int g = image_size / pool_factor / stem_kernel;
    g = (g + 2 - 3) / 2 + 1;
    g = (g + 2 - 3) / 2 + 1;
    return g;
  }
  int scene_tokens() const { return token_grid() * token_grid(); }

  void validate() const {
    require(image_size > 0 && image_size % (pool_factor * stem_kernel) == 0,
            "config: image_size must be divisible by pool_factor * stem_kernel");
    require(token_grid() >= 1, "config: image too small for the encoder");
    require(heads > 0 && d_attn % heads == 0, "config: heads must divide d_attn");
    require(d_face > 0 && d_scene > 0 && d_text > 0, "config: dims must be positive");
    require(text_buckets > 0 && max_text_tokens > 0, "config: text settings must be positive");
    require(n_classes == kNumGazeClasses, "config: class count is fixed by the label set");
    require(classifier_hidden > 0, "config: classifier_hidden must be positive");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"pool_factor", c.pool_factor},
                     {"stem_kernel", c.stem_kernel},
                     {"stem_channels", c.stem_channels},
                     {"stage1_channels", c.stage1_channels},
                     {"stage2_channels", c.stage2_channels},
                     {"d_face", c.d_face},
                     {"d_scene", c.d_scene},
                     {"d_attn", c.d_attn},
                     {"heads", c.heads},
                     {"d_text", c.d_text},
                     {"text_buckets", c.text_buckets},
                     {"max_text_tokens", c.max_text_tokens},
                     {"decoder_channels1", c.decoder_channels1},
                     {"decoder_channels2", c.decoder_channels2},
                     {"face_cond_channels", c.face_cond_channels},
                     {"classifier_hidden", c.classifier_hidden},
                     {"n_classes", c.n_classes},
                     {"mode", std::string(to_string(c.mode))},
                     {"fixed_equal_alpha", c.fixed_equal_alpha}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig defaults;
  c = defaults;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "image_size") c.image_size = it.value().get<int>();
    else if (k == "pool_factor") c.pool_factor = it.value().get<int>();
    else if (k == "stem_kernel") c.stem_kernel = it.value().get<int>();
    else if (k == "stem_channels") c.stem_channels = it.value().get<int>();
    else if (k == "stage1_channels") c.stage1_channels = it.value().get<int>();
    else if (k == "stage2_channels") c.stage2_channels = it.value().get<int>();
    else if (k == "d_face") c.d_face = it.value().get<int>();
    else if (k == "d_scene") c.d_scene = it.value().get<int>();
    else if (k == "d_attn") c.d_attn = it.value().get<int>();
    else if (k == "heads") c.heads = it.value().get<int>();
    else if (k == "d_text") c.d_text = it.value().get<int>();
    else if (k == "text_buckets") c.text_buckets = it.value().get<int>();
    else if (k == "max_text_tokens") c.max_text_tokens = it.value().get<int>();
    else if (k == "decoder_channels1") c.decoder_channels1 = it.value().get<int>();
    else if (k == "decoder_channels2") c.decoder_channels2 = it.value().get<int>();
    else if (k == "face_cond_channels") c.face_cond_channels = it.value().get<int>();
    else if (k == "classifier_hidden") c.classifier_hidden = it.value().get<int>();
    else if (k == "n_classes") c.n_classes = it.value().get<int>();
    else if (k == "mode") c.mode = parse_net_mode(it.value().get<std::string>());
    else if (k == "fixed_equal_alpha") c.fixed_equal_alpha = it.value().get<bool>();
    else raise("unknown model config key: '" + k + "'");
  }
  c.validate();
}

}  // namespace csgaze::model
