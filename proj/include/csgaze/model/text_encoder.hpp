#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "csgaze/model/config.hpp"
#include "csgaze/nn/embedding.hpp"

namespace csgaze::model {

// Whitespace tokenization into hash buckets.  Truncation keeps the leading
// tokens, which is why context text puts its relation clauses first.
inline std::vector<int> tokenize_to_buckets(const std::string& text, int buckets, int max_tokens) {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size() && static_cast<int>(ids.size()) < max_tokens) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start)
      ids.push_back(static_cast<int>(fnv1a64(std::string_view(text).substr(start, i - start)) %
                                     static_cast<std::uint64_t>(buckets)));
  }
  require(!ids.empty(), "text encoder: empty context text");
  return ids;
}

// Token embeddings for one context string.  Also accepts precomputed
// embeddings, which is the hook for plugging in an external text model.
template <typename S>
struct TextEncoder {
  nn::Embedding<S> emb;
  int max_tokens = 48;

  struct Cache {
    typename nn::Embedding<S>::Cache ec;
    bool from_embedding = true;
  };

  struct Output {
    Tensor<S> tokens;        // (n, d_text)
    std::vector<char> mask;  // all true; kept explicit for the attention op
  };

  void init(const std::string& name, const ModelConfig& cfg, const Rng& rng) {
    max_tokens = cfg.max_text_tokens;
    emb.init(name + ".emb", cfg.text_buckets, cfg.d_text, rng);
  }

  Output forward(const std::string& text, Cache* cache) const {
    auto ids = tokenize_to_buckets(text, emb.buckets(), max_tokens);
    Output out;
    out.tokens = emb.forward(ids, cache ? &cache->ec : nullptr);
    out.mask.assign(ids.size(), 1);
    if (cache) cache->from_embedding = true;
    return out;
  }

  static Output from_precomputed(Tensor<S> tokens, Cache* cache) {
    require(tokens.shape.size() == 2 && tokens.shape[0] > 0, "text encoder: bad precomputed shape");
    Output out;
    out.mask.assign(static_cast<std::size_t>(tokens.shape[0]), 1);
    out.tokens = std::move(tokens);
    if (cache) cache->from_embedding = false;
    return out;
  }

  void backward(const Cache& cache, const Tensor<S>& d_tokens) {
    if (cache.from_embedding) emb.backward(cache.ec, d_tokens);
  }

  void visit(const nn::ParamVisitor<S>& f) { emb.visit(f); }
};

}  // namespace csgaze::model
