#pragma once

#include <string>
#include <vector>

#include "csgaze/nn/tensor.hpp"

namespace csgaze::nn {

// Token embedding table addressed by hash bucket (fixed open vocabulary).
template <typename S>
struct Embedding {
  Param<S> table;  // (buckets, dim)

  struct Cache {
    std::vector<int> rows;
  };

  void init(const std::string& name, int buckets, int dim, const Rng& rng) {
    table.init_shape(name + ".table", {buckets, dim});
    Rng r = rng.fork("param:" + table.name);
    table.value.fill_normal(r, 0.0, 0.5);
  }

  int dim() const { return table.value.shape[1]; }
  int buckets() const { return table.value.shape[0]; }

  Tensor<S> forward(const std::vector<int>& rows, Cache* cache) const {
    int n = static_cast<int>(rows.size()), d = dim();
    Tensor<S> y({n, d});
    for (int i = 0; i < n; ++i) {
      require(rows[i] >= 0 && rows[i] < buckets(), "embedding: row out of range");
      const S* src = table.value.row(rows[i]);
      S* dst = y.row(i);
      for (int e = 0; e < d; ++e) dst[e] = src[e];
    }
    if (cache) cache->rows = rows;
    return y;
  }

  void backward(const Cache& cache, const Tensor<S>& dy) {
    int d = dim();
    for (std::size_t i = 0; i < cache.rows.size(); ++i) {
      S* g = table.grad.row(cache.rows[i]);
      const S* src = dy.row(static_cast<int>(i));
      for (int e = 0; e < d; ++e) g[e] += src[e];
    }
  }

  void visit(const ParamVisitor<S>& f) { f(table); }
};

}  // namespace csgaze::nn
