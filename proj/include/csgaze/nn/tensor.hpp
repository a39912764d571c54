#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "csgaze/common.hpp"
#include "csgaze/rng.hpp"

namespace csgaze::nn {

// Dense row-major tensor of up to 4 dimensions.  Deliberately minimal: all
// layer math lives in the layers themselves, operating on raw spans.
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> v;

  Tensor() = default;
  explicit Tensor(std::initializer_list<int> dims) : shape(dims) { allocate(); }
  explicit Tensor(const std::vector<int>& dims) : shape(dims) { allocate(); }

  void allocate() {
    std::size_t n = 1;
    for (int d : shape) {
      require(d > 0, "tensor: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    v.assign(n, S(0));
  }

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }
  int dim(std::size_t i) const { return shape[i]; }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  S& at(int i) { return v[static_cast<std::size_t>(i)]; }
  S at(int i) const { return v[static_cast<std::size_t>(i)]; }
  S& at(int i, int j) { return v[static_cast<std::size_t>(i) * shape[1] + j]; }
  S at(int i, int j) const { return v[static_cast<std::size_t>(i) * shape[1] + j]; }
  S& at(int i, int j, int k) {
    return v[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  S at(int i, int j, int k) const {
    return v[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  S& at(int i, int j, int k, int l) {
    return v[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  S at(int i, int j, int k, int l) const {
    return v[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  // Row pointer helpers for 2-d tensors (n rows of shape[1] entries).
  S* row(int i) { return v.data() + static_cast<std::size_t>(i) * shape[1]; }
  const S* row(int i) const { return v.data() + static_cast<std::size_t>(i) * shape[1]; }

  void zero() { std::fill(v.begin(), v.end(), S(0)); }
  void fill(S x) { std::fill(v.begin(), v.end(), x); }

  void fill_normal(Rng& rng, double mean, double stddev) {
    for (auto& x : v) x = static_cast<S>(rng.normal(mean, stddev));
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
    return out;
  }
};

// Named parameter with its gradient accumulator.
template <typename S>
struct Param {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool trainable = true;

  void init_shape(std::string n, std::initializer_list<int> dims) {
    name = std::move(n);
    value = Tensor<S>(dims);
    grad = Tensor<S>(dims);
  }

  // He-style fan-in scaled normal init from a name-keyed substream, so the
  // draw is independent of construction order.
  void init_random(const Rng& base, double scale_over_fan_in) {
    Rng r = base.fork("param:" + name);
    int fan_in = 1;
    for (std::size_t i = 1; i < value.shape.size(); ++i) fan_in *= value.shape[i];
    if (value.shape.size() == 1) fan_in = value.shape[0];
    double stddev = std::sqrt(scale_over_fan_in / fan_in);
    value.fill_normal(r, 0.0, stddev);
  }

  void init_zero(std::string n, std::initializer_list<int> dims) {
    init_shape(std::move(n), dims);
  }
};

// Visitor over all parameters of a component; used by the optimizer,
// checkpointing, zero_grad and the finite-difference harness alike.
template <typename S>
using ParamVisitor = std::function<void(Param<S>&)>;

}  // namespace csgaze::nn
