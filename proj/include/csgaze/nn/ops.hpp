#pragma once

#include <cmath>
#include <limits>

#include "csgaze/nn/tensor.hpp"

namespace csgaze::nn {

// Exact GELU (erf form).  Chosen over ReLU everywhere: it is smooth, so
// finite-difference gradient checks are not tripped up by kinks.
template <typename S>
inline S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(0.7071067811865475244)));
}

template <typename S>
inline S gelu_grad(S x) {
  S cdf = S(0.5) * (S(1) + std::erf(x * S(0.7071067811865475244)));
  S pdf = S(0.3989422804014326779) * std::exp(S(-0.5) * x * x);
  return cdf + x * pdf;
}

template <typename S>
inline void gelu_forward(Tensor<S>& t) {
  for (auto& x : t.v) x = gelu(x);
}

// In-place gradient through an elementwise GELU given the pre-activation.
template <typename S>
inline void gelu_backward(const Tensor<S>& pre, Tensor<S>& grad) {
  for (std::size_t i = 0; i < grad.v.size(); ++i) grad.v[i] *= gelu_grad(pre.v[i]);
}

template <typename S>
inline S sigmoid(S x) {
  if (x >= 0) {
    S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  S e = std::exp(x);
  return e / (S(1) + e);
}

// Numerically stable softmax over a contiguous span; entries equal to
// -infinity come out as exact zeros.  All-masked rows are a caller bug.
template <typename S>
inline void softmax_span(S* x, int n) {
  S mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  require(mx != -std::numeric_limits<S>::infinity(), "softmax: all entries masked");
  S sum = 0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
}

// Gradient of y = softmax(x) given y and dL/dy, written into dx (may alias
// dy): dx_i = y_i * (dy_i - sum_j dy_j y_j).
template <typename S>
inline void softmax_backward_span(const S* y, const S* dy, S* dx, int n) {
  S dot = 0;
  for (int i = 0; i < n; ++i) dot += dy[i] * y[i];
  for (int i = 0; i < n; ++i) dx[i] = y[i] * (dy[i] - dot);
}

}  // namespace csgaze::nn
