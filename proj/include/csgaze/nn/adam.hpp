#pragma once

#include <cmath>
#include <vector>

#include "csgaze/nn/tensor.hpp"

namespace csgaze::nn {

// Adam with bias correction.  Moment buffers are keyed by registration
// order, which the caller must keep stable across steps.
template <typename S>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update over all parameters produced by `visit_all`, which must call
  // its argument once per parameter, in a fixed order.
  template <typename VisitAll>
  void step(VisitAll&& visit_all) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    std::size_t idx = 0;
    visit_all([&](Param<S>& p) {
      if (idx == m_.size()) {
        m_.emplace_back(p.value.shape);
        v_.emplace_back(p.value.shape);
      }
      require(idx < m_.size() && m_[idx].same_shape(p.value), "adam: parameter order changed");
      if (p.trainable) {
        Tensor<S>& m = m_[idx];
        Tensor<S>& v = v_[idx];
        for (std::size_t i = 0; i < p.value.v.size(); ++i) {
          S g = p.grad.v[i];
          m.v[i] = static_cast<S>(beta1_) * m.v[i] + static_cast<S>(1.0 - beta1_) * g;
          v.v[i] = static_cast<S>(beta2_) * v.v[i] + static_cast<S>(1.0 - beta2_) * g * g;
          S mhat = m.v[i] / static_cast<S>(bc1);
          S vhat = v.v[i] / static_cast<S>(bc2);
          p.value.v[i] -= static_cast<S>(lr_) * mhat / (std::sqrt(vhat) + static_cast<S>(eps_));
        }
      }
      ++idx;
    });
  }

  long steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor<S>> m_;
  std::vector<Tensor<S>> v_;
};

}  // namespace csgaze::nn
