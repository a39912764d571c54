#pragma once

#include <cmath>

#include "csgaze/core/heatmap.hpp"
#include "csgaze/nn/tensor.hpp"

namespace csgaze::train {

inline constexpr double kProbFloor = 1e-12;  // clamp inside every log()

// Softmax cross-entropy over a (1, n) logit row.  Returns the loss and
// writes dL/dlogits.  The binary mode is the n == 2 special case: the
// positive-class probability is softmax(logits)[1] and the loss equals the
// binary cross-entropy against it.
template <typename S>
inline double categorical_ce(const nn::Tensor<S>& logits, int label, nn::Tensor<S>* dlogits) {
  int n = logits.shape[1];
  require(label >= 0 && label < n, "loss: label out of range");
  double mx = static_cast<double>(logits.at(0, 0));
  for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits.at(0, i)));
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += std::exp(static_cast<double>(logits.at(0, i)) - mx);
  double log_p = static_cast<double>(logits.at(0, label)) - mx - std::log(sum);
  double p = std::exp(log_p);
  double loss = -std::log(std::max(p, kProbFloor));
  if (dlogits) {
    *dlogits = nn::Tensor<S>({1, n});
    for (int i = 0; i < n; ++i) {
      double pi = std::exp(static_cast<double>(logits.at(0, i)) - mx) / sum;
      dlogits->at(0, i) = static_cast<S>(pi - (i == label ? 1.0 : 0.0));
    }
  }
  return loss;
}

// Binary cross-entropy on a probability (used on softmax(logits)[1] in the
// two-class mode and directly testable against the closed forms).
inline double binary_ce(double p, int label) {
  require(label == 0 || label == 1, "loss: binary label must be 0 or 1");
  p = std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Mean squared error between a predicted (1, 64, 64) map (index [0][y][x])
// and a heatmap target (addressed as value(x_cell, y_cell)).
template <typename S>
inline double heatmap_mse(const nn::Tensor<S>& pred, const HeatmapTarget& target,
                          nn::Tensor<S>* dpred) {
  require(pred.shape.size() == 3 && pred.shape[0] == 1 && pred.shape[1] == kHeatmapSize &&
              pred.shape[2] == kHeatmapSize,
          "loss: heatmap shape mismatch");
  double total = 0;
  if (dpred) *dpred = nn::Tensor<S>({1, kHeatmapSize, kHeatmapSize});
  double inv = 1.0 / (kHeatmapSize * kHeatmapSize);
  for (int y = 0; y < kHeatmapSize; ++y)
    for (int x = 0; x < kHeatmapSize; ++x) {
      double diff = static_cast<double>(pred.at(0, y, x)) - target.value(x, y);
      total += diff * diff;
      if (dpred) dpred->at(0, y, x) = static_cast<S>(2.0 * diff * inv);
    }
  return total * inv;
}

// Argmax of a predicted map in heatmap cell coordinates (x_cell, y_cell).
template <typename S>
inline std::pair<int, int> heatmap_argmax(const nn::Tensor<S>& pred) {
  int bx = 0, by = 0;
  S best = pred.at(0, 0, 0);
  for (int y = 0; y < kHeatmapSize; ++y)
    for (int x = 0; x < kHeatmapSize; ++x)
      if (pred.at(0, y, x) > best) {
        best = pred.at(0, y, x);
        bx = x;
        by = y;
      }
  return {bx, by};
}

}  // namespace csgaze::train
