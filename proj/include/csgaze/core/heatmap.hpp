#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "csgaze/common.hpp"

namespace csgaze {

inline constexpr int kHeatmapSize = 64;

// Gaze-following training target: an unnormalized Gaussian bump on a 64x64
// grid.  Cell (r, c) covers x ~ r/63, y ~ c/63 in normalized image
// coordinates; the peak cell holds exactly 1.0.
struct HeatmapTarget {
  int peak_r = 0;
  int peak_c = 0;
  double sigma = 3.0;  // in grid cells
  std::vector<double> grid;  // row-major, grid[r * 64 + c]

  double value(int r, int c) const { return grid[static_cast<std::size_t>(r) * kHeatmapSize + c]; }

  std::pair<int, int> argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] > grid[best]) best = i;
    return {static_cast<int>(best) / kHeatmapSize, static_cast<int>(best) % kHeatmapSize};
  }
};

inline HeatmapTarget build_heatmap_target(double gaze_x, double gaze_y, double sigma = 3.0) {
  require(gaze_x >= 0 && gaze_x <= 1 && gaze_y >= 0 && gaze_y <= 1,
          "heatmap target: gaze point outside the [0,1] canvas");
  require(sigma > 0, "heatmap target: sigma must be positive");
  HeatmapTarget t;
  t.peak_r = static_cast<int>(std::lround(gaze_x * (kHeatmapSize - 1)));
  t.peak_c = static_cast<int>(std::lround(gaze_y * (kHeatmapSize - 1)));
  t.sigma = sigma;
  t.grid.resize(static_cast<std::size_t>(kHeatmapSize) * kHeatmapSize);
  double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < kHeatmapSize; ++r) {
    for (int c = 0; c < kHeatmapSize; ++c) {
      double dr = r - t.peak_r, dc = c - t.peak_c;
      t.grid[static_cast<std::size_t>(r) * kHeatmapSize + c] = std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
  return t;
}

}  // namespace csgaze
