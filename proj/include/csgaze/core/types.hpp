#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csgaze/common.hpp"

namespace csgaze {

// Social gaze pattern between a principal person and an associate person.
// The integer encoding is stable and is used in manifests, metrics and
// model targets alike.
enum class GazeClass : int {
  kShare = 0,   // both look at the same third point/object
  kMutual = 1,  // they look at each other
  kSingle = 2,  // principal looks at associate, not returned
  kMiss = 3,    // associate looks at principal, not returned
  kVoid = 4,    // no social gaze relation
};

inline constexpr int kNumGazeClasses = 5;

inline constexpr std::array<const char*, kNumGazeClasses> kGazeClassNames = {
    "share", "mutual", "single", "miss", "void"};

inline const char* to_string(GazeClass c) {
  int i = static_cast<int>(c);
  require(i >= 0 && i < kNumGazeClasses, "gaze class out of range");
  return kGazeClassNames[static_cast<std::size_t>(i)];
}

inline GazeClass parse_gaze_class(std::string_view tag) {
  for (int i = 0; i < kNumGazeClasses; ++i)
    if (tag == kGazeClassNames[static_cast<std::size_t>(i)]) return static_cast<GazeClass>(i);
  raise("unknown gaze class tag: '" + std::string(tag) + "'");
}

// Atomic gaze cues between the two people (plus optional third parties).
struct PairLabel {
  bool lah_p_to_a = false;  // principal's gaze lands on associate's head box
  bool lah_a_to_p = false;  // associate's gaze lands on principal's head box
  bool laeo = false;        // both of the above: looking at each other
  bool sa = false;          // shared attention on a third region (never with laeo)

  void validate() const {
    if (laeo && !(lah_p_to_a && lah_a_to_p))
      raise("pair label invalid: laeo requires both looking-at-head flags");
    if (sa && laeo) raise("pair label invalid: sa and laeo are mutually exclusive");
  }
};

// Axis-aligned box in normalized image coordinates, origin top-left.
struct HeadBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  void validate(const std::string& what) const {
    if (!(x0 < x1) || !(y0 < y1)) raise(what + ": head box must have positive extent");
    if (x0 < 0 || y0 < 0 || x1 > 1 || y1 > 1)
      raise(what + ": head box exceeds the [0,1] canvas");
  }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
};

// One labelled two-person scene.  Person order in the manifest is
// meaningful: the first box belongs to the principal.
struct DyadSample {
  std::string id;
  std::string image_path;       // relative to the manifest's directory
  HeadBox principal;
  HeadBox associate;
  GazeClass label = GazeClass::kVoid;
  int binary_label = -1;        // 1 = laeo, 0 = not; -1 when absent

  void validate() const {
    require(!id.empty(), "dyad sample: empty id");
    require(!image_path.empty(), "dyad sample " + id + ": empty image path");
    principal.validate("dyad sample " + id + " (principal)");
    associate.validate("dyad sample " + id + " (associate)");
    if (binary_label < -1 || binary_label > 1)
      raise("dyad sample " + id + ": binary label must be 0, 1 or absent");
  }
};

// One gaze-following instance: whose gaze, and where it lands.
struct GazeFollowSample {
  std::string id;
  std::string image_path;
  HeadBox head;
  double gaze_x = 0, gaze_y = 0;  // normalized target point

  void validate() const {
    require(!id.empty(), "gazefollow sample: empty id");
    require(!image_path.empty(), "gazefollow sample " + id + ": empty image path");
    head.validate("gazefollow sample " + id);
    if (gaze_x < 0 || gaze_x > 1 || gaze_y < 0 || gaze_y > 1)
      raise("gazefollow sample " + id + ": gaze point outside the [0,1] canvas");
  }
};

// Model output for one sample, written to prediction files and consumed by
// every metric routine.
struct PredictionRecord {
  std::string id;
  int true_label = 0;
  int predicted = 0;
  std::vector<double> probabilities;

  void validate() const {
    require(!probabilities.empty(), "prediction " + id + ": no probabilities");
    double sum = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      double p = probabilities[i];
      if (!(p >= 0)) raise("prediction " + id + ": negative probability");
      sum += p;
      if (p > probabilities[arg]) arg = i;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      raise("prediction " + id + ": probabilities sum to " + fmt_f64(sum));
    if (static_cast<std::size_t>(predicted) != arg)
      raise("prediction " + id + ": predicted class is not the argmax");
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= probabilities.size())
      raise("prediction " + id + ": true label out of range");
  }
};

}  // namespace csgaze
