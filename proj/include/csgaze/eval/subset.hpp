#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "csgaze/eval/metrics.hpp"

namespace csgaze::eval {

// Re-scores stored 5-way predictions under a class subset: samples whose
// true label is outside the subset are dropped, probabilities are
// renormalized over the subset (equivalent to softmax over the subset's
// logits), and the prediction is re-taken as the renormalized argmax.
inline MetricsReport class_subset_eval(const std::vector<PredictionRecord>& preds,
                                       const std::vector<int>& subset,
                                       const std::vector<std::string>& all_names) {
  require(!subset.empty(), "subset eval: empty subset");
  std::vector<int> classes = subset;
  std::sort(classes.begin(), classes.end());
  require(std::adjacent_find(classes.begin(), classes.end()) == classes.end(),
          "subset eval: duplicate class in subset");
  for (int c : classes)
    require(c >= 0 && c < static_cast<int>(all_names.size()), "subset eval: class out of range");

  std::map<int, int> remap;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    remap[classes[i]] = static_cast<int>(i);
    names.push_back(all_names[static_cast<std::size_t>(classes[i])]);
  }

  std::vector<PredictionRecord> sub;
  for (const auto& p : preds) {
    auto it = remap.find(p.true_label);
    if (it == remap.end()) continue;
    PredictionRecord q;
    q.id = p.id;
    q.true_label = it->second;
    q.probabilities.resize(classes.size());
    double sum = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      q.probabilities[i] = p.probabilities[static_cast<std::size_t>(classes[i])];
      sum += q.probabilities[i];
    }
    if (sum < 1e-300) {
      // No mass on the subset at all: fall back to uniform.
      for (auto& v : q.probabilities) v = 1.0 / static_cast<double>(classes.size());
    } else {
      for (auto& v : q.probabilities) v /= sum;
    }
    q.predicted = 0;
    for (std::size_t i = 1; i < q.probabilities.size(); ++i)
      if (q.probabilities[i] > q.probabilities[static_cast<std::size_t>(q.predicted)])
        q.predicted = static_cast<int>(i);
    q.validate();
    sub.push_back(std::move(q));
  }
  return build_report(sub, names);
}

// Named class-subset presets over the five gaze classes.
inline const std::map<std::string, std::vector<int>>& subset_presets() {
  static const std::map<std::string, std::vector<int>> presets = {
      {"full", {0, 1, 2, 3, 4}},
      {"pair-miss-single", {2, 3}},
      {"pair-mutual-share", {0, 1}},
      {"triple-mutual-share-void", {0, 1, 4}},
      {"triple-miss-void-single", {2, 3, 4}},
      {"quad-miss-mutual-void-single", {1, 2, 3, 4}},
      {"quad-mutual-share-void-single", {0, 1, 2, 4}},
  };
  return presets;
}

inline std::vector<int> lookup_subset_preset(const std::string& name) {
  auto it = subset_presets().find(name);
  if (it == subset_presets().end()) {
    std::string known;
    for (const auto& [k, v] : subset_presets()) known += (known.empty() ? "" : ", ") + k;
    raise("unknown subset preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

}  // namespace csgaze::eval
