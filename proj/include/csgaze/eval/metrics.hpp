#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"

namespace csgaze::eval {

struct ClassScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long support = 0;  // true instances of the class
};

struct MetricsReport {
  int n_classes = 0;
  long n_samples = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  std::vector<std::string> class_names;
  std::vector<ClassScore> per_class;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
};

inline std::vector<std::vector<long>> confusion_matrix(const std::vector<PredictionRecord>& preds,
                                                       int n_classes) {
  std::vector<std::vector<long>> m(static_cast<std::size_t>(n_classes),
                                   std::vector<long>(static_cast<std::size_t>(n_classes), 0));
  for (const auto& p : preds) {
    require(p.true_label >= 0 && p.true_label < n_classes, "confusion: true label out of range");
    require(p.predicted >= 0 && p.predicted < n_classes, "confusion: prediction out of range");
    m[static_cast<std::size_t>(p.true_label)][static_cast<std::size_t>(p.predicted)]++;
  }
  return m;
}

// Per-class precision/recall/F1 from a confusion matrix.  Degenerate
// denominators yield zero rather than NaN.
inline std::vector<ClassScore> f1_per_class(const std::vector<std::vector<long>>& confusion) {
  int n = static_cast<int>(confusion.size());
  std::vector<ClassScore> out(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    long tp = confusion[c][c];
    long fp = 0, fn = 0;
    for (int o = 0; o < n; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    ClassScore& s = out[static_cast<std::size_t>(c)];
    s.support = tp + fn;
    s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                        : 0.0;
  }
  return out;
}

inline double accuracy(const std::vector<std::vector<long>>& confusion) {
  long correct = 0, total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i)
    for (std::size_t j = 0; j < confusion.size(); ++j) {
      total += confusion[i][j];
      if (i == j) correct += confusion[i][j];
    }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

inline double macro_f1(const std::vector<ClassScore>& scores) {
  double sum = 0;
  for (const auto& s : scores) sum += s.f1;
  return scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
}

inline MetricsReport build_report(const std::vector<PredictionRecord>& preds,
                                  const std::vector<std::string>& class_names) {
  int n = static_cast<int>(class_names.size());
  MetricsReport r;
  r.n_classes = n;
  r.n_samples = static_cast<long>(preds.size());
  r.class_names = class_names;
  r.confusion = confusion_matrix(preds, n);
  r.per_class = f1_per_class(r.confusion);
  r.accuracy = accuracy(r.confusion);
  r.macro_f1 = macro_f1(r.per_class);
  return r;
}

inline std::vector<std::string> gaze_class_names() {
  return {kGazeClassNames.begin(), kGazeClassNames.end()};
}

inline std::vector<std::string> binary_class_names() { return {"not_laeo", "laeo"}; }

// Average precision: rank by descending score (ties keep input order), then
// sum precision-at-k weighted by recall increments (1/P per positive).
inline double average_precision(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "average_precision: length mismatch");
  require(!scores.empty(), "average_precision: empty input");
  long positives = 0;
  for (int l : labels) {
    require(l == 0 || l == 1, "average_precision: labels must be 0/1");
    positives += l;
  }
  require(positives > 0, "average_precision: no positive labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0;
  long hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] == 1) {
      ++hits;
      double precision_at_k = static_cast<double>(hits) / static_cast<double>(k + 1);
      ap += precision_at_k / static_cast<double>(positives);
    }
  }
  return ap;
}

struct ApRunsResult {
  double mean = 0;
  double stddev = 0;  // population
  std::vector<double> values;
};

// Repeats an AP evaluation under varied seeds (e.g. evaluation subsamples)
// and reports mean and spread.
inline ApRunsResult ap_over_runs(const std::function<double(std::uint64_t)>& run,
                                 int n_runs, std::uint64_t base_seed) {
  require(n_runs > 0, "ap_over_runs: need at least one run");
  ApRunsResult r;
  r.values.reserve(static_cast<std::size_t>(n_runs));
  for (int i = 0; i < n_runs; ++i) r.values.push_back(run(base_seed + static_cast<std::uint64_t>(i)));
  double sum = 0;
  for (double v : r.values) sum += v;
  r.mean = sum / n_runs;
  double sq = 0;
  for (double v : r.values) sq += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(sq / n_runs);
  return r;
}

// --- serialization ---------------------------------------------------------

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    per_class.push_back({{"class", r.class_names[c]},
                         {"precision", r.per_class[c].precision},
                         {"recall", r.per_class[c].recall},
                         {"f1", r.per_class[c].f1},
                         {"support", r.per_class[c].support}});
  }
  j = nlohmann::json{{"n_classes", r.n_classes}, {"n_samples", r.n_samples},
                     {"accuracy", r.accuracy},  {"macro_f1", r.macro_f1},
                     {"per_class", per_class},  {"confusion", r.confusion},
                     {"class_names", r.class_names}};
}

inline void save_metrics_report(const MetricsReport& r, const std::filesystem::path& path) {
  nlohmann::json j = r;
  write_text_file(path, j.dump(2) + "\n");
}

inline std::string render_report_table(const MetricsReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %10s %10s %10s %10s\n", "class", "precision", "recall",
                "f1", "support");
  out += buf;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    std::snprintf(buf, sizeof(buf), "%-10s %10.4f %10.4f %10.4f %10ld\n", r.class_names[c].c_str(),
                  r.per_class[c].precision, r.per_class[c].recall, r.per_class[c].f1,
                  r.per_class[c].support);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "accuracy %.4f  macro_f1 %.4f  n %ld\n", r.accuracy, r.macro_f1,
                r.n_samples);
  out += buf;
  return out;
}

}  // namespace csgaze::eval
