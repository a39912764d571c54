#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"

namespace csgaze::eval {

// Prediction files: id, true label, predicted label, then one probability
// column per class.  Canonical shortest round-trip numbers throughout.
inline void save_predictions(const std::vector<PredictionRecord>& preds,
                             const std::filesystem::path& path) {
  require(!preds.empty(), "save_predictions: nothing to write");
  std::size_t n = preds[0].probabilities.size();
  std::string text = "id\ttrue\tpredicted";
  for (std::size_t i = 0; i < n; ++i) text += "\tp" + std::to_string(i);
  text += '\n';
  for (const auto& p : preds) {
    p.validate();
    require(p.probabilities.size() == n, "save_predictions: inconsistent class count");
    text += escape_field(p.id);
    text += '\t';
    text += std::to_string(p.true_label);
    text += '\t';
    text += std::to_string(p.predicted);
    for (double v : p.probabilities) {
      text += '\t';
      text += fmt_f64(v);
    }
    text += '\n';
  }
  write_text_file(path, text);
}

inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  require(lines.size() >= 2, "predictions file is empty: " + path.string());
  auto header = split_tabs(lines[0]);
  require(header.size() > 3 && header[0] == "id" && header[1] == "true" &&
              header[2] == "predicted",
          "bad predictions header: " + path.string());
  std::size_t n = header.size() - 3;
  std::vector<PredictionRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string at = path.string() + ":" + std::to_string(i + 1);
    auto f = split_tabs(lines[i]);
    if (f.size() != header.size()) raise("malformed predictions line at " + at);
    PredictionRecord p;
    p.id = unescape_field(f[0], "id at " + at);
    p.true_label = static_cast<int>(parse_i64(f[1], "true at " + at));
    p.predicted = static_cast<int>(parse_i64(f[2], "predicted at " + at));
    p.probabilities.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      p.probabilities[k] = parse_f64(f[3 + k], "probability at " + at);
    try {
      p.validate();
    } catch (const Error& e) {
      raise(std::string(e.what()) + " (at " + at + ")");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace csgaze::eval
