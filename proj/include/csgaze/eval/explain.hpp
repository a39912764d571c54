#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgaze/eval/metrics.hpp"
#include "csgaze/model/net.hpp"
#include "csgaze/train/data.hpp"

namespace csgaze::eval {

// Per-class modality attention: the self-attention mass assigned to the
// scene-context token vs the face token in the two-token merge, averaged
// over heads, queries and all evaluation samples of the class.  Each row
// sums to 1 by construction.
struct AttentionSummary {
  std::vector<std::string> class_names;
  std::vector<std::array<double, 2>> rows;  // [scene_context, face] per class
  std::vector<long> counts;
};

template <typename S>
inline AttentionSummary attention_report(model::CSGazeNet<S>& net,
                                         const std::vector<train::ClassifyItem>& items,
                                         const model::ModalityMask& mask) {
  int n_out = net.config().n_outputs();
  AttentionSummary s;
  s.class_names = n_out == 2 ? binary_class_names() : gaze_class_names();
  s.rows.assign(static_cast<std::size_t>(n_out), {0.0, 0.0});
  s.counts.assign(static_cast<std::size_t>(n_out), 0);
  for (const auto& item : items) {
    require(item.label >= 0 && item.label < n_out, "attention report: label out of range");
    auto in = train::make_net_input<S>(item);
    auto tr = net.forward(in, mask, nullptr);
    auto c = static_cast<std::size_t>(item.label);
    s.rows[c][0] += tr.merge_attention[0];
    s.rows[c][1] += tr.merge_attention[1];
    s.counts[c]++;
  }
  for (std::size_t c = 0; c < s.rows.size(); ++c) {
    if (s.counts[c] > 0) {
      s.rows[c][0] /= static_cast<double>(s.counts[c]);
      s.rows[c][1] /= static_cast<double>(s.counts[c]);
    } else {
      s.rows[c] = {0.5, 0.5};  // no evidence either way
    }
  }
  return s;
}

inline void to_json(nlohmann::json& j, const AttentionSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < s.rows.size(); ++c) {
    rows.push_back({{"class", s.class_names[c]},
                    {"scene_context", s.rows[c][0]},
                    {"face", s.rows[c][1]},
                    {"count", s.counts[c]}});
  }
  j = nlohmann::json{{"rows", rows}};
}

inline void save_attention_summary(const AttentionSummary& s, const std::filesystem::path& path) {
  nlohmann::json j = s;
  write_text_file(path, j.dump(2) + "\n");
}

inline std::string render_attention_table(const AttentionSummary& s) {
  std::string out = "class\tscene_context\tface\tcount\n";
  for (std::size_t c = 0; c < s.rows.size(); ++c) {
    out += s.class_names[c];
    out += '\t';
    out += fmt_f64(s.rows[c][0]);
    out += '\t';
    out += fmt_f64(s.rows[c][1]);
    out += '\t';
    out += std::to_string(s.counts[c]);
    out += '\n';
  }
  return out;
}

}  // namespace csgaze::eval
