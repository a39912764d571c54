#pragma once

#include <functional>
#include <string>
#include <vector>

#include "csgaze/eval/metrics.hpp"
#include "csgaze/model/net.hpp"

namespace csgaze::eval {

// The seven modality combinations, weakest first.
inline std::vector<model::ModalityMask> ablation_combos() {
  using M = model::ModalityMask;
  return {
      M{false, true, false},  // S
      M{false, false, true},  // C
      M{false, true, true},   // S+C
      M{true, false, false},  // F
      M{true, true, false},   // F+S
      M{true, false, true},   // F+C
      M{true, true, true},    // F+S+C
  };
}

struct AblationRow {
  std::string combo;
  double macro_f1 = 0;
  double accuracy = 0;
};

// Runs train+eval per modality combination via the supplied callback (which
// owns the training budget) and assembles the comparison table.
inline std::vector<AblationRow> ablation_matrix(
    const std::vector<model::ModalityMask>& combos,
    const std::function<MetricsReport(const model::ModalityMask&)>& train_and_eval) {
  std::vector<AblationRow> rows;
  for (const auto& m : combos) {
    m.validate();
    MetricsReport r = train_and_eval(m);
    rows.push_back({m.tag(), r.macro_f1, r.accuracy});
  }
  return rows;
}

inline void save_ablation_table(const std::vector<AblationRow>& rows,
                                const std::filesystem::path& path) {
  std::string text = "combo\tmacro_f1\taccuracy\n";
  for (const auto& r : rows) {
    text += r.combo;
    text += '\t';
    text += fmt_f64(r.macro_f1);
    text += '\t';
    text += fmt_f64(r.accuracy);
    text += '\n';
  }
  write_text_file(path, text);
}

}  // namespace csgaze::eval
