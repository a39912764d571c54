#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "csgaze/common.hpp"

namespace csgaze::train {

enum class Monitor { kValLoss, kValF1 };

inline const char* to_string(Monitor m) { return m == Monitor::kValLoss ? "loss" : "f1"; }

inline Monitor parse_monitor(const std::string& s) {
  if (s == "loss") return Monitor::kValLoss;
  if (s == "f1") return Monitor::kValF1;
  raise("unknown monitor '" + s + "' (want loss or f1)");
}

struct TrainConfig {
  double learning_rate = 0.001;  // Adam, betas 0.9/0.999, eps 1e-8
  int batch_size = 128;
  int max_epochs = 200;
  int pretrain_epochs = 10;
  int early_stop_patience = 5;
  double validation_fraction = 0.1;  // first slice of a seeded shuffle
  Monitor monitor = Monitor::kValLoss;
  bool freeze_encoders = false;
  std::uint64_t seed = 1;

  void validate() const {
    require(learning_rate > 0, "train config: learning rate must be positive");
    require(batch_size > 0, "train config: batch size must be positive");
    require(max_epochs > 0 && pretrain_epochs > 0, "train config: epochs must be positive");
    require(early_stop_patience > 0, "train config: patience must be positive");
    require(validation_fraction > 0 && validation_fraction < 1,
            "train config: validation fraction must be in (0,1)");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"pretrain_epochs", c.pretrain_epochs},
                     {"early_stop_patience", c.early_stop_patience},
                     {"validation_fraction", c.validation_fraction},
                     {"monitor", std::string(to_string(c.monitor))},
                     {"freeze_encoders", c.freeze_encoders},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "learning_rate") c.learning_rate = it.value().get<double>();
    else if (k == "batch_size") c.batch_size = it.value().get<int>();
    else if (k == "max_epochs") c.max_epochs = it.value().get<int>();
    else if (k == "pretrain_epochs") c.pretrain_epochs = it.value().get<int>();
    else if (k == "early_stop_patience") c.early_stop_patience = it.value().get<int>();
    else if (k == "validation_fraction") c.validation_fraction = it.value().get<double>();
    else if (k == "monitor") c.monitor = parse_monitor(it.value().get<std::string>());
    else if (k == "freeze_encoders") c.freeze_encoders = it.value().get<bool>();
    else if (k == "seed") c.seed = it.value().get<std::uint64_t>();
    else raise("unknown train config key: '" + k + "'");
  }
  c.validate();
}

// Per-epoch training curve.  Deliberately contains no timestamps so that
// reruns with the same seed produce byte-identical files; wall-clock timing
// belongs to the run manifest.
struct TrainLog {
  struct Row {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double val_metric = 0;  // macro F1 (phase 2) / mean argmax error in cells (phase 1)
  };
  std::vector<Row> rows;
  std::string stop_reason;  // "max_epochs" | "early_stop"
  int best_epoch = 0;
};

inline void save_train_log(const TrainLog& log, const std::filesystem::path& path) {
  std::string text = "epoch\ttrain_loss\tval_loss\tval_metric\n";
  for (const auto& r : log.rows) {
    text += std::to_string(r.epoch);
    text += '\t';
    text += fmt_f64(r.train_loss);
    text += '\t';
    text += fmt_f64(r.val_loss);
    text += '\t';
    text += fmt_f64(r.val_metric);
    text += '\n';
  }
  text += "# stop_reason\t" + log.stop_reason + "\n";
  text += "# best_epoch\t" + std::to_string(log.best_epoch) + "\n";
  write_text_file(path, text);
}

// Early stopping bookkeeping, exposed separately so the stop-at-the-right-
// epoch behavior is unit-testable without training anything.
class EarlyStopper {
 public:
  EarlyStopper(int patience, bool higher_is_better)
      : patience_(patience), higher_better_(higher_is_better) {}

  // Returns true when this epoch's value is a strict improvement.
  bool observe(double value) {
    bool improved = !has_best_ || (higher_better_ ? value > best_ : value < best_);
    if (improved) {
      best_ = value;
      has_best_ = true;
      bad_streak_ = 0;
    } else {
      ++bad_streak_;
    }
    return improved;
  }

  bool should_stop() const { return bad_streak_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  bool higher_better_;
  bool has_best_ = false;
  double best_ = 0;
  int bad_streak_ = 0;
};

}  // namespace csgaze::train
