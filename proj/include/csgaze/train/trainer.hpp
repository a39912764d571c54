#pragma once

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csgaze/eval/metrics.hpp"
#include "csgaze/model/checkpoint.hpp"
#include "csgaze/model/net.hpp"
#include "csgaze/nn/adam.hpp"
#include "csgaze/train/config.hpp"
#include "csgaze/train/data.hpp"
#include "csgaze/train/loss.hpp"

namespace csgaze::train {

// Raised when a batch loss turns non-finite.  Carries the state at the end
// of the last completed epoch (if any) so callers can persist it.
class TrainAbort : public Error {
 public:
  TrainAbort(const std::string& msg, std::optional<model::CheckpointData> last_good)
      : Error(msg), last_good_(std::move(last_good)) {}
  const std::optional<model::CheckpointData>& last_good() const { return last_good_; }

 private:
  std::optional<model::CheckpointData> last_good_;
};

struct TrainResult {
  model::CheckpointData checkpoint;
  TrainLog log;
};

// --- phase 1: gaze heatmap pretraining --------------------------------------

// Trains encoders + heatmap decoder with MSE for a fixed number of epochs
// (no early stopping in this phase) and returns the final state.  The
// validation metric logged per epoch is the mean argmax error in cells.
template <typename S>
inline TrainResult pretrain_phase1(model::CSGazeNet<S>& net, const GazeDataset& ds,
                                   const TrainConfig& cfg) {
  cfg.validate();
  require(!ds.items.empty(), "pretrain: empty dataset");
  int grid = net.config().token_grid();
  Split split = make_split(ds.items.size(), cfg.validation_fraction, cfg.seed);
  nn::Adam<S> adam(cfg.learning_rate);
  auto visit = [&](const nn::ParamVisitor<S>& f) { net.visit_phase1(f); };

  auto sample_forward = [&](const GazeItem& item, typename model::CSGazeNet<S>::GazeCache* cache,
                            nn::Tensor<S>* dpred, double* loss, double* argmax_err) {
    nn::Tensor<S> scene = raster_to_tensor<S>(ds.images[item.image_index]);
    nn::Tensor<S> face = raster_to_tensor<S>(item.face);
    nn::Tensor<S> mask = model::build_head_mask<S>(item.head, grid);
    HeatmapTarget target = build_heatmap_target(item.gaze_x, item.gaze_y);
    nn::Tensor<S> pred = net.forward_gaze(scene, face, mask, cache);
    *loss = heatmap_mse(pred, target, dpred);
    if (argmax_err) {
      auto [px, py] = heatmap_argmax(pred);
      double dx = px - target.peak_r, dy = py - target.peak_c;
      *argmax_err = std::sqrt(dx * dx + dy * dy);
    }
  };

  TrainLog log;
  std::optional<model::CheckpointData> last_good;
  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng erng = Rng(cfg.seed).fork("p1-epoch-" + std::to_string(epoch));
    erng.shuffle(order);

    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      S inv_batch = S(1) / static_cast<S>(end - start);
      net.zero_grad();
      double batch_loss = 0;
      for (std::size_t i = start; i < end; ++i) {
        typename model::CSGazeNet<S>::GazeCache cache;
        nn::Tensor<S> dpred;
        double loss = 0;
        sample_forward(ds.items[order[i]], &cache, &dpred, &loss, nullptr);
        batch_loss += loss;
        for (auto& g : dpred.v) g *= inv_batch;
        net.backward_gaze(cache, dpred);
      }
      batch_loss /= static_cast<double>(end - start);
      if (!std::isfinite(batch_loss))
        throw TrainAbort("pretrain: non-finite loss in epoch " + std::to_string(epoch),
                         std::move(last_good));
      adam.step(visit);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(order.size());

    double val_loss = 0, val_err = 0;
    for (std::size_t i : split.val) {
      double loss = 0, err = 0;
      sample_forward(ds.items[i], nullptr, nullptr, &loss, &err);
      val_loss += loss;
      val_err += err;
    }
    val_loss /= static_cast<double>(split.val.size());
    val_err /= static_cast<double>(split.val.size());
    log.rows.push_back({epoch, epoch_loss, val_loss, val_err});
    last_good = model::snapshot(net, "pretrain-complete", adam.steps_taken());
  }
  log.stop_reason = "max_epochs";
  log.best_epoch = cfg.pretrain_epochs;
  return {model::snapshot(net, "pretrain-complete", adam.steps_taken()), std::move(log)};
}

// --- phase 2: social gaze classification -------------------------------------

template <typename S>
inline eval::MetricsReport evaluate_split(model::CSGazeNet<S>& net,
                                          const std::vector<ClassifyItem>& items,
                                          const std::vector<std::size_t>& indices,
                                          const model::ModalityMask& mask, double* mean_loss,
                                          std::vector<PredictionRecord>* out_preds = nullptr) {
  int n_out = net.config().n_outputs();
  std::vector<PredictionRecord> preds;
  preds.reserve(indices.size());
  double loss_sum = 0;
  for (std::size_t i : indices) {
    auto in = make_net_input<S>(items[i]);
    auto tr = net.forward(in, mask, nullptr);
    loss_sum += categorical_ce<S>(tr.logits, items[i].label, nullptr);
    PredictionRecord p;
    p.id = items[i].id;
    p.true_label = items[i].label;
    p.probabilities = tr.probs;
    p.predicted = 0;
    for (int c = 1; c < n_out; ++c)
      if (tr.probs[static_cast<std::size_t>(c)] > tr.probs[static_cast<std::size_t>(p.predicted)])
        p.predicted = c;
    p.validate();
    preds.push_back(std::move(p));
  }
  if (mean_loss) *mean_loss = indices.empty() ? 0.0 : loss_sum / static_cast<double>(indices.size());
  auto names = n_out == 2 ? eval::binary_class_names() : eval::gaze_class_names();
  auto report = eval::build_report(preds, names);
  if (out_preds) *out_preds = std::move(preds);
  return report;
}

// Fine-tunes the full classification graph with early stopping on the
// validation monitor; returns the checkpoint of the best validation epoch.
template <typename S>
inline TrainResult train_phase2(model::CSGazeNet<S>& net, const std::vector<ClassifyItem>& items,
                                const TrainConfig& cfg, const model::ModalityMask& mask) {
  cfg.validate();
  mask.validate();
  require(items.size() >= 2, "train: need at least two samples");
  int n_out = net.config().n_outputs();
  for (const auto& item : items)
    require(item.label >= 0 && item.label < n_out, "train: label out of range for mode");

  Split split = make_split(items.size(), cfg.validation_fraction, cfg.seed);
  std::vector<long> class_count(static_cast<std::size_t>(n_out), 0);
  for (std::size_t i : split.train) class_count[static_cast<std::size_t>(items[i].label)]++;
  for (int c = 0; c < n_out; ++c)
    if (class_count[static_cast<std::size_t>(c)] == 0)
      std::cerr << "warning: training split has no samples of class " << c << "\n";

  net.set_encoders_trainable(!cfg.freeze_encoders);
  nn::Adam<S> adam(cfg.learning_rate);
  auto visit = [&](const nn::ParamVisitor<S>& f) { net.visit_phase2(f); };

  TrainLog log;
  EarlyStopper stopper(cfg.early_stop_patience, cfg.monitor == Monitor::kValF1);
  std::optional<model::CheckpointData> best;
  std::optional<model::CheckpointData> last_good;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng erng = Rng(cfg.seed).fork("p2-epoch-" + std::to_string(epoch));
    erng.shuffle(order);

    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      S inv_batch = S(1) / static_cast<S>(end - start);
      net.zero_grad();
      double batch_loss = 0;
      for (std::size_t i = start; i < end; ++i) {
        const ClassifyItem& item = items[order[i]];
        auto in = make_net_input<S>(item);
        typename model::CSGazeNet<S>::ClassifyCache cache;
        auto tr = net.forward(in, mask, &cache);
        nn::Tensor<S> dlogits;
        batch_loss += categorical_ce<S>(tr.logits, item.label, &dlogits);
        for (auto& g : dlogits.v) g *= inv_batch;
        net.backward(cache, dlogits);
      }
      batch_loss /= static_cast<double>(end - start);
      if (!std::isfinite(batch_loss))
        throw TrainAbort("train: non-finite loss in epoch " + std::to_string(epoch),
                         std::move(last_good));
      adam.step(visit);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(order.size());

    double val_loss = 0;
    auto val_report = evaluate_split(net, items, split.val, mask, &val_loss);
    log.rows.push_back({epoch, epoch_loss, val_loss, val_report.macro_f1});
    last_good = model::snapshot(net, "classify-complete", adam.steps_taken());

    double monitored = cfg.monitor == Monitor::kValF1 ? val_report.macro_f1 : val_loss;
    if (stopper.observe(monitored)) {
      best = last_good;
      best_epoch = epoch;
    }
    if (stopper.should_stop()) {
      log.stop_reason = "early_stop";
      break;
    }
  }
  if (log.stop_reason.empty()) log.stop_reason = "max_epochs";
  log.best_epoch = best_epoch;
  return {std::move(*best), std::move(log)};
}

}  // namespace csgaze::train
