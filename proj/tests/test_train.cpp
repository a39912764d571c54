#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "csgaze/synth/dataset.hpp"
#include "csgaze/train/config.hpp"
#include "csgaze/train/data.hpp"
#include "csgaze/train/loss.hpp"
#include "csgaze/train/trainer.hpp"

using namespace csgaze;
using namespace csgaze::train;
namespace fs = std::filesystem;

namespace {

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.image_size = 32;
  c.pool_factor = 2;
  c.stem_kernel = 4;
  c.stem_channels = 4;
  c.stage1_channels = 6;
  c.stage2_channels = 8;
  c.d_face = 12;
  c.d_scene = 12;
  c.d_attn = 12;
  c.heads = 2;
  c.d_text = 8;
  c.text_buckets = 64;
  c.max_text_tokens = 8;
  c.decoder_channels1 = 6;
  c.decoder_channels2 = 4;
  c.face_cond_channels = 3;
  c.classifier_hidden = 10;
  return c;
}

Raster noise_raster(int size, Rng& rng, int base) {
  Raster img(size, size);
  for (auto& b : img.data)
    b = static_cast<std::uint8_t>(std::clamp<int>(base + rng.uniform_int(-20, 20), 0, 255));
  return img;
}

// Items whose class is recoverable from scene brightness alone.
std::vector<ClassifyItem> brightness_items(int n, int image_size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ClassifyItem> items;
  for (int i = 0; i < n; ++i) {
    ClassifyItem it;
    it.id = "b" + std::to_string(i);
    it.label = i % kNumGazeClasses;
    it.scene = noise_raster(image_size, rng, 30 + 45 * it.label);
    it.face_p = noise_raster(image_size, rng, 100);
    it.face_a = noise_raster(image_size, rng, 100);
    it.context = "two persons in a room.";
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace

TEST(LossTest, CategoricalClosedForms) {
  // Uniform five-way logits: loss is exactly ln 5.
  nn::Tensor<double> logits({1, 5});
  nn::Tensor<double> d;
  EXPECT_NEAR(categorical_ce(logits, 3, &d), std::log(5.0), 1e-15);
  EXPECT_NEAR(categorical_ce(logits, 3, &d), 1.6094379124341003, 1e-15);
  // Gradient is softmax minus one-hot: 0.2 everywhere except 0.2 - 1 at the label.
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(d.at(0, i), 0.2 - (i == 3 ? 1.0 : 0.0), 1e-15);
  double gsum = 0;
  for (int i = 0; i < 5; ++i) gsum += d.at(0, i);
  EXPECT_NEAR(gsum, 0.0, 1e-15);

  // Confident correct prediction: tiny loss; wrong label: large.
  logits.v = {10, 0, 0, 0, 0};
  EXPECT_LT(categorical_ce(logits, 0, static_cast<nn::Tensor<double>*>(nullptr)), 1e-3);
  EXPECT_GT(categorical_ce(logits, 1, static_cast<nn::Tensor<double>*>(nullptr)), 9.0);

  // Extreme logits stay finite thanks to the probability floor.
  logits.v = {1000, -1000, 0, 0, 0};
  double loss = categorical_ce(logits, 1, static_cast<nn::Tensor<double>*>(nullptr));
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kProbFloor), 1.0);

  EXPECT_THROW(categorical_ce(logits, 5, static_cast<nn::Tensor<double>*>(nullptr)), Error);
}

TEST(LossTest, BinaryModeIsTwoWaySoftmax) {
  EXPECT_NEAR(binary_ce(0.5, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_ce(0.5, 0), std::log(2.0), 1e-15);
  EXPECT_THROW(binary_ce(0.5, 2), Error);

  // categorical_ce on (1,2) logits equals binary_ce on softmax(logits)[1].
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    nn::Tensor<double> logits({1, 2});
    logits.v = {rng.normal(), rng.normal()};
    double p1 = 1.0 / (1.0 + std::exp(logits.v[0] - logits.v[1]));
    for (int label : {0, 1}) {
      EXPECT_NEAR(categorical_ce(logits, label, static_cast<nn::Tensor<double>*>(nullptr)),
                  binary_ce(p1, label), 1e-12);
    }
  }
}

TEST(LossTest, HeatmapMseAndArgmax) {
  auto target = build_heatmap_target(0.25, 0.75);
  // A prediction equal to the target has zero loss and zero gradient.
  nn::Tensor<double> pred({1, kHeatmapSize, kHeatmapSize});
  for (int y = 0; y < kHeatmapSize; ++y)
    for (int x = 0; x < kHeatmapSize; ++x) pred.at(0, y, x) = target.value(x, y);
  nn::Tensor<double> dpred;
  EXPECT_DOUBLE_EQ(heatmap_mse(pred, target, &dpred), 0.0);
  for (double g : dpred.v) EXPECT_EQ(g, 0.0);

  // argmax respects the [0][y][x] layout: returns (x_cell, y_cell).
  EXPECT_EQ(heatmap_argmax(pred), std::make_pair(16, 47));

  // Perturb one cell by delta: loss delta^2/4096, gradient 2*delta/4096.
  double delta = 0.5;
  pred.at(0, 10, 20) += delta;
  EXPECT_NEAR(heatmap_mse(pred, target, &dpred), delta * delta / 4096.0, 1e-15);
  EXPECT_NEAR(dpred.at(0, 10, 20), 2.0 * delta / 4096.0, 1e-15);

  nn::Tensor<double> bad({1, 32, 32});
  EXPECT_THROW(heatmap_mse(bad, target, &dpred), Error);
}

TEST(SplitTest, DeterministicDisjointCovering) {
  auto a = make_split(100, 0.1, 7);
  auto b = make_split(100, 0.1, 7);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val.size(), 10u);
  EXPECT_EQ(a.train.size(), 90u);

  std::set<std::size_t> all(a.val.begin(), a.val.end());
  all.insert(a.train.begin(), a.train.end());
  EXPECT_EQ(all.size(), 100u);  // disjoint and covering

  auto c = make_split(100, 0.1, 8);
  EXPECT_NE(c.val, a.val);

  // Tiny datasets still produce a non-empty validation slice, capped at n-1.
  auto t = make_split(2, 0.1, 1);
  EXPECT_EQ(t.val.size(), 1u);
  EXPECT_EQ(t.train.size(), 1u);
  auto big = make_split(3, 0.99, 1);
  EXPECT_EQ(big.val.size(), 2u);  // capped so training is never empty
  EXPECT_THROW(make_split(1, 0.1, 1), Error);
}

TEST(EarlyStopperTest, StopsAtTheRightEpoch) {
  // Lower is better (validation loss).
  EarlyStopper s(3, false);
  EXPECT_TRUE(s.observe(1.00));
  EXPECT_TRUE(s.observe(0.90));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.observe(0.95));  // bad 1
  EXPECT_FALSE(s.observe(0.92));  // bad 2
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.observe(0.91));  // bad 3 = patience
  EXPECT_TRUE(s.should_stop());
  EXPECT_DOUBLE_EQ(s.best(), 0.90);

  // A strict improvement resets the streak.
  EarlyStopper r(2, false);
  r.observe(1.0);
  r.observe(1.1);
  EXPECT_TRUE(r.observe(0.5));
  EXPECT_FALSE(r.should_stop());

  // Equal values are not improvements.
  EarlyStopper e(1, false);
  e.observe(1.0);
  EXPECT_FALSE(e.observe(1.0));
  EXPECT_TRUE(e.should_stop());

  // Higher is better (F1 monitor).
  EarlyStopper h(2, true);
  h.observe(0.3);
  EXPECT_TRUE(h.observe(0.4));
  h.observe(0.35);
  h.observe(0.39);
  EXPECT_TRUE(h.should_stop());
  EXPECT_DOUBLE_EQ(h.best(), 0.4);
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.monitor = Monitor::kValF1;
  cfg.seed = 99;
  nlohmann::json j = cfg;
  TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(back.learning_rate, 0.01);
  EXPECT_EQ(back.monitor, Monitor::kValF1);
  EXPECT_EQ(back.seed, 99u);

  TrainConfig partial = nlohmann::json{{"batch_size", 16}}.get<TrainConfig>();
  EXPECT_EQ(partial.batch_size, 16);
  EXPECT_EQ(partial.max_epochs, 200);  // default preserved

  EXPECT_THROW(nlohmann::json({{"wat", 1}}).get<TrainConfig>(), Error);
  EXPECT_THROW(nlohmann::json({{"learning_rate", -1.0}}).get<TrainConfig>(), Error);
  EXPECT_THROW(nlohmann::json({{"validation_fraction", 1.5}}).get<TrainConfig>(), Error);
}

TEST(TrainLogTest, SavedBytesAreStable) {
  TrainLog log;
  log.rows.push_back({1, 1.5, 1.25, 0.5});
  log.rows.push_back({2, 1.0, 0.75, 0.625});
  log.stop_reason = "early_stop";
  log.best_epoch = 2;
  auto path = fs::temp_directory_path() / "csgaze_train_log.tsv";
  save_train_log(log, path);
  EXPECT_EQ(read_text_file(path),
            "epoch\ttrain_loss\tval_loss\tval_metric\n"
            "1\t1.5\t1.25\t0.5\n"
            "2\t1\t0.75\t0.625\n"
            "# stop_reason\tearly_stop\n"
            "# best_epoch\t2\n");
}

TEST(TrainStepTest, OneAdamStepReducesTheLoss) {
  model::ModelConfig mcfg = tiny_config();
  auto items = brightness_items(4, mcfg.image_size, 1);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    model::CSGazeNet<float> net(mcfg);
    net.init(seed);
    nn::Adam<float> adam(1e-4);
    model::ModalityMask mask;

    auto batch_loss = [&]() {
      double sum = 0;
      for (const auto& item : items) {
        auto in = make_net_input<float>(item);
        auto tr = net.forward(in, mask, nullptr);
        sum += categorical_ce<float>(tr.logits, item.label, nullptr);
      }
      return sum / static_cast<double>(items.size());
    };

    double before = batch_loss();
    net.zero_grad();
    for (const auto& item : items) {
      auto in = make_net_input<float>(item);
      typename model::CSGazeNet<float>::ClassifyCache cache;
      auto tr = net.forward(in, mask, &cache);
      nn::Tensor<float> dlogits;
      categorical_ce<float>(tr.logits, item.label, &dlogits);
      for (auto& g : dlogits.v) g *= 0.25f;
      net.backward(cache, dlogits);
    }
    adam.step([&](const nn::ParamVisitor<float>& f) { net.visit_phase2(f); });
    double after = batch_loss();
    EXPECT_LT(after, before) << "seed " << seed;
  }
}

TEST(TrainPhase2Test, ProducesBestCheckpointAndLog) {
  model::ModelConfig mcfg = tiny_config();
  auto items = brightness_items(20, mcfg.image_size, 3);
  model::CSGazeNet<float> net(mcfg);
  net.init(5);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  cfg.early_stop_patience = 5;
  cfg.validation_fraction = 0.2;
  cfg.seed = 11;

  auto result = train_phase2(net, items, cfg, model::ModalityMask{});
  EXPECT_EQ(result.checkpoint.phase, "classify-complete");
  EXPECT_EQ(result.log.rows.size(), 3u);
  EXPECT_EQ(result.log.stop_reason, "max_epochs");
  EXPECT_GE(result.log.best_epoch, 1);
  EXPECT_LE(result.log.best_epoch, 3);
  for (std::size_t i = 0; i < result.log.rows.size(); ++i)
    EXPECT_EQ(result.log.rows[i].epoch, static_cast<int>(i) + 1);

  // The returned checkpoint reloads into a working net.
  auto restored = model::net_from_checkpoint<float>(result.checkpoint);
  double loss = 0;
  auto report = evaluate_split(restored, items, {0, 1, 2}, model::ModalityMask{}, &loss);
  EXPECT_EQ(report.n_samples, 3);
  EXPECT_TRUE(std::isfinite(loss));
}

TEST(TrainPhase2Test, EarlyStopTriggersOnPlateau) {
  // Random labels (no signal) with tiny lr: validation loss plateaus fast.
  model::ModelConfig mcfg = tiny_config();
  auto items = brightness_items(12, mcfg.image_size, 7);
  Rng rng(13);
  for (auto& it : items) it.label = static_cast<int>(rng.uniform_index(kNumGazeClasses));
  model::CSGazeNet<float> net(mcfg);
  net.init(2);
  TrainConfig cfg;
  cfg.learning_rate = 1e-7;  // effectively frozen: no epoch can improve much
  cfg.batch_size = 8;
  cfg.max_epochs = 50;
  cfg.early_stop_patience = 2;
  cfg.validation_fraction = 0.25;
  cfg.seed = 21;
  auto result = train_phase2(net, items, cfg, model::ModalityMask{});
  EXPECT_EQ(result.log.stop_reason, "early_stop");
  EXPECT_LT(result.log.rows.size(), 50u);
  // Stopped exactly patience epochs after the best one.
  EXPECT_EQ(static_cast<int>(result.log.rows.size()), result.log.best_epoch + 2);
}

TEST(TrainPhase2Test, NonFiniteLossAborts) {
  model::ModelConfig mcfg = tiny_config();
  auto items = brightness_items(8, mcfg.image_size, 9);
  model::CSGazeNet<float> net(mcfg);
  net.init(4);
  net.cls.l2.b.value.v[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 2;
  try {
    train_phase2(net, items, cfg, model::ModalityMask{});
    FAIL() << "expected TrainAbort";
  } catch (const TrainAbort& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
    EXPECT_FALSE(e.last_good().has_value());  // died before any epoch finished
  }
}

TEST(TrainPhase2Test, WarnsOnEmptyTrainingClass) {
  model::ModelConfig mcfg = tiny_config();
  auto items = brightness_items(10, mcfg.image_size, 15);
  for (auto& it : items) it.label = it.label % 2;  // classes 2..4 empty
  model::CSGazeNet<float> net(mcfg);
  net.init(6);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 1;
  testing::internal::CaptureStderr();
  auto result = train_phase2(net, items, cfg, model::ModalityMask{});
  std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("no samples of class"), std::string::npos);
  EXPECT_EQ(result.log.rows.size(), 1u);
}

TEST(TrainPhase2Test, LabelRangeCheckedAgainstMode) {
  model::ModelConfig mcfg = tiny_config();
  mcfg.mode = model::NetMode::kBinary;
  auto items = brightness_items(6, mcfg.image_size, 17);  // labels 0..4
  model::CSGazeNet<float> net(mcfg);
  net.init(8);
  TrainConfig cfg;
  EXPECT_THROW(train_phase2(net, items, cfg, model::ModalityMask{}), Error);
}

TEST(PretrainTest, FixedEpochsAndReproducibleResult) {
  model::ModelConfig mcfg = tiny_config();
  GazeDataset ds;
  Rng rng(19);
  for (int i = 0; i < 3; ++i) ds.images.push_back(noise_raster(mcfg.image_size, rng, 120));
  for (int i = 0; i < 6; ++i) {
    GazeItem item;
    item.id = "g" + std::to_string(i);
    item.image_index = static_cast<std::size_t>(i % 3);
    item.face = noise_raster(mcfg.image_size, rng, 90);
    item.head = {0.1, 0.1, 0.3, 0.3};
    item.gaze_x = 0.1 * i + 0.2;
    item.gaze_y = 0.9 - 0.1 * i;
    ds.items.push_back(std::move(item));
  }
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.pretrain_epochs = 2;
  cfg.validation_fraction = 0.2;
  cfg.seed = 23;

  model::CSGazeNet<float> net(mcfg);
  net.init(9);
  auto r1 = pretrain_phase1(net, ds, cfg);
  EXPECT_EQ(r1.checkpoint.phase, "pretrain-complete");
  EXPECT_EQ(r1.log.rows.size(), 2u);
  EXPECT_EQ(r1.log.stop_reason, "max_epochs");
  for (const auto& row : r1.log.rows) {
    EXPECT_TRUE(std::isfinite(row.train_loss));
    EXPECT_GE(row.val_metric, 0.0);  // argmax error in cells
  }

  // Same seed, same data: byte-identical resulting weights.
  model::CSGazeNet<float> net2(mcfg);
  net2.init(9);
  auto r2 = pretrain_phase1(net2, ds, cfg);
  EXPECT_EQ(r1.checkpoint.tensors.at("scene_enc.stem.w").second,
            r2.checkpoint.tensors.at("scene_enc.stem.w").second);
  EXPECT_EQ(r1.log.rows[1].train_loss, r2.log.rows[1].train_loss);
}

TEST(DataLoadTest, ClassifyAndGazeDatasetsFromExport) {
  synth::GeneratorConfig gcfg;
  gcfg.image_size = 64;
  auto dir = fs::temp_directory_path() / "csgaze_train_data";
  fs::remove_all(dir);
  synth::export_dataset(gcfg, 6, 777, dir);

  auto items = load_classify_dataset(dir / "manifest.tsv", dir / "contexts.tsv", 32,
                                     model::NetMode::kMulticlass);
  ASSERT_EQ(items.size(), 6u);
  for (const auto& it : items) {
    EXPECT_EQ(it.scene.width, 32);
    EXPECT_EQ(it.face_p.width, 32);
    EXPECT_GE(it.label, 0);
    EXPECT_LT(it.label, kNumGazeClasses);
    EXPECT_FALSE(it.context.empty());
  }

  auto bitems = load_classify_dataset(dir / "manifest.tsv", dir / "contexts.tsv", 32,
                                      model::NetMode::kBinary);
  for (const auto& it : bitems) EXPECT_TRUE(it.label == 0 || it.label == 1);

  auto gds = load_gaze_dataset(dir / "gazefollow.tsv", 32);
  EXPECT_EQ(gds.items.size(), 12u);
  EXPECT_EQ(gds.images.size(), 6u);  // two sight lines share each scene
  for (const auto& item : gds.items) {
    EXPECT_LT(item.image_index, gds.images.size());
    EXPECT_EQ(gds.images[item.image_index].width, 32);
    EXPECT_GE(item.gaze_x, 0.0);
    EXPECT_LE(item.gaze_x, 1.0);
  }
}
