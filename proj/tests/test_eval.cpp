#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "csgaze/eval/ablation.hpp"
#include "csgaze/eval/explain.hpp"
#include "csgaze/eval/metrics.hpp"
#include "csgaze/eval/predictions.hpp"
#include "csgaze/eval/subset.hpp"
#include "csgaze/train/data.hpp"
#include "oracles.hpp"

using namespace csgaze;
using namespace csgaze::eval;
namespace fs = std::filesystem;

namespace {

PredictionRecord pred(const std::string& id, int true_label, int predicted, int n_classes) {
  PredictionRecord p;
  p.id = id;
  p.true_label = true_label;
  p.predicted = predicted;
  p.probabilities.assign(static_cast<std::size_t>(n_classes), 0.1 / (n_classes - 1) * 1.0);
  double rest = 0.9;
  double share = (1.0 - rest) / (n_classes - 1);
  p.probabilities.assign(static_cast<std::size_t>(n_classes), share);
  p.probabilities[static_cast<std::size_t>(predicted)] = rest;
  return p;
}

std::vector<PredictionRecord> random_preds(int n, int n_classes, Rng& rng) {
  std::vector<PredictionRecord> out;
  for (int i = 0; i < n; ++i) {
    int t = static_cast<int>(rng.uniform_index(n_classes));
    int p = static_cast<int>(rng.uniform_index(n_classes));
    out.push_back(pred("r" + std::to_string(i), t, p, n_classes));
  }
  return out;
}

}  // namespace

TEST(F1Test, FrozenCounts) {
  // Class 0 with TP=8, FP=2, FN=4 in a two-class world:
  // precision 0.8, recall 2/3, F1 = 16/22.
  std::vector<PredictionRecord> preds;
  int k = 0;
  auto add = [&](int t, int p, int n) {
    for (int i = 0; i < n; ++i) preds.push_back(pred("p" + std::to_string(k++), t, p, 2));
  };
  add(0, 0, 8);   // TP for class 0
  add(1, 0, 2);   // FP for class 0
  add(0, 1, 4);   // FN for class 0
  add(1, 1, 6);   // fills class 1
  auto report = build_report(preds, {"neg", "pos"});
  EXPECT_NEAR(report.per_class[0].precision, 0.8, 1e-12);
  EXPECT_NEAR(report.per_class[0].recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(report.per_class[0].f1, 16.0 / 22.0, 1e-12);
  EXPECT_EQ(report.per_class[0].support, 12);
  EXPECT_NEAR(report.accuracy, 14.0 / 20.0, 1e-12);
  EXPECT_EQ(report.confusion[0][0], 8);
  EXPECT_EQ(report.confusion[1][0], 2);
  EXPECT_EQ(report.confusion[0][1], 4);
  EXPECT_EQ(report.confusion[1][1], 6);
}

TEST(F1Test, ZeroSupportClassesCountTowardMacro) {
  // All mass in class 0; classes without support contribute F1 = 0 but are
  // still averaged over.
  std::vector<PredictionRecord> preds = {pred("a", 0, 0, 5), pred("b", 0, 0, 5)};
  auto report = build_report(preds, gaze_class_names());
  EXPECT_NEAR(report.per_class[0].f1, 1.0, 1e-12);
  for (int c = 1; c < 5; ++c) EXPECT_EQ(report.per_class[c].f1, 0.0);
  EXPECT_NEAR(report.macro_f1, 0.2, 1e-12);
  EXPECT_NEAR(report.accuracy, 1.0, 1e-12);
}

TEST(F1Test, FuzzAgainstBruteCounting) {
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    int n_classes = 2 + static_cast<int>(rng.uniform_index(4));
    int n = 1 + static_cast<int>(rng.uniform_index(40));
    std::vector<std::string> names;
    for (int c = 0; c < n_classes; ++c) names.push_back("c" + std::to_string(c));
    auto preds = random_preds(n, n_classes, rng);
    auto report = build_report(preds, names);
    EXPECT_NEAR(report.macro_f1, oracle::brute_macro_f1(preds, n_classes), 1e-9);
    EXPECT_NEAR(report.accuracy, oracle::brute_accuracy(preds), 1e-9);
  }
}

TEST(ApTest, FrozenValues) {
  // Ranked [pos, neg, pos]: AP = (1/1 + 2/3) / 2 = 5/6.
  EXPECT_NEAR(average_precision({0.9, 0.8, 0.7}, {1, 0, 1}), 5.0 / 6.0, 1e-12);
  // Perfect ranking.
  EXPECT_NEAR(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}), 1.0, 1e-12);
  // Worst ranking of one positive among three.
  EXPECT_NEAR(average_precision({0.9, 0.8, 0.1}, {0, 0, 1}), 1.0 / 3.0, 1e-12);
  // Ties keep input order: the positive listed first wins the tie.
  EXPECT_NEAR(average_precision({0.5, 0.5}, {1, 0}), 1.0, 1e-12);
  EXPECT_NEAR(average_precision({0.5, 0.5}, {0, 1}), 0.5, 1e-12);

  EXPECT_THROW(average_precision({0.5}, {0}), Error);        // no positives
  EXPECT_THROW(average_precision({0.5}, {2}), Error);        // bad label
  EXPECT_THROW(average_precision({}, {}), Error);            // empty
  EXPECT_THROW(average_precision({0.5, 0.4}, {1}), Error);   // length mismatch
}

TEST(ApTest, FuzzAgainstBruteRanking) {
  Rng rng(67);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform_index(30));
    std::vector<double> scores;
    std::vector<int> labels;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // Coarse scores make ties common, exercising the stable ordering.
      scores.push_back(rng.uniform_index(8) / 8.0);
      labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
      pos += labels.back();
    }
    if (pos == 0) labels[0] = 1;
    EXPECT_NEAR(average_precision(scores, labels),
                oracle::brute_average_precision(scores, labels), 1e-9);
  }
}

TEST(ApTest, RunsAggregation) {
  // Runs returning (seed - base)/100 for seeds base..base+99:
  // mean = 0.495, population stddev = sqrt(9999/12)/100.
  auto result = ap_over_runs([](std::uint64_t seed) { return (seed - 1000) / 100.0; }, 100, 1000);
  EXPECT_EQ(result.values.size(), 100u);
  EXPECT_NEAR(result.mean, 0.495, 1e-12);
  EXPECT_NEAR(result.stddev, std::sqrt(9999.0 / 12.0) / 100.0, 1e-12);
  EXPECT_THROW(ap_over_runs([](std::uint64_t) { return 0.5; }, 0, 1), Error);
}

TEST(SubsetTest, HandWorkedCase) {
  // Five-class predictions; evaluate the {single=2, miss=3} pair subset.
  std::vector<PredictionRecord> preds;
  // True single, most mass on single within the pair -> correct after renorm.
  PredictionRecord a;
  a.id = "a";
  a.true_label = 2;
  a.probabilities = {0.30, 0.25, 0.25, 0.10, 0.10};
  a.predicted = 0;
  preds.push_back(a);
  // True miss, within-pair mass favors single -> wrong after renorm.
  PredictionRecord b;
  b.id = "b";
  b.true_label = 3;
  b.probabilities = {0.40, 0.10, 0.30, 0.15, 0.05};
  b.predicted = 0;
  preds.push_back(b);
  // True share: outside the subset, dropped.
  PredictionRecord c;
  c.id = "c";
  c.true_label = 0;
  c.probabilities = {0.90, 0.025, 0.025, 0.025, 0.025};
  c.predicted = 0;
  preds.push_back(c);

  auto report = class_subset_eval(preds, {2, 3}, gaze_class_names());
  EXPECT_EQ(report.n_samples, 2);
  EXPECT_EQ(report.n_classes, 2);
  EXPECT_EQ(report.class_names[0], "single");
  EXPECT_EQ(report.class_names[1], "miss");
  // a: renormalized (0.25, 0.10)/0.35 -> predicts single (correct).
  // b: renormalized (0.30, 0.15)/0.45 -> predicts single (wrong).
  EXPECT_NEAR(report.accuracy, 0.5, 1e-12);
  EXPECT_EQ(report.confusion[0][0], 1);
  EXPECT_EQ(report.confusion[1][0], 1);

  EXPECT_THROW(class_subset_eval(preds, {}, gaze_class_names()), Error);
  EXPECT_THROW(class_subset_eval(preds, {2, 2}, gaze_class_names()), Error);
  EXPECT_THROW(class_subset_eval(preds, {9}, gaze_class_names()), Error);
}

TEST(SubsetTest, PresetsAreComplete) {
  const auto& presets = subset_presets();
  EXPECT_EQ(presets.size(), 7u);
  EXPECT_EQ(lookup_subset_preset("full"), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(lookup_subset_preset("pair-miss-single"), (std::vector<int>{2, 3}));
  EXPECT_EQ(lookup_subset_preset("pair-mutual-share"), (std::vector<int>{0, 1}));
  EXPECT_EQ(lookup_subset_preset("triple-mutual-share-void"), (std::vector<int>{0, 1, 4}));
  EXPECT_EQ(lookup_subset_preset("triple-miss-void-single"), (std::vector<int>{2, 3, 4}));
  EXPECT_EQ(lookup_subset_preset("quad-miss-mutual-void-single"), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(lookup_subset_preset("quad-mutual-share-void-single"), (std::vector<int>{0, 1, 2, 4}));
  try {
    lookup_subset_preset("nope");
    FAIL() << "expected unknown preset error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("pair-miss-single"), std::string::npos) << e.what();
  }
}

TEST(PredictionsIoTest, RoundTripAndValidation) {
  auto dir = fs::temp_directory_path() / "csgaze_eval_test";
  fs::create_directories(dir);
  std::vector<PredictionRecord> preds = {pred("x1", 2, 1, 5), pred("x2", 0, 0, 5)};
  preds[0].probabilities = {0.1, 0.5, 0.2, 0.1, 0.1};
  auto path = dir / "preds.tsv";
  save_predictions(preds, path);
  auto back = load_predictions(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id, "x1");
  EXPECT_EQ(back[0].true_label, 2);
  EXPECT_EQ(back[0].predicted, 1);
  EXPECT_EQ(back[0].probabilities, preds[0].probabilities);  // bitwise through text

  // Unnormalized probabilities are rejected at save time...
  auto bad = preds;
  bad[0].probabilities[0] = 0.9;
  EXPECT_THROW(save_predictions(bad, dir / "bad.tsv"), Error);
  // ... and at load time, with the line number in the message.
  write_text_file(path, "id\ttrue\tpredicted\tp0\tp1\n"
                        "q\t0\t0\t0.9\t0.3\n");
  try {
    load_predictions(path);
    FAIL() << "expected validation error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  // Inconsistent column counts are malformed.
  write_text_file(path, "id\ttrue\tpredicted\tp0\tp1\n"
                        "q\t0\t0\t0.5\t0.3\t0.2\n");
  EXPECT_THROW(load_predictions(path), Error);
}

TEST(AttentionReportTest, RowsAverageToOne) {
  model::ModelConfig cfg;
  cfg.image_size = 32;
  cfg.pool_factor = 2;
  cfg.stem_kernel = 4;
  cfg.stem_channels = 4;
  cfg.stage1_channels = 6;
  cfg.stage2_channels = 8;
  cfg.d_face = 12;
  cfg.d_scene = 12;
  cfg.d_attn = 12;
  cfg.heads = 2;
  cfg.d_text = 8;
  cfg.text_buckets = 64;
  cfg.max_text_tokens = 8;
  cfg.decoder_channels1 = 6;
  cfg.decoder_channels2 = 4;
  cfg.face_cond_channels = 3;
  cfg.classifier_hidden = 10;
  model::CSGazeNet<float> net(cfg);
  net.init(71);

  Rng rng(72);
  std::vector<train::ClassifyItem> items;
  for (int i = 0; i < 6; ++i) {
    train::ClassifyItem it;
    it.id = "i" + std::to_string(i);
    it.label = i % 3;  // classes 3 and 4 stay empty
    it.scene = Raster(32, 32);
    it.face_p = Raster(32, 32);
    it.face_a = Raster(32, 32);
    for (auto* r : {&it.scene, &it.face_p, &it.face_a})
      for (auto& b : r->data) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    it.context = "two persons.";
    items.push_back(std::move(it));
  }
  auto summary = attention_report(net, items, model::ModalityMask{});
  ASSERT_EQ(summary.rows.size(), 5u);
  for (std::size_t c = 0; c < 5; ++c)
    EXPECT_NEAR(summary.rows[c][0] + summary.rows[c][1], 1.0, 1e-5) << "class " << c;
  EXPECT_EQ(summary.counts[0], 2);
  EXPECT_EQ(summary.counts[3], 0);
  EXPECT_EQ(summary.rows[3][0], 0.5);  // empty class: no evidence either way

  auto table = render_attention_table(summary);
  EXPECT_NE(table.find("class\tscene_context\tface\tcount"), std::string::npos);
  EXPECT_NE(table.find("mutual"), std::string::npos);

  auto path = fs::temp_directory_path() / "csgaze_attention.json";
  save_attention_summary(summary, path);
  auto j = nlohmann::json::parse(read_text_file(path));
  EXPECT_EQ(j.at("rows").size(), 5u);
}

TEST(AblationTest, CombosAndTable) {
  auto combos = ablation_combos();
  ASSERT_EQ(combos.size(), 7u);
  std::vector<std::string> tags;
  for (const auto& m : combos) tags.push_back(m.tag());
  EXPECT_EQ(tags, (std::vector<std::string>{"S", "C", "S+C", "F", "F+S", "F+C", "F+S+C"}));

  auto rows = ablation_matrix(combos, [](const model::ModalityMask& m) {
    MetricsReport r;
    r.macro_f1 = m.face ? 0.75 : 0.25;
    r.accuracy = 0.5;
    return r;
  });
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[6].combo, "F+S+C");
  EXPECT_EQ(rows[6].macro_f1, 0.75);

  auto path = fs::temp_directory_path() / "csgaze_ablation.tsv";
  save_ablation_table(rows, path);
  auto text = read_text_file(path);
  EXPECT_NE(text.find("combo\tmacro_f1\taccuracy"), std::string::npos);
  EXPECT_NE(text.find("F+S+C\t0.75\t0.5"), std::string::npos);
}

TEST(ReportSerializationTest, JsonAndTable) {
  std::vector<PredictionRecord> preds = {pred("a", 1, 1, 5), pred("b", 2, 1, 5)};
  auto report = build_report(preds, gaze_class_names());
  auto path = fs::temp_directory_path() / "csgaze_report.json";
  save_metrics_report(report, path);
  auto j = nlohmann::json::parse(read_text_file(path));
  EXPECT_EQ(j.at("n_samples").get<long>(), 2);
  EXPECT_EQ(j.at("class_names")[1].get<std::string>(), "mutual");
  EXPECT_EQ(j.at("confusion")[2][1].get<long>(), 1);

  auto table = render_report_table(report);
  EXPECT_NE(table.find("mutual"), std::string::npos);
  EXPECT_NE(table.find("accuracy"), std::string::npos);
}
