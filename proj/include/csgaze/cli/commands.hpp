#pragma once

#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "csgaze/cli/app_config.hpp"
#include "csgaze/cli/run_manifest.hpp"
#include "csgaze/context/provider.hpp"
#include "csgaze/eval/ablation.hpp"
#include "csgaze/eval/explain.hpp"
#include "csgaze/eval/metrics.hpp"
#include "csgaze/eval/predictions.hpp"
#include "csgaze/eval/subset.hpp"
#include "csgaze/model/checkpoint.hpp"
#include "csgaze/synth/dataset.hpp"
#include "csgaze/train/trainer.hpp"

namespace csgaze::cli {

namespace fs = std::filesystem;

// Where a command writes and which config file (if any) it resolved from.
// Output directories are owned by exactly one run; refusing to reuse a
// non-empty one keeps stale artifacts from masquerading as fresh results.
struct CommandIo {
  fs::path out_dir;
  bool force = false;
  fs::path config_file;  // empty when built-in defaults / flags only
};

inline void prepare_out_dir(const fs::path& out_dir, bool force) {
  require(!out_dir.empty(), "missing output directory (--out)");
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
    raise("output directory " + out_dir.string() + " is not empty (pass --force to reuse it)");
  fs::create_directories(out_dir);
}

inline RunManifest begin_run(const std::string& command, const nlohmann::json& config,
                             std::uint64_t seed, const CommandIo& io,
                             const std::vector<fs::path>& data_inputs) {
  prepare_out_dir(io.out_dir, io.force);
  RunManifest m;
  m.command = command;
  m.config = config;
  m.seed = seed;
  if (!io.config_file.empty())
    m.inputs[io.config_file.string()] = file_digest_hex(io.config_file);
  for (const auto& p : data_inputs) m.inputs[p.string()] = file_digest_hex(p);
  return m;
}

inline void finish_run(RunManifest& m, std::vector<std::string> outputs, const WallTimer& timer,
                       const CommandIo& io) {
  m.outputs = std::move(outputs);
  m.wall_seconds = timer.seconds();
  save_run_manifest(m, io.out_dir);
}

// --- synth-gen ----------------------------------------------------------------

struct SynthGenArgs {
  AppConfig config;
  int n_scenes = 100;
  std::uint64_t seed = 1;
  CommandIo io;
};

inline synth::DatasetSummary cmd_synth_gen(const SynthGenArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  auto m = begin_run("synth-gen", a.config, a.seed, a.io, {});
  auto summary = synth::export_dataset(a.config.generator, a.n_scenes, a.seed, a.io.out_dir);
  auto names = eval::gaze_class_names();
  for (int c = 0; c < kNumGazeClasses; ++c)
    log << names[static_cast<std::size_t>(c)] << '\t'
        << summary.class_counts[static_cast<std::size_t>(c)] << '\n';
  log << "total\t" << summary.n_scenes << '\n';
  finish_run(m,
             {"images/", "manifest.tsv", "gazefollow.tsv", "contexts.tsv", "pair_labels.tsv",
              "gaze_points.tsv", "regions.tsv"},
             timer, a.io);
  return summary;
}

// --- pretrain (phase 1: gaze heatmaps) ----------------------------------------

struct PretrainArgs {
  AppConfig config;
  fs::path gazefollow_manifest;
  CommandIo io;
};

inline train::TrainResult cmd_pretrain(const PretrainArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  auto m = begin_run("pretrain", a.config, a.config.train.seed, a.io, {a.gazefollow_manifest});
  auto ds = train::load_gaze_dataset(a.gazefollow_manifest, a.config.model.image_size);
  log << "pretrain: " << ds.items.size() << " gaze samples over " << ds.images.size()
      << " images\n";
  model::CSGazeNet<float> net(a.config.model);
  net.init(a.config.train.seed);
  auto result = train::pretrain_phase1(net, ds, a.config.train);
  model::save_checkpoint_data(result.checkpoint, a.io.out_dir / "pretrain.ckpt");
  train::save_train_log(result.log, a.io.out_dir / "pretrain_log.tsv");
  finish_run(m, {"pretrain.ckpt", "pretrain_log.tsv"}, timer, a.io);
  return result;
}

// --- train (phase 2: social gaze classification) ------------------------------

struct TrainArgs {
  AppConfig config;
  fs::path manifest;
  fs::path contexts;           // defaults to contexts.tsv beside the manifest
  fs::path pretrained;         // phase-1 checkpoint; may be empty
  bool from_scratch = false;   // explicit opt-out of the phase-1 handoff
  CommandIo io;
};

inline fs::path resolve_contexts_path(const fs::path& manifest, const fs::path& contexts) {
  return contexts.empty() ? manifest.parent_path() / "contexts.tsv" : contexts;
}

inline train::TrainResult cmd_train(const TrainArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  require(!a.pretrained.empty() || a.from_scratch,
          "train: pass a phase-1 checkpoint (--pretrained) or opt out with --from-scratch");
  fs::path contexts = resolve_contexts_path(a.manifest, a.contexts);
  std::vector<fs::path> inputs = {a.manifest, contexts};
  if (!a.pretrained.empty()) inputs.push_back(a.pretrained);
  auto m = begin_run("train", a.config, a.config.train.seed, a.io, inputs);

  auto items = train::load_classify_dataset(a.manifest, contexts, a.config.model.image_size,
                                            a.config.model.mode);
  log << "train: " << items.size() << " samples, mode "
      << model::to_string(a.config.model.mode) << '\n';
  model::CSGazeNet<float> net(a.config.model);
  net.init(a.config.train.seed);
  if (!a.pretrained.empty()) {
    auto data = model::load_checkpoint_data(a.pretrained);
    int n = model::apply_encoder_weights(net, data);
    log << "train: applied " << n << " encoder tensors from " << a.pretrained.string() << '\n';
  }
  auto result = train::train_phase2(net, items, a.config.train, model::ModalityMask{});
  model::save_checkpoint_data(result.checkpoint, a.io.out_dir / "model.ckpt");
  train::save_train_log(result.log, a.io.out_dir / "train_log.tsv");
  log << "train: stopped after " << result.log.rows.size() << " epochs ("
      << result.log.stop_reason << "), best epoch " << result.log.best_epoch << '\n';
  finish_run(m, {"model.ckpt", "train_log.tsv"}, timer, a.io);
  return result;
}

// --- eval ----------------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path contexts;
  std::string subset;   // preset name or comma-separated class indices; empty = full only
  int ap_runs = 0;      // > 0 enables the subsampled average-precision protocol
  std::uint64_t seed = 1;  // base seed for the AP runs
  CommandIo io;
};

// Accepts either a preset name or an explicit comma-separated index list, so
// combinations beyond the named presets stay expressible.
inline std::vector<int> parse_subset_spec(const std::string& spec) {
  if (spec.find(',') == std::string::npos && !std::isdigit(static_cast<unsigned char>(spec[0])))
    return eval::lookup_subset_preset(spec);
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    std::string tok = spec.substr(pos, next - pos);
    require(!tok.empty(), "subset: empty entry in '" + spec + "'");
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      raise("subset: '" + tok + "' is not a class index");
    }
    pos = next + 1;
  }
  return out;
}

// One run of the 100-run protocol: score a deterministic half-sized subsample.
// If the draw happens to contain no positive, the first positive in shuffle
// order is swapped in so the run stays well defined.
inline double ap_subsample_run(const std::vector<double>& scores, const std::vector<int>& labels,
                               std::uint64_t seed) {
  std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::size_t take = (n + 1) / 2;
  bool has_positive = false;
  for (std::size_t i = 0; i < take; ++i) has_positive |= labels[order[i]] == 1;
  if (!has_positive) {
    for (std::size_t i = take; i < n; ++i)
      if (labels[order[i]] == 1) {
        std::swap(order[take - 1], order[i]);
        break;
      }
  }
  std::vector<double> s;
  std::vector<int> l;
  for (std::size_t i = 0; i < take; ++i) {
    s.push_back(scores[order[i]]);
    l.push_back(labels[order[i]]);
  }
  return eval::average_precision(s, l);
}

inline eval::MetricsReport cmd_eval(const EvalArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  fs::path contexts = resolve_contexts_path(a.manifest, a.contexts);
  auto data = model::load_checkpoint_data(a.checkpoint);
  auto m = begin_run("eval", nlohmann::json{{"model", data.config}}, a.seed, a.io,
                     {a.checkpoint, a.manifest, contexts});
  auto net = model::net_from_checkpoint<float>(data);
  auto items = train::load_classify_dataset(a.manifest, contexts, net.config().image_size,
                                            net.config().mode);
  std::vector<std::size_t> all(items.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<PredictionRecord> preds;
  double mean_loss = 0;
  auto report = train::evaluate_split(net, items, all, model::ModalityMask{}, &mean_loss, &preds);

  eval::save_predictions(preds, a.io.out_dir / "predictions.tsv");
  eval::save_metrics_report(report, a.io.out_dir / "metrics.json");
  std::string table = eval::render_report_table(report);
  write_text_file(a.io.out_dir / "report.txt", table);
  log << table;
  std::vector<std::string> outputs = {"predictions.tsv", "metrics.json", "report.txt"};

  if (!a.subset.empty()) {
    auto subset = parse_subset_spec(a.subset);
    auto names = net.config().n_outputs() == 2 ? eval::binary_class_names()
                                               : eval::gaze_class_names();
    auto sub_report = eval::class_subset_eval(preds, subset, names);
    eval::save_metrics_report(sub_report, a.io.out_dir / "subset_metrics.json");
    write_text_file(a.io.out_dir / "subset_report.txt", eval::render_report_table(sub_report));
    outputs.push_back("subset_metrics.json");
    outputs.push_back("subset_report.txt");
  }

  if (a.ap_runs > 0) {
    require(net.config().mode == model::NetMode::kBinary,
            "eval: --ap-runs needs a binary-mode checkpoint (positive class = laeo)");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : preds) {
      scores.push_back(p.probabilities[1]);
      labels.push_back(p.true_label);
    }
    auto runs = eval::ap_over_runs(
        [&](std::uint64_t run_seed) { return ap_subsample_run(scores, labels, run_seed); },
        a.ap_runs, a.seed);
    nlohmann::json j{{"mean", runs.mean},
                     {"stddev", runs.stddev},
                     {"n_runs", a.ap_runs},
                     {"values", runs.values}};
    write_text_file(a.io.out_dir / "ap_runs.json", j.dump(2) + "\n");
    outputs.push_back("ap_runs.json");
    log << "ap over " << a.ap_runs << " runs: mean " << runs.mean << " stddev " << runs.stddev
        << '\n';
  }

  finish_run(m, std::move(outputs), timer, a.io);
  return report;
}

// --- explain -------------------------------------------------------------------

struct ExplainArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path contexts;
  CommandIo io;
};

inline eval::AttentionSummary cmd_explain(const ExplainArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  fs::path contexts = resolve_contexts_path(a.manifest, a.contexts);
  auto data = model::load_checkpoint_data(a.checkpoint);
  auto m = begin_run("explain", nlohmann::json{{"model", data.config}}, 0, a.io,
                     {a.checkpoint, a.manifest, contexts});
  auto net = model::net_from_checkpoint<float>(data);
  auto items = train::load_classify_dataset(a.manifest, contexts, net.config().image_size,
                                            net.config().mode);
  auto summary = eval::attention_report(net, items, model::ModalityMask{});
  eval::save_attention_summary(summary, a.io.out_dir / "attention.json");
  std::string table = eval::render_attention_table(summary);
  write_text_file(a.io.out_dir / "attention.txt", table);
  log << table;
  finish_run(m, {"attention.json", "attention.txt"}, timer, a.io);
  return summary;
}

// --- ablate ---------------------------------------------------------------------

struct AblateArgs {
  AppConfig config;
  fs::path train_manifest;
  fs::path eval_manifest;
  fs::path pretrained;  // optional phase-1 checkpoint applied before every combo
  CommandIo io;
};

inline std::vector<eval::AblationRow> cmd_ablate(const AblateArgs& a,
                                                 std::ostream& log = std::cout) {
  WallTimer timer;
  fs::path train_contexts = resolve_contexts_path(a.train_manifest, {});
  fs::path eval_contexts = resolve_contexts_path(a.eval_manifest, {});
  std::vector<fs::path> inputs = {a.train_manifest, train_contexts, a.eval_manifest,
                                  eval_contexts};
  if (!a.pretrained.empty()) inputs.push_back(a.pretrained);
  auto m = begin_run("ablate", a.config, a.config.train.seed, a.io, inputs);

  auto train_items = train::load_classify_dataset(a.train_manifest, train_contexts,
                                                  a.config.model.image_size, a.config.model.mode);
  auto eval_items = train::load_classify_dataset(a.eval_manifest, eval_contexts,
                                                 a.config.model.image_size, a.config.model.mode);
  std::optional<model::CheckpointData> pre;
  if (!a.pretrained.empty()) pre = model::load_checkpoint_data(a.pretrained);
  std::vector<std::size_t> all(eval_items.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  auto rows = eval::ablation_matrix(
      eval::ablation_combos(), [&](const model::ModalityMask& mask) {
        model::CSGazeNet<float> net(a.config.model);
        net.init(a.config.train.seed);
        if (pre) model::apply_encoder_weights(net, *pre);
        auto result = train::train_phase2(net, train_items, a.config.train, mask);
        model::apply_checkpoint(net, result.checkpoint);
        auto report = train::evaluate_split(net, eval_items, all, mask, nullptr);
        log << mask.tag() << "\tmacro_f1 " << report.macro_f1 << "\taccuracy " << report.accuracy
            << '\n';
        return report;
      });
  eval::save_ablation_table(rows, a.io.out_dir / "ablation.tsv");
  finish_run(m, {"ablation.tsv"}, timer, a.io);
  return rows;
}

// --- label-pairs -----------------------------------------------------------------

struct LabelPairsArgs {
  fs::path points;   // id, gaze landing points for both roles
  fs::path boxes;    // dyad manifest supplying the head boxes
  fs::path regions;  // optional third-region file enabling shared attention
  CommandIo io;
};

inline std::vector<synth::PairFlagsRow> cmd_label_pairs(const LabelPairsArgs& a,
                                                        std::ostream& log = std::cout) {
  WallTimer timer;
  std::vector<fs::path> inputs = {a.points, a.boxes};
  if (!a.regions.empty()) inputs.push_back(a.regions);
  auto m = begin_run("label-pairs", nlohmann::json::object(), 0, a.io, inputs);

  auto points = synth::load_gaze_points(a.points);
  auto manifest = load_manifest(a.boxes);
  std::map<std::string, const DyadSample*> by_id;
  for (const auto& s : manifest) by_id[s.id] = &s;
  std::map<std::string, std::vector<HeadBox>> regions;
  if (!a.regions.empty())
    for (const auto& r : synth::load_regions(a.regions)) regions[r.id].push_back(r.box);

  std::vector<synth::PairFlagsRow> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) raise("label-pairs: no head boxes for id '" + p.id + "'");
    synth::PairInputs in;
    in.p_gaze_x = p.px;
    in.p_gaze_y = p.py;
    in.a_gaze_x = p.ax;
    in.a_gaze_y = p.ay;
    in.principal_box = it->second->principal;
    in.associate_box = it->second->associate;
    auto rit = regions.find(p.id);
    if (rit != regions.end()) in.aux_regions = rit->second;
    rows.push_back({p.id, synth::derive_pair_labels(in)});
  }
  synth::save_pair_labels(rows, a.io.out_dir / "pair_labels.tsv");
  long laeo = 0, sa = 0;
  for (const auto& r : rows) {
    laeo += r.label.laeo ? 1 : 0;
    sa += r.label.sa ? 1 : 0;
  }
  log << "label-pairs: " << rows.size() << " pairs, " << laeo << " laeo, " << sa
      << " shared attention\n";
  finish_run(m, {"pair_labels.tsv"}, timer, a.io);
  return rows;
}

// --- context-cache ----------------------------------------------------------------

struct ContextCacheArgs {
  fs::path cache;  // existing cache file (export: required; import: optional)
  fs::path input;  // records to merge in (import only)
  CommandIo io;
};

// Rewrites a cache in canonical form (validated, duplicates collapsed).
inline std::size_t cmd_context_export(const ContextCacheArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  auto m = begin_run("context-cache export", nlohmann::json::object(), 0, a.io, {a.cache});
  auto records = ctx::import_cache(a.cache);
  ctx::export_cache(records, a.io.out_dir / "context_cache.tsv");
  log << "context-cache: exported " << records.size() << " records\n";
  finish_run(m, {"context_cache.tsv"}, timer, a.io);
  return records.size();
}

// Merges new records into a copy of the cache; conflicting texts are an error.
inline std::size_t cmd_context_import(const ContextCacheArgs& a, std::ostream& log = std::cout) {
  WallTimer timer;
  std::vector<fs::path> inputs = {a.input};
  if (!a.cache.empty()) inputs.push_back(a.cache);
  auto m = begin_run("context-cache import", nlohmann::json::object(), 0, a.io, inputs);
  auto merged = a.cache.empty() ? std::vector<ctx::ContextRecord>{} : ctx::import_cache(a.cache);
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < merged.size(); ++i) seen[merged[i].image_id] = i;
  std::size_t added = 0;
  for (const auto& r : ctx::import_cache(a.input)) {
    auto it = seen.find(r.image_id);
    if (it == seen.end()) {
      seen[r.image_id] = merged.size();
      merged.push_back(r);
      ++added;
      continue;
    }
    const auto& have = merged[it->second];
    if (have.text != r.text || have.prompt != r.prompt || have.source != r.source)
      raise("context-cache: conflicting records for id '" + r.image_id + "'");
  }
  ctx::export_cache(merged, a.io.out_dir / "context_cache.tsv");
  log << "context-cache: merged " << added << " new records, " << merged.size() << " total\n";
  finish_run(m, {"context_cache.tsv"}, timer, a.io);
  return merged.size();
}

}  // namespace csgaze::cli
