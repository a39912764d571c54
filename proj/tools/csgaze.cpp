// Command-line entry point: one multiplexed executable whose subcommands wire
// configs, datasets, training, evaluation, and reporting together.  Every
// subcommand resolves its configuration (file first, flags win), runs
// deterministically for a given (inputs, config, seed), and writes a
// run_manifest.json recording what it read and produced.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "csgaze/cli/commands.hpp"

namespace {

using namespace csgaze;

// Flag-side state shared by the subcommands; resolved into an AppConfig once
// the parse is done so file values and flag overrides compose predictably.
struct GlobalOpts {
  std::string config_file;
  std::string out_dir;
  bool force = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
  bool fixed_equal_alpha = false;
};

void add_global_flags(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--config", g.config_file, "JSON config file (model/train/generator)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", g.out_dir, "output directory for this run");
  cmd->add_flag("--force", g.force, "reuse a non-empty output directory");
  cmd->add_option("--seed", g.seed, "seed overriding the config file")
      ->each([&](const std::string&) { g.seed_set = true; });
  cmd->add_option("--mode", g.mode, "classifier head: multiclass or binary");
  cmd->add_flag("--fixed-equal-alpha", g.fixed_equal_alpha,
                "pin the face fusion weights at (0.5, 0.5)");
}

cli::AppConfig resolve_config(const GlobalOpts& g) {
  cli::AppConfig cfg;
  if (!g.config_file.empty()) cfg = cli::load_app_config(g.config_file);
  if (g.seed_set) cfg.train.seed = g.seed;
  if (!g.mode.empty()) cfg.model.mode = model::parse_net_mode(g.mode);
  if (g.fixed_equal_alpha) cfg.model.fixed_equal_alpha = true;
  cfg.model.validate();
  cfg.train.validate();
  cfg.generator.validate();
  return cfg;
}

cli::CommandIo resolve_io(const GlobalOpts& g) {
  return cli::CommandIo{g.out_dir, g.force, g.config_file};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-aware social gaze pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;

  // synth-gen
  int n_scenes = 100;
  auto* synth_gen = app.add_subcommand("synth-gen", "generate a labeled synthetic dyad dataset");
  add_global_flags(synth_gen, g);
  synth_gen->add_option("--n", n_scenes, "number of scenes")->check(CLI::PositiveNumber);

  // pretrain
  std::string gazefollow;
  auto* pretrain = app.add_subcommand("pretrain", "phase 1: gaze heatmap pretraining");
  add_global_flags(pretrain, g);
  pretrain->add_option("--gazefollow", gazefollow, "gaze-following manifest (tsv)")
      ->required()
      ->check(CLI::ExistingFile);

  // train
  std::string manifest, contexts, pretrained;
  bool from_scratch = false;
  auto* train_cmd = app.add_subcommand("train", "phase 2: social gaze classification");
  add_global_flags(train_cmd, g);
  train_cmd->add_option("--manifest", manifest, "dyad manifest (tsv)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--contexts", contexts, "context text cache (default: beside manifest)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--pretrained", pretrained, "phase-1 checkpoint for the encoder handoff")
      ->check(CLI::ExistingFile);
  train_cmd->add_flag("--from-scratch", from_scratch, "train without a phase-1 checkpoint");

  // eval
  std::string eval_ckpt, eval_manifest, eval_contexts, subset;
  int ap_runs = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  add_global_flags(eval_cmd, g);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval_manifest, "dyad manifest (tsv)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--contexts", eval_contexts, "context text cache")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--subset", subset,
                       "class subset: preset name or comma-separated indices");
  eval_cmd->add_option("--ap-runs", ap_runs,
                       "run the subsampled average-precision protocol this many times");

  // explain
  std::string ex_ckpt, ex_manifest, ex_contexts;
  auto* explain = app.add_subcommand("explain", "per-class modality attention report");
  add_global_flags(explain, g);
  explain->add_option("--checkpoint", ex_ckpt, "trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  explain->add_option("--manifest", ex_manifest, "dyad manifest (tsv)")
      ->required()
      ->check(CLI::ExistingFile);
  explain->add_option("--contexts", ex_contexts, "context text cache")
      ->check(CLI::ExistingFile);

  // ablate
  std::string ab_train, ab_eval, ab_pretrained;
  auto* ablate = app.add_subcommand("ablate", "train and score every modality combination");
  add_global_flags(ablate, g);
  ablate->add_option("--train-manifest", ab_train, "training dyad manifest")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--eval-manifest", ab_eval, "held-out dyad manifest")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--pretrained", ab_pretrained, "phase-1 checkpoint applied to every combo")
      ->check(CLI::ExistingFile);

  // label-pairs
  std::string lp_points, lp_boxes, lp_regions;
  auto* label_pairs = app.add_subcommand("label-pairs", "derive pair labels from gaze points");
  add_global_flags(label_pairs, g);
  label_pairs->add_option("--points", lp_points, "gaze landing points (tsv)")
      ->required()
      ->check(CLI::ExistingFile);
  label_pairs->add_option("--boxes", lp_boxes, "dyad manifest supplying head boxes")
      ->required()
      ->check(CLI::ExistingFile);
  label_pairs->add_option("--regions", lp_regions,
                          "third regions enabling shared attention (tsv)")
      ->check(CLI::ExistingFile);

  // context-cache {export, import}
  std::string cc_cache, cc_input;
  auto* context_cache = app.add_subcommand("context-cache", "manage context text caches");
  context_cache->require_subcommand(1);
  auto* cc_export = context_cache->add_subcommand("export", "rewrite a cache in canonical form");
  add_global_flags(cc_export, g);
  cc_export->add_option("--cache", cc_cache, "cache file to export")
      ->required()
      ->check(CLI::ExistingFile);
  auto* cc_import = context_cache->add_subcommand("import", "merge records into a cache copy");
  add_global_flags(cc_import, g);
  cc_import->add_option("--cache", cc_cache, "existing cache file (optional)")
      ->check(CLI::ExistingFile);
  cc_import->add_option("--in", cc_input, "records to merge")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_gen) {
      cli::SynthGenArgs a{resolve_config(g), n_scenes, g.seed_set ? g.seed : 1, resolve_io(g)};
      if (g.seed_set) a.config.train.seed = g.seed;
      a.seed = a.config.train.seed;
      cli::cmd_synth_gen(a);
    } else if (*pretrain) {
      cli::cmd_pretrain({resolve_config(g), gazefollow, resolve_io(g)});
    } else if (*train_cmd) {
      cli::cmd_train({resolve_config(g), manifest, contexts, pretrained, from_scratch,
                      resolve_io(g)});
    } else if (*eval_cmd) {
      cli::EvalArgs a{eval_ckpt, eval_manifest, eval_contexts, subset, ap_runs,
                      g.seed_set ? g.seed : 1, resolve_io(g)};
      cli::cmd_eval(a);
    } else if (*explain) {
      cli::cmd_explain({ex_ckpt, ex_manifest, ex_contexts, resolve_io(g)});
    } else if (*ablate) {
      cli::cmd_ablate({resolve_config(g), ab_train, ab_eval, ab_pretrained, resolve_io(g)});
    } else if (*label_pairs) {
      cli::cmd_label_pairs({lp_points, lp_boxes, lp_regions, resolve_io(g)});
    } else if (*cc_export) {
      cli::cmd_context_export({cc_cache, "", resolve_io(g)});
    } else if (*cc_import) {
      cli::cmd_context_import({cc_cache, cc_input, resolve_io(g)});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
