#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "csgaze/context/provider.hpp"
#include "csgaze/core/manifest.hpp"
#include "csgaze/synth/describe.hpp"
#include "csgaze/synth/render.hpp"
#include "csgaze/synth/scene.hpp"

namespace csgaze::synth {

// Renders a batch of sampled scenes into a self-contained dataset directory:
//
//   images/<id>.ppm     rasters
//   manifest.tsv        dyad samples (boxes, class label, laeo flag)
//   gazefollow.tsv      two gaze-following samples per scene (one per person)
//   contexts.tsv        interaction descriptions, context-cache format
//   gaze_points.tsv     resolved gaze landing points
//   regions.tsv         object boxes (shared-attention regions)
//   pair_labels.tsv     ground-truth pair flags

struct DatasetSummary {
  int n_scenes = 0;
  std::array<int, kNumGazeClasses> class_counts = {};
};

namespace detail {
inline const char* kPairHeader = "id\tlah_p_to_a\tlah_a_to_p\tlaeo\tsa";
inline const char* kPointsHeader = "id\tpx\tpy\tax\tay";
inline const char* kRegionsHeader = "id\tx0\ty0\tx1\ty1";
}  // namespace detail

struct PairFlagsRow {
  std::string id;
  PairLabel label;
};

inline void save_pair_labels(const std::vector<PairFlagsRow>& rows,
                             const std::filesystem::path& path) {
  std::string text = detail::kPairHeader;
  text += '\n';
  for (const auto& r : rows) {
    r.label.validate();
    text += escape_field(r.id);
    for (bool b : {r.label.lah_p_to_a, r.label.lah_a_to_p, r.label.laeo, r.label.sa}) {
      text += '\t';
      text += b ? '1' : '0';
    }
    text += '\n';
  }
  write_text_file(path, text);
}

struct GazePointsRow {
  std::string id;
  double px = 0, py = 0, ax = 0, ay = 0;
};

inline void save_gaze_points(const std::vector<GazePointsRow>& rows,
                             const std::filesystem::path& path) {
  std::string text = detail::kPointsHeader;
  text += '\n';
  for (const auto& r : rows) {
    text += escape_field(r.id);
    for (double v : {r.px, r.py, r.ax, r.ay}) {
      text += '\t';
      text += fmt_f64(v);
    }
    text += '\n';
  }
  write_text_file(path, text);
}

inline std::vector<GazePointsRow> load_gaze_points(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != detail::kPointsHeader)
    raise("bad gaze points header: " + path.string());
  std::vector<GazePointsRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string at = path.string() + ":" + std::to_string(i + 1);
    auto f = split_tabs(lines[i]);
    if (f.size() != 5) raise("malformed gaze points line at " + at);
    GazePointsRow r;
    r.id = unescape_field(f[0], "id at " + at);
    r.px = parse_f64(f[1], "px at " + at);
    r.py = parse_f64(f[2], "py at " + at);
    r.ax = parse_f64(f[3], "ax at " + at);
    r.ay = parse_f64(f[4], "ay at " + at);
    out.push_back(std::move(r));
  }
  return out;
}

struct RegionRow {
  std::string id;
  HeadBox box;
};

inline void save_regions(const std::vector<RegionRow>& rows, const std::filesystem::path& path) {
  std::string text = detail::kRegionsHeader;
  text += '\n';
  for (const auto& r : rows) {
    text += escape_field(r.id);
    for (double v : {r.box.x0, r.box.y0, r.box.x1, r.box.y1}) {
      text += '\t';
      text += fmt_f64(v);
    }
    text += '\n';
  }
  write_text_file(path, text);
}

inline std::vector<RegionRow> load_regions(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != detail::kRegionsHeader)
    raise("bad regions header: " + path.string());
  std::vector<RegionRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string at = path.string() + ":" + std::to_string(i + 1);
    auto f = split_tabs(lines[i]);
    if (f.size() != 5) raise("malformed regions line at " + at);
    RegionRow r;
    r.id = unescape_field(f[0], "id at " + at);
    r.box.x0 = parse_f64(f[1], "x0 at " + at);
    r.box.y0 = parse_f64(f[2], "y0 at " + at);
    r.box.x1 = parse_f64(f[3], "x1 at " + at);
    r.box.y1 = parse_f64(f[4], "y1 at " + at);
    r.box.validate("region at " + at);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string scene_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05d", index);
  return buf;
}

inline DatasetSummary export_dataset(const GeneratorConfig& cfg, int n_scenes, std::uint64_t seed,
                                     const std::filesystem::path& out_dir) {
  cfg.validate();
  require(n_scenes > 0, "export_dataset: need at least one scene");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");

  std::vector<DyadSample> manifest;
  std::vector<GazeFollowSample> gazefollow;
  std::vector<ctx::ContextRecord> contexts;
  std::vector<PairFlagsRow> pairs;
  std::vector<GazePointsRow> points;
  std::vector<RegionRow> regions;
  DatasetSummary summary;
  summary.n_scenes = n_scenes;

  Rng rng = Rng(seed).fork("scene-generator");
  for (int i = 0; i < n_scenes; ++i) {
    SyntheticScene s = sample_scene(cfg, rng);
    s.id = scene_id(i);
    write_ppm(render_scene(s, cfg.image_size, cfg.wedge_half_angle_deg),
              out_dir / "images" / (s.id + ".ppm"));

    DyadSample d;
    d.id = s.id;
    d.image_path = "images/" + s.id + ".ppm";
    d.principal = head_box(s.principal, cfg.box_scale);
    d.associate = head_box(s.associate, cfg.box_scale);
    d.label = s.label;
    d.binary_label = s.pair.laeo ? 1 : 0;
    d.validate();
    manifest.push_back(d);
    summary.class_counts[static_cast<std::size_t>(s.label)]++;

    for (bool principal : {true, false}) {
      GazeFollowSample g;
      g.id = s.id + (principal ? "_p" : "_a");
      g.image_path = d.image_path;
      g.head = principal ? d.principal : d.associate;
      g.gaze_x = principal ? s.principal_gaze_x : s.associate_gaze_x;
      g.gaze_y = principal ? s.principal_gaze_y : s.associate_gaze_y;
      g.validate();
      gazefollow.push_back(g);
    }

    contexts.push_back({s.id, ctx::kDefaultPrompt, "synthetic-template", describe_scene(s)});
    pairs.push_back({s.id, s.pair});
    points.push_back({s.id, s.principal_gaze_x, s.principal_gaze_y, s.associate_gaze_x,
                      s.associate_gaze_y});
    for (const auto& o : s.objects) regions.push_back({s.id, object_box(o, cfg.box_scale)});
  }

  save_manifest(manifest, out_dir / "manifest.tsv");
  save_gazefollow_manifest(gazefollow, out_dir / "gazefollow.tsv");
  ctx::export_cache(contexts, out_dir / "contexts.tsv");
  save_pair_labels(pairs, out_dir / "pair_labels.tsv");
  save_gaze_points(points, out_dir / "gaze_points.tsv");
  save_regions(regions, out_dir / "regions.tsv");
  return summary;
}

}  // namespace csgaze::synth
