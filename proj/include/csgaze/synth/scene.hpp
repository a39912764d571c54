#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"
#include "csgaze/rng.hpp"

namespace csgaze::synth {

// Two-person scenes on the unit canvas.  Heads and objects are discs; each
// person carries a unit gaze direction.  All label logic is pure geometry,
// so it can serve as ground-truth oracle for rendered datasets.

struct Person {
  double x = 0, y = 0;   // head center
  double r = 0;          // head radius
  double dx = 1, dy = 0; // unit gaze direction

  void validate(const std::string& what) const {
    double n = std::sqrt(dx * dx + dy * dy);
    if (std::abs(n - 1.0) > 1e-9) raise(what + ": gaze direction must be a unit vector");
    if (r <= 0) raise(what + ": head radius must be positive");
  }
};

struct SceneObject {
  double x = 0, y = 0, r = 0;
};

struct SyntheticScene {
  std::string id;
  Person principal;
  Person associate;
  std::vector<SceneObject> objects;
  GazeClass label = GazeClass::kVoid;
  PairLabel pair;
  double principal_gaze_x = 0, principal_gaze_y = 0;  // resolved landing points
  double associate_gaze_x = 0, associate_gaze_y = 0;
};

// A person "looks at" a disc when the disc center lies within `radius` of
// the gaze ray's supporting line and in the forward half-plane.  The test
// deliberately ignores occlusion: it asks about the ray alone.
inline bool looks_at(double px, double py, double dx, double dy, double cx, double cy, double cr) {
  double vx = cx - px, vy = cy - py;
  double along = vx * dx + vy * dy;
  if (!(along > 0)) return false;
  double perp = std::abs(vx * dy - vy * dx);  // |v x d| with |d| = 1
  return perp <= cr;
}

inline bool looks_at(const Person& p, double cx, double cy, double cr) {
  return looks_at(p.x, p.y, p.dx, p.dy, cx, cy, cr);
}

// Gaze pattern from ray geometry.  Precedence when several predicates hold:
// mutual, then share, then single, then miss; void otherwise.  Swapping the
// two roles therefore exchanges single and miss and fixes the other classes.
inline GazeClass derive_gp_label(const SyntheticScene& s) {
  bool p_at_a = looks_at(s.principal, s.associate.x, s.associate.y, s.associate.r);
  bool a_at_p = looks_at(s.associate, s.principal.x, s.principal.y, s.principal.r);
  if (p_at_a && a_at_p) return GazeClass::kMutual;
  for (const auto& o : s.objects)
    if (looks_at(s.principal, o.x, o.y, o.r) && looks_at(s.associate, o.x, o.y, o.r))
      return GazeClass::kShare;
  if (p_at_a) return GazeClass::kSingle;
  if (a_at_p) return GazeClass::kMiss;
  return GazeClass::kVoid;
}

// Nearest forward disc hit along a person's gaze ray; the landing point is
// that disc's center.  With no hit the gaze lands on open canvas, at 55% of
// the way to the border (clamped into [0,1]).
inline std::pair<double, double> resolve_gaze_target(const SyntheticScene& s, bool for_principal) {
  const Person& p = for_principal ? s.principal : s.associate;
  const Person& other = for_principal ? s.associate : s.principal;
  double best_t = -1;
  double bx = 0, by = 0;
  auto consider = [&](double cx, double cy, double cr) {
    if (!looks_at(p, cx, cy, cr)) return;
    double t = (cx - p.x) * p.dx + (cy - p.y) * p.dy;
    if (best_t < 0 || t < best_t) {
      best_t = t;
      bx = cx;
      by = cy;
    }
  };
  consider(other.x, other.y, other.r);
  for (const auto& o : s.objects) consider(o.x, o.y, o.r);
  if (best_t >= 0) return {bx, by};
  // Distance to the canvas border along the ray.
  double t_exit = 4.0;
  if (p.dx > 1e-12) t_exit = std::min(t_exit, (1.0 - p.x) / p.dx);
  if (p.dx < -1e-12) t_exit = std::min(t_exit, (0.0 - p.x) / p.dx);
  if (p.dy > 1e-12) t_exit = std::min(t_exit, (1.0 - p.y) / p.dy);
  if (p.dy < -1e-12) t_exit = std::min(t_exit, (0.0 - p.y) / p.dy);
  double t = 0.55 * std::max(t_exit, 0.0);
  return {std::clamp(p.x + t * p.dx, 0.0, 1.0), std::clamp(p.y + t * p.dy, 0.0, 1.0)};
}

// --- pair labels from gaze landing points --------------------------------

struct PairInputs {
  double p_gaze_x = 0, p_gaze_y = 0;  // where the principal's gaze lands
  double a_gaze_x = 0, a_gaze_y = 0;
  HeadBox principal_box;
  HeadBox associate_box;
  std::vector<HeadBox> aux_regions;  // third regions eligible for shared attention
};

inline PairLabel derive_pair_labels(const PairInputs& in) {
  PairLabel out;
  out.lah_p_to_a = in.associate_box.contains(in.p_gaze_x, in.p_gaze_y);
  out.lah_a_to_p = in.principal_box.contains(in.a_gaze_x, in.a_gaze_y);
  out.laeo = out.lah_p_to_a && out.lah_a_to_p;
  if (!out.laeo) {
    for (const auto& reg : in.aux_regions) {
      if (reg.contains(in.p_gaze_x, in.p_gaze_y) && reg.contains(in.a_gaze_x, in.a_gaze_y)) {
        out.sa = true;
        break;
      }
    }
  }
  out.validate();
  return out;
}

// --- scene construction ---------------------------------------------------

struct GeneratorConfig {
  int image_size = 224;
  double head_radius_min = 0.055;
  double head_radius_max = 0.075;
  double object_radius_min = 0.045;
  double object_radius_max = 0.06;
  int object_count_min = 1;
  int object_count_max = 2;
  double box_scale = 1.25;        // head box half-side = box_scale * radius
  double aim_jitter = 0.4;        // aim point within this fraction of target radius
  double clear_margin = 1.4;      // void rays keep perp distance > margin * radius
  double min_x_gap = 0.12;        // horizontal separation between the two heads
  double wedge_half_angle_deg = 25.0;
  int max_retries = 500;
  std::array<double, kNumGazeClasses> class_mix = {0.2, 0.2, 0.2, 0.2, 0.2};

  void validate() const {
    require(image_size >= 32, "generator: image size too small");
    require(head_radius_min > 0 && head_radius_max >= head_radius_min, "generator: bad head radii");
    require(object_count_min >= 0 && object_count_max >= object_count_min,
            "generator: bad object counts");
    double sum = 0;
    for (double w : class_mix) {
      require(w >= 0, "generator: negative class weight");
      sum += w;
    }
    require(sum > 0, "generator: class mix sums to zero");
    require(object_count_min >= 1 || class_mix[static_cast<int>(GazeClass::kShare)] == 0,
            "generator: share class requires at least one object");
  }
};

inline HeadBox head_box(const Person& p, double box_scale) {
  double h = box_scale * p.r;
  HeadBox b{std::clamp(p.x - h, 0.0, 1.0), std::clamp(p.y - h, 0.0, 1.0),
            std::clamp(p.x + h, 0.0, 1.0), std::clamp(p.y + h, 0.0, 1.0)};
  return b;
}

inline HeadBox object_box(const SceneObject& o, double box_scale) {
  double h = box_scale * o.r;
  return HeadBox{std::clamp(o.x - h, 0.0, 1.0), std::clamp(o.y - h, 0.0, 1.0),
                 std::clamp(o.x + h, 0.0, 1.0), std::clamp(o.y + h, 0.0, 1.0)};
}

namespace detail {

// Aim a person at a point drawn near a target center; guarantees a ray hit
// because the jitter stays well inside the target radius.
inline void aim_at(Person& p, Rng& rng, double tx, double ty, double tr, double jitter) {
  double a = rng.uniform(0, 6.283185307179586);
  double rad = jitter * tr * std::sqrt(rng.uniform());
  double gx = tx + rad * std::cos(a), gy = ty + rad * std::sin(a);
  double dx = gx - p.x, dy = gy - p.y;
  double n = std::sqrt(dx * dx + dy * dy);
  require(n > 1e-9, "aim_at: degenerate direction");
  p.dx = dx / n;
  p.dy = dy / n;
}

// A direction that keeps a clear margin from every listed disc (used for
// void gazes and for the non-returned side of single/miss scenes).
inline bool aim_clear(Person& p, Rng& rng, const std::vector<SceneObject>& avoid, double margin,
                      int tries) {
  for (int i = 0; i < tries; ++i) {
    double a = rng.uniform(0, 6.283185307179586);
    p.dx = std::cos(a);
    p.dy = std::sin(a);
    bool ok = true;
    for (const auto& d : avoid) {
      if (looks_at(p, d.x, d.y, margin * d.r)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

inline bool place_discs(SyntheticScene& s, const GeneratorConfig& cfg, Rng& rng) {
  // One head per canvas half so left/right wording is never ambiguous;
  // which half holds the principal is random.
  bool principal_left = rng.uniform() < 0.5;
  auto place_head = [&](Person& p, double lo, double hi) {
    p.r = rng.uniform(cfg.head_radius_min, cfg.head_radius_max);
    double m = cfg.box_scale * p.r + 0.02;
    p.x = rng.uniform(std::max(lo, m), std::min(hi, 1.0 - m));
    p.y = rng.uniform(m, 1.0 - m);
  };
  place_head(s.principal, principal_left ? 0.0 : 0.5 + cfg.min_x_gap / 2,
             principal_left ? 0.5 - cfg.min_x_gap / 2 : 1.0);
  place_head(s.associate, principal_left ? 0.5 + cfg.min_x_gap / 2 : 0.0,
             principal_left ? 1.0 : 0.5 - cfg.min_x_gap / 2);
  double hx = s.principal.x - s.associate.x, hy = s.principal.y - s.associate.y;
  if (std::sqrt(hx * hx + hy * hy) < 2.6 * (s.principal.r + s.associate.r)) return false;

  int n_obj = rng.uniform_int(cfg.object_count_min, cfg.object_count_max);
  s.objects.clear();
  for (int i = 0; i < n_obj; ++i) {
    SceneObject o;
    o.r = rng.uniform(cfg.object_radius_min, cfg.object_radius_max);
    bool placed = false;
    for (int t = 0; t < 60 && !placed; ++t) {
      double m = cfg.box_scale * o.r + 0.02;
      o.x = rng.uniform(m, 1.0 - m);
      o.y = rng.uniform(m, 1.0 - m);
      placed = true;
      for (const Person* p : {&s.principal, &s.associate}) {
        double ddx = o.x - p->x, ddy = o.y - p->y;
        if (std::sqrt(ddx * ddx + ddy * ddy) < 2.0 * (o.r + p->r)) placed = false;
      }
      for (const auto& other : s.objects) {
        double ddx = o.x - other.x, ddy = o.y - other.y;
        if (std::sqrt(ddx * ddx + ddy * ddy) < 1.8 * (o.r + other.r)) placed = false;
      }
    }
    if (!placed) return false;
    s.objects.push_back(o);
  }
  return true;
}

inline bool aim_for_class(SyntheticScene& s, const GeneratorConfig& cfg, Rng& rng, GazeClass want) {
  // Discs the "clear" rays must avoid, from each person's point of view.
  auto avoid_for = [&](bool for_principal, bool include_objects) {
    std::vector<SceneObject> v;
    const Person& other = for_principal ? s.associate : s.principal;
    v.push_back({other.x, other.y, other.r});
    if (include_objects)
      for (const auto& o : s.objects) v.push_back(o);
    return v;
  };
  switch (want) {
    case GazeClass::kMutual:
      aim_at(s.principal, rng, s.associate.x, s.associate.y, s.associate.r, cfg.aim_jitter);
      aim_at(s.associate, rng, s.principal.x, s.principal.y, s.principal.r, cfg.aim_jitter);
      return true;
    case GazeClass::kShare: {
      if (s.objects.empty()) return false;
      const auto& o = s.objects[rng.uniform_index(s.objects.size())];
      aim_at(s.principal, rng, o.x, o.y, o.r, cfg.aim_jitter);
      aim_at(s.associate, rng, o.x, o.y, o.r, cfg.aim_jitter);
      return true;
    }
    case GazeClass::kSingle:
      aim_at(s.principal, rng, s.associate.x, s.associate.y, s.associate.r, cfg.aim_jitter);
      return aim_clear(s.associate, rng, avoid_for(false, false), cfg.clear_margin, 100);
    case GazeClass::kMiss:
      aim_at(s.associate, rng, s.principal.x, s.principal.y, s.principal.r, cfg.aim_jitter);
      return aim_clear(s.principal, rng, avoid_for(true, false), cfg.clear_margin, 100);
    case GazeClass::kVoid:
      return aim_clear(s.principal, rng, avoid_for(true, true), cfg.clear_margin, 100) &&
             aim_clear(s.associate, rng, avoid_for(false, true), cfg.clear_margin, 100);
  }
  return false;
}

}  // namespace detail

inline PairLabel scene_pair_labels(const SyntheticScene& s, double box_scale) {
  PairInputs in;
  in.p_gaze_x = s.principal_gaze_x;
  in.p_gaze_y = s.principal_gaze_y;
  in.a_gaze_x = s.associate_gaze_x;
  in.a_gaze_y = s.associate_gaze_y;
  in.principal_box = head_box(s.principal, box_scale);
  in.associate_box = head_box(s.associate, box_scale);
  for (const auto& o : s.objects) in.aux_regions.push_back(object_box(o, box_scale));
  return derive_pair_labels(in);
}

// Draws a class from the configured mix, constructs matching geometry, then
// verifies it against the ray oracle (and laeo consistency) before
// accepting.  Rejected attempts are resampled from the same stream, so the
// result is a pure function of (config, rng state).
inline SyntheticScene sample_scene(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> mix(cfg.class_mix.begin(), cfg.class_mix.end());
  auto want = static_cast<GazeClass>(rng.categorical(mix));
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    SyntheticScene s;
    if (!detail::place_discs(s, cfg, rng)) continue;
    if (!detail::aim_for_class(s, cfg, rng, want)) continue;
    if (derive_gp_label(s) != want) continue;
    auto [ppx, ppy] = resolve_gaze_target(s, true);
    auto [apx, apy] = resolve_gaze_target(s, false);
    s.principal_gaze_x = ppx;
    s.principal_gaze_y = ppy;
    s.associate_gaze_x = apx;
    s.associate_gaze_y = apy;
    PairLabel pair = scene_pair_labels(s, cfg.box_scale);
    if (pair.laeo != (want == GazeClass::kMutual)) continue;
    if (want == GazeClass::kShare && !pair.sa) continue;
    s.label = want;
    s.pair = pair;
    s.principal.validate("sampled scene (principal)");
    s.associate.validate("sampled scene (associate)");
    return s;
  }
  raise("sample_scene: could not realize class '" + std::string(to_string(want)) + "' after " +
        std::to_string(cfg.max_retries) + " attempts");
}

}  // namespace csgaze::synth
