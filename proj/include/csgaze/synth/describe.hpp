#pragma once

#include <string>

#include "csgaze/synth/scene.hpp"

namespace csgaze::synth {

// Textual scene context, phrased the way a captioning model would answer
// "describe how the persons are interacting".  The wording is purely
// spatial/relational: it names people by canvas side only (never by role or
// color) and never states a gaze-pattern tag.  Relation clauses come first
// so that token truncation drops only the less informative tail.

namespace detail {

enum class TargetKind { kOtherHead, kObject, kNone };

struct Resolved {
  TargetKind kind = TargetKind::kNone;
  std::size_t object_index = 0;
};

inline Resolved resolve_entity(const SyntheticScene& s, bool for_principal) {
  const Person& p = for_principal ? s.principal : s.associate;
  const Person& other = for_principal ? s.associate : s.principal;
  Resolved best;
  double best_t = -1;
  auto consider = [&](double cx, double cy, double cr, TargetKind kind, std::size_t idx) {
    if (!looks_at(p, cx, cy, cr)) return;
    double t = (cx - p.x) * p.dx + (cy - p.y) * p.dy;
    if (best_t < 0 || t < best_t) {
      best_t = t;
      best.kind = kind;
      best.object_index = idx;
    }
  };
  consider(other.x, other.y, other.r, TargetKind::kOtherHead, 0);
  for (std::size_t i = 0; i < s.objects.size(); ++i)
    consider(s.objects[i].x, s.objects[i].y, s.objects[i].r, TargetKind::kObject, i);
  return best;
}

inline const char* compass_word(double dx, double dy) {
  // Screen coordinates: y grows downward, so "up" means dy < 0.
  static const char* words[8] = {"the right",       "the lower right", "straight down",
                                 "the lower left",  "the left",        "the upper left",
                                 "straight up",     "the upper right"};
  double a = std::atan2(dy, dx);  // [-pi, pi]
  int sector = static_cast<int>(std::lround(a / (3.14159265358979323846 / 4)));
  return words[(sector + 8) % 8];
}

}  // namespace detail

inline std::string describe_scene(const SyntheticScene& s) {
  bool principal_left = s.principal.x < s.associate.x;
  const char* p_name = principal_left ? "the left person" : "the right person";
  const char* a_name = principal_left ? "the right person" : "the left person";

  auto p_res = detail::resolve_entity(s, true);
  auto a_res = detail::resolve_entity(s, false);

  std::string text;
  auto add = [&](const std::string& clause) {
    if (!text.empty()) text += ' ';
    text += clause;
  };

  using detail::TargetKind;
  bool shared_object = p_res.kind == TargetKind::kObject && a_res.kind == TargetKind::kObject &&
                       p_res.object_index == a_res.object_index;
  if (shared_object) {
    add("both persons look at the same object.");
  } else {
    auto person_clause = [&](const detail::Resolved& r, const char* self, const char* other) {
      switch (r.kind) {
        case TargetKind::kOtherHead:
          return std::string(self) + " looks at " + other + ".";
        case TargetKind::kObject:
          return std::string(self) + " looks at an object.";
        case TargetKind::kNone:
          return std::string(self) + " gazes into empty space.";
      }
      return std::string();
    };
    add(person_clause(p_res, p_name, a_name));
    add(person_clause(a_res, a_name, p_name));
  }
  add(std::string(p_name) + " faces " + detail::compass_word(s.principal.dx, s.principal.dy) + ".");
  add(std::string(a_name) + " faces " + detail::compass_word(s.associate.dx, s.associate.dy) + ".");
  return text;
}

}  // namespace csgaze::synth
