#pragma once

#include <array>
#include <cmath>

#include "csgaze/core/image.hpp"
#include "csgaze/synth/scene.hpp"

namespace csgaze::synth {

// Deterministic rasterization of a scene.  Heads are colored discs with a
// darker wedge marking the gaze direction (the only orientation cue in the
// image); objects are filled squares from a fixed palette.  The principal
// is always the green head, the associate the pink one, which makes the
// role binding recoverable from pixels.

struct Rgb {
  std::uint8_t r, g, b;
};

inline constexpr Rgb kBackground{230, 230, 230};
inline constexpr Rgb kPrincipalBody{40, 160, 70};
inline constexpr Rgb kPrincipalWedge{10, 70, 25};
inline constexpr Rgb kAssociateBody{225, 120, 160};
inline constexpr Rgb kAssociateWedge{130, 30, 60};
inline constexpr std::array<Rgb, 4> kObjectPalette = {
    Rgb{70, 110, 200}, Rgb{230, 170, 50}, Rgb{150, 80, 190}, Rgb{50, 170, 170}};

inline Raster render_scene(const SyntheticScene& s, int size, double wedge_half_angle_deg = 25.0) {
  require(size >= 32, "render_scene: size too small");
  double cos_half = std::cos(wedge_half_angle_deg * 3.14159265358979323846 / 180.0);
  Raster img(size, size);
  for (int py = 0; py < size; ++py) {
    double y = (py + 0.5) / size;
    for (int px = 0; px < size; ++px) {
      double x = (px + 0.5) / size;
      Rgb c = kBackground;
      for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const auto& o = s.objects[i];
        if (std::abs(x - o.x) <= o.r && std::abs(y - o.y) <= o.r)
          c = kObjectPalette[i % kObjectPalette.size()];
      }
      for (int who = 0; who < 2; ++who) {
        const Person& p = who == 0 ? s.principal : s.associate;
        double vx = x - p.x, vy = y - p.y;
        double d2 = vx * vx + vy * vy;
        if (d2 > p.r * p.r) continue;
        bool in_wedge = false;
        double d = std::sqrt(d2);
        if (d > 1e-9 && (vx * p.dx + vy * p.dy) / d >= cos_half) in_wedge = true;
        if (who == 0)
          c = in_wedge ? kPrincipalWedge : kPrincipalBody;
        else
          c = in_wedge ? kAssociateWedge : kAssociateBody;
      }
      img.set(px, py, c.r, c.g, c.b);
    }
  }
  return img;
}

}  // namespace csgaze::synth
