#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"

namespace csgaze {

// 8-bit RGB raster, row-major, interleaved channels.  Pixel (x, y) has its
// red byte at data[3 * (y * width + x)].  Keeping rasters in bytes (rather
// than floats) bounds dataset memory; conversion to [0,1] floats happens at
// the model boundary.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0) {
    require(w > 0 && h > 0, "raster: dimensions must be positive");
  }

  std::uint8_t* px(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = px(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

// --- binary PPM (P6), maxval 255 ---------------------------------------

inline void write_ppm(const Raster& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise("cannot write image: " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) raise("image write failed: " + path.string());
}

inline Raster read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise("cannot open image: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") raise("not a binary ppm: " + path.string());
  auto next_token = [&]() -> long {
    // PPM allows '#' comments between header tokens.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    return v;
  };
  long w = next_token(), h = next_token(), maxv = next_token();
  if (!in || w <= 0 || h <= 0) raise("bad ppm header: " + path.string());
  if (maxv != 255) raise("unsupported ppm maxval (want 255): " + path.string());
  in.get();  // single whitespace byte after maxval
  Raster img(static_cast<int>(w), static_cast<int>(h));
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    raise("truncated ppm payload: " + path.string());
  return img;
}

// --- sampling ------------------------------------------------------------

// Bilinear sample of one channel at continuous pixel coordinates, where
// integer coordinates address pixel centers.  Outside coordinates clamp to
// the border.
inline double sample_bilinear(const Raster& img, double x, double y, int ch) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  double fx = x - x0, fy = y - y0;
  double v00 = img.px(x0, y0)[ch], v10 = img.px(x1, y0)[ch];
  double v01 = img.px(x0, y1)[ch], v11 = img.px(x1, y1)[ch];
  double top = v00 + (v10 - v00) * fx;
  double bot = v01 + (v11 - v01) * fx;
  return top + (bot - top) * fy;
}

// Resample a normalized-coordinate window of `src` onto a size x size
// raster.  The window is mapped so that output pixel centers spread evenly
// across it; values are rounded to the nearest byte.
inline Raster resample_window(const Raster& src, double wx0, double wy0, double wx1, double wy1,
                              int size) {
  require(size > 0, "resample: size must be positive");
  require(wx1 > wx0 && wy1 > wy0, "resample: window must have positive extent");
  Raster out(size, size);
  double sx0 = wx0 * src.width - 0.5, sy0 = wy0 * src.height - 0.5;
  double sw = (wx1 - wx0) * src.width, sh = (wy1 - wy0) * src.height;
  for (int y = 0; y < size; ++y) {
    double sy = sy0 + (y + 0.5) * sh / size;
    for (int x = 0; x < size; ++x) {
      double sx = sx0 + (x + 0.5) * sw / size;
      for (int ch = 0; ch < 3; ++ch) {
        double v = sample_bilinear(src, sx, sy, ch);
        out.px(x, y)[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

// Square face crop: the head box is expanded to a square around its center
// (side = max extent), clipped to the canvas, then resampled.
inline Raster crop_face(const Raster& img, const HeadBox& box, int size = 224) {
  box.validate("crop_face");
  double side = std::max(box.x1 - box.x0, box.y1 - box.y0);
  double cx = box.cx(), cy = box.cy();
  double x0 = std::clamp(cx - side / 2, 0.0, 1.0);
  double x1 = std::clamp(cx + side / 2, 0.0, 1.0);
  double y0 = std::clamp(cy - side / 2, 0.0, 1.0);
  double y1 = std::clamp(cy + side / 2, 0.0, 1.0);
  return resample_window(img, x0, y0, x1, y1, size);
}

inline Raster resize(const Raster& img, int size) {
  if (img.width == size && img.height == size) return img;
  return resample_window(img, 0.0, 0.0, 1.0, 1.0, size);
}

}  // namespace csgaze
