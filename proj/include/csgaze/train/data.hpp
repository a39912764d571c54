#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "csgaze/context/provider.hpp"
#include "csgaze/core/heatmap.hpp"
#include "csgaze/core/image.hpp"
#include "csgaze/core/manifest.hpp"
#include "csgaze/model/heatmap_head.hpp"
#include "csgaze/model/net.hpp"

namespace csgaze::train {

// In-memory training sets.  Rasters stay as bytes until the moment a
// sample enters the model, which keeps a few thousand scenes comfortably in
// memory on a small machine.

struct ClassifyItem {
  std::string id;
  int label = 0;  // class index, or 0/1 in binary mode
  Raster scene, face_p, face_a;
  std::string context;
};

struct GazeItem {
  std::string id;
  std::size_t image_index = 0;  // into GazeDataset::images (scenes are shared)
  Raster face;
  HeadBox head;
  double gaze_x = 0, gaze_y = 0;
};

struct GazeDataset {
  std::vector<Raster> images;
  std::vector<GazeItem> items;
};

inline std::map<std::string, std::string> load_context_texts(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (auto& r : ctx::import_cache(path)) out[r.image_id] = r.text;
  return out;
}

inline std::vector<ClassifyItem> load_classify_dataset(const std::filesystem::path& manifest_path,
                                                       const std::filesystem::path& contexts_path,
                                                       int image_size, model::NetMode mode) {
  auto samples = load_manifest(manifest_path);
  auto contexts = load_context_texts(contexts_path);
  std::filesystem::path base = manifest_path.parent_path();
  std::vector<ClassifyItem> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    ClassifyItem item;
    item.id = s.id;
    if (mode == model::NetMode::kBinary) {
      require(s.binary_label >= 0, "sample " + s.id + ": binary mode needs a laeo label");
      item.label = s.binary_label;
    } else {
      item.label = static_cast<int>(s.label);
    }
    Raster img = read_ppm(base / s.image_path);
    item.face_p = crop_face(img, s.principal, image_size);
    item.face_a = crop_face(img, s.associate, image_size);
    item.scene = resize(img, image_size);
    auto it = contexts.find(s.id);
    require(it != contexts.end(), "sample " + s.id + ": no context text available");
    item.context = it->second;
    out.push_back(std::move(item));
  }
  return out;
}

inline GazeDataset load_gaze_dataset(const std::filesystem::path& manifest_path, int image_size) {
  auto samples = load_gazefollow_manifest(manifest_path);
  std::filesystem::path base = manifest_path.parent_path();
  GazeDataset ds;
  std::map<std::string, std::size_t> image_idx;
  std::string pending_path;  // original raster kept only while consecutive
  Raster pending;            // samples reference the same image
  for (const auto& s : samples) {
    auto it = image_idx.find(s.image_path);
    if (it == image_idx.end()) {
      pending = read_ppm(base / s.image_path);
      pending_path = s.image_path;
      ds.images.push_back(resize(pending, image_size));
      it = image_idx.emplace(s.image_path, ds.images.size() - 1).first;
    } else if (pending_path != s.image_path) {
      pending = read_ppm(base / s.image_path);
      pending_path = s.image_path;
    }
    GazeItem item;
    item.id = s.id;
    item.face = crop_face(pending, s.head, image_size);
    item.image_index = it->second;
    item.head = s.head;
    item.gaze_x = s.gaze_x;
    item.gaze_y = s.gaze_y;
    ds.items.push_back(std::move(item));
  }
  return ds;
}

template <typename S>
inline nn::Tensor<S> raster_to_tensor(const Raster& img) {
  nn::Tensor<S> t({3, img.height, img.width});
  const S inv = S(1) / S(255);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.px(x, y);
      t.at(0, y, x) = static_cast<S>(p[0]) * inv;
      t.at(1, y, x) = static_cast<S>(p[1]) * inv;
      t.at(2, y, x) = static_cast<S>(p[2]) * inv;
    }
  return t;
}

template <typename S>
inline model::NetInput<S> make_net_input(const ClassifyItem& item) {
  model::NetInput<S> in;
  in.scene = raster_to_tensor<S>(item.scene);
  in.face_p = raster_to_tensor<S>(item.face_p);
  in.face_a = raster_to_tensor<S>(item.face_a);
  in.context_text = item.context;
  return in;
}

// Seeded validation split: the first `fraction` slice of a shuffled index
// list is held out; everything else trains.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

inline Split make_split(std::size_t n, double fraction, std::uint64_t seed) {
  require(n >= 2, "split: need at least two samples");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng = Rng(seed).fork("val-split");
  rng.shuffle(idx);
  std::size_t n_val = static_cast<std::size_t>(fraction * static_cast<double>(n));
  n_val = std::max<std::size_t>(1, std::min(n_val, n - 1));
  Split s;
  s.val.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  return s;
}

}  // namespace csgaze::train
