#pragma once

#include <string>

#include <json.hpp>

#include "csgaze/common.hpp"
#include "csgaze/model/config.hpp"
#include "csgaze/synth/scene.hpp"
#include "csgaze/train/config.hpp"

namespace csgaze::synth {

inline void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"head_radius_min", c.head_radius_min},
                     {"head_radius_max", c.head_radius_max},
                     {"object_radius_min", c.object_radius_min},
                     {"object_radius_max", c.object_radius_max},
                     {"object_count_min", c.object_count_min},
                     {"object_count_max", c.object_count_max},
                     {"box_scale", c.box_scale},
                     {"aim_jitter", c.aim_jitter},
                     {"clear_margin", c.clear_margin},
                     {"min_x_gap", c.min_x_gap},
                     {"wedge_half_angle_deg", c.wedge_half_angle_deg},
                     {"max_retries", c.max_retries},
                     {"class_mix", c.class_mix}};
}

// Unknown keys are rejected so a typo cannot silently fall back to a default.
inline void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "image_size") c.image_size = it.value().get<int>();
    else if (k == "head_radius_min") c.head_radius_min = it.value().get<double>();
    else if (k == "head_radius_max") c.head_radius_max = it.value().get<double>();
    else if (k == "object_radius_min") c.object_radius_min = it.value().get<double>();
    else if (k == "object_radius_max") c.object_radius_max = it.value().get<double>();
    else if (k == "object_count_min") c.object_count_min = it.value().get<int>();
    else if (k == "object_count_max") c.object_count_max = it.value().get<int>();
    else if (k == "box_scale") c.box_scale = it.value().get<double>();
    else if (k == "aim_jitter") c.aim_jitter = it.value().get<double>();
    else if (k == "clear_margin") c.clear_margin = it.value().get<double>();
    else if (k == "min_x_gap") c.min_x_gap = it.value().get<double>();
    else if (k == "wedge_half_angle_deg") c.wedge_half_angle_deg = it.value().get<double>();
    else if (k == "max_retries") c.max_retries = it.value().get<int>();
    else if (k == "class_mix") c.class_mix = it.value().get<std::array<double, kNumGazeClasses>>();
    else raise("generator config: unknown key '" + k + "'");
  }
  c.validate();
}

}  // namespace csgaze::synth

namespace csgaze::cli {

// Resolved settings for one command: architecture, training schedule, and
// scene generator, each under its own key so files stay composable.
struct AppConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  synth::GeneratorConfig generator;
};

inline void to_json(nlohmann::json& j, const AppConfig& c) {
  j = nlohmann::json{{"model", c.model}, {"train", c.train}, {"generator", c.generator}};
}

inline void from_json(const nlohmann::json& j, AppConfig& c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "model") c.model = it.value().get<model::ModelConfig>();
    else if (k == "train") c.train = it.value().get<train::TrainConfig>();
    else if (k == "generator") c.generator = it.value().get<synth::GeneratorConfig>();
    else raise("config: unknown key '" + k + "' (want model, train, generator)");
  }
}

inline AppConfig load_app_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    raise("config " + path.string() + ": " + e.what());
  }
  try {
    return j.get<AppConfig>();
  } catch (const nlohmann::json::exception& e) {
    raise("config " + path.string() + ": " + e.what());
  }
}

}  // namespace csgaze::cli
