#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgaze/model/net.hpp"

namespace csgaze::model {

// Checkpoint container: magic, version, JSON header (phase tag, step
// counter, full model config echo, tensor table), then raw little-endian
// float32 payloads in table order.  Loading validates every tensor against
// the live architecture and fails naming the offending tensor; a failed
// load never leaves a half-written model.

inline constexpr char kCheckpointMagic[8] = {'G', 'Z', 'C', 'K', 'P', 'T', '1', '\n'};
inline constexpr int kCheckpointVersion = 1;

struct CheckpointData {
  ModelConfig config;
  std::string phase;  // "init" | "pretrain-complete" | "classify-complete"
  long step = 0;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> tensors;
};

template <typename S>
inline CheckpointData snapshot(CSGazeNet<S>& net, const std::string& phase, long step) {
  CheckpointData data;
  data.config = net.config();
  data.phase = phase;
  data.step = step;
  net.visit_all([&](nn::Param<S>& p) {
    std::vector<float> payload(p.value.v.size());
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(p.value.v[i]);
    data.order.push_back(p.name);
    data.tensors[p.name] = {p.value.shape, std::move(payload)};
  });
  return data;
}

inline void save_checkpoint_data(const CheckpointData& data, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["phase"] = data.phase;
  header["step"] = data.step;
  header["model_config"] = data.config;
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& name : data.order) {
    const auto& [shape, payload] = data.tensors.at(name);
    table.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", payload.size()}});
    offset += payload.size();
  }
  header["tensors"] = table;
  std::string hj = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) raise("cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint64_t hlen = hj.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hj.data(), static_cast<std::streamsize>(hj.size()));
  for (const auto& name : data.order) {
    const auto& payload = data.tensors.at(name).second;
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
  }
  if (!out) raise("checkpoint write failed: " + path.string());
}

template <typename S>
inline void save_checkpoint(CSGazeNet<S>& net, const std::filesystem::path& path,
                            const std::string& phase, long step) {
  save_checkpoint_data(snapshot(net, phase, step), path);
}

inline CheckpointData load_checkpoint_data(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    raise("not a checkpoint file: " + path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (in.gcount() != sizeof(hlen) || hlen == 0 || hlen > (1u << 20))
    raise("corrupt checkpoint header length: " + path.string());
  std::string hj(hlen, '\0');
  in.read(hj.data(), static_cast<std::streamsize>(hlen));
  if (in.gcount() != static_cast<std::streamsize>(hlen))
    raise("truncated checkpoint header: " + path.string());

  CheckpointData data;
  try {
    nlohmann::json header = nlohmann::json::parse(hj);
    int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      raise("unsupported checkpoint version " + std::to_string(version) + " (want " +
            std::to_string(kCheckpointVersion) + ")");
    data.phase = header.at("phase").get<std::string>();
    data.step = header.at("step").get<long>();
    data.config = header.at("model_config").get<ModelConfig>();
    for (const auto& t : header.at("tensors")) {
      std::string name = t.at("name").get<std::string>();
      std::vector<int> shape = t.at("shape").get<std::vector<int>>();
      std::size_t count = t.at("count").get<std::size_t>();
      std::size_t n = 1;
      for (int d : shape) n *= static_cast<std::size_t>(d);
      if (n != count)
        raise("checkpoint tensor '" + name + "': count does not match shape");
      data.order.push_back(name);
      data.tensors[name] = {std::move(shape), std::vector<float>(count)};
    }
  } catch (const nlohmann::json::exception& e) {
    raise("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  for (const auto& name : data.order) {
    auto& payload = data.tensors[name].second;
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(payload.size() * sizeof(float)))
      raise("truncated checkpoint payload at tensor '" + name + "' in " + path.string());
  }
  return data;
}

// Overwrites every model parameter from the checkpoint.  The architectures
// must agree exactly: any missing/extra/reshaped tensor is an error naming
// the tensor, and the model is only touched after full validation.
template <typename S>
inline void apply_checkpoint(CSGazeNet<S>& net, const CheckpointData& data) {
  std::size_t seen = 0;
  net.visit_all([&](nn::Param<S>& p) {
    auto it = data.tensors.find(p.name);
    if (it == data.tensors.end()) raise("checkpoint is missing tensor '" + p.name + "'");
    if (it->second.first != p.value.shape)
      raise("checkpoint tensor '" + p.name + "' has shape mismatch");
    ++seen;
  });
  if (seen != data.tensors.size())
    for (const auto& [name, t] : data.tensors) {
      bool found = false;
      net.visit_all([&](nn::Param<S>& p) { found = found || p.name == name; });
      if (!found) raise("checkpoint has unknown tensor '" + name + "'");
    }
  net.visit_all([&](nn::Param<S>& p) {
    const auto& payload = data.tensors.at(p.name).second;
    for (std::size_t i = 0; i < payload.size(); ++i) p.value.v[i] = static_cast<S>(payload[i]);
  });
}

template <typename S>
inline CSGazeNet<S> net_from_checkpoint(const CheckpointData& data) {
  CSGazeNet<S> net(data.config);
  apply_checkpoint(net, data);
  return net;
}

// Phase-1 -> phase-2 handoff: overwrite only the encoder tensors, leaving
// the freshly initialized fusion/classifier stack untouched.
template <typename S>
inline int apply_encoder_weights(CSGazeNet<S>& net, const CheckpointData& data) {
  int applied = 0;
  net.visit_all([&](nn::Param<S>& p) {
    if (!net.is_encoder_param(p.name)) return;
    auto it = data.tensors.find(p.name);
    if (it == data.tensors.end()) raise("checkpoint is missing encoder tensor '" + p.name + "'");
    if (it->second.first != p.value.shape)
      raise("checkpoint tensor '" + p.name + "' has shape mismatch");
    const auto& payload = it->second.second;
    for (std::size_t i = 0; i < payload.size(); ++i) p.value.v[i] = static_cast<S>(payload[i]);
    ++applied;
  });
  return applied;
}

}  // namespace csgaze::model
