#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eftlab/env.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/network.hpp"
#include "eftlab/policy.hpp"

namespace eftlab {

inline constexpr int kCheckpointFormatVersion = 1;

// Parameter blobs are hex of the little-endian IEEE-754 bytes of the flat
// parameter vector: per layer, the weight matrix row-major [out][in], then
// the bias. Networks appear as actor, critic1, critic2, target_actor,
// target_critic1, target_critic2.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::uint64_t seed = 0;
  EnvConfig env_config;
  TrainConfig train_config;
  PolicyBundle bundle;
};

namespace detail {

inline std::string hex_encode(std::span<const double> values) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(values.size() * 16);
  for (double v : values) {
    std::uint64_t u;
    __builtin_memcpy(&u, &v, sizeof(u));
    for (int byte = 0; byte < 8; ++byte) {  // little-endian byte order
      unsigned b = static_cast<unsigned>((u >> (8 * byte)) & 0xFF);
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xF]);
    }
  }
  return out;
}

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw ParseError(std::string("bad hex digit '") + c + "'");
}

inline std::vector<double> hex_decode(const std::string& hex) {
  if (hex.size() % 16 != 0)
    throw ParseError("hex parameter blob length not a multiple of 16");
  std::vector<double> out(hex.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int byte = 0; byte < 8; ++byte) {
      unsigned hi = static_cast<unsigned>(hex_nibble(hex[i * 16 + 2 * byte]));
      unsigned lo =
          static_cast<unsigned>(hex_nibble(hex[i * 16 + 2 * byte + 1]));
      u |= static_cast<std::uint64_t>((hi << 4) | lo) << (8 * byte);
    }
    double v;
    __builtin_memcpy(&v, &u, sizeof(v));
    out[i] = v;
  }
  return out;
}

inline nlohmann::json network_to_json(const DenseNetwork& net) {
  return {{"layer_sizes", net.layer_sizes()},
          {"hidden_activation", to_string(net.hidden_activation())},
          {"output_activation", to_string(net.output_activation())},
          {"params_hex", hex_encode(net.params())}};
}

inline DenseNetwork network_from_json(const nlohmann::json& j) {
  DenseNetwork net(j.at("layer_sizes").get<std::vector<int>>(),
                   activation_from_string(j.at("hidden_activation")),
                   activation_from_string(j.at("output_activation")));
  std::vector<double> params =
      hex_decode(j.at("params_hex").get<std::string>());
  if (params.size() != net.param_count())
    throw ParseError("parameter blob size does not match architecture");
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

inline nlohmann::json character_space_to_json(const CharacterSpace& space) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& ivs : space.components()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& iv : ivs) list.push_back({iv.lo, iv.hi});
    comps.push_back(list);
  }
  return comps;
}

inline CharacterSpace character_space_from_json(const nlohmann::json& j) {
  std::vector<std::vector<Interval>> comps;
  for (const auto& comp : j) {
    std::vector<Interval> ivs;
    for (const auto& iv : comp)
      ivs.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    comps.push_back(std::move(ivs));
  }
  return CharacterSpace(std::move(comps));
}

inline nlohmann::json env_config_to_json(const EnvConfig& e) {
  return {{"n_agents", e.n_agents},
          {"lanes", e.lanes},
          {"circumference", e.circumference},
          {"dt", e.dt},
          {"v_max", e.v_max},
          {"accel_min", e.accel_min},
          {"accel_max", e.accel_max},
          {"obs_radius", e.obs_radius},
          {"idm_s0", e.idm.s0},
          {"idm_t_star", e.idm.t_star},
          {"idm_a_min", e.idm.a_min},
          {"idm_a_max", e.idm.a_max},
          {"target_velocity", e.target_velocity},
          {"target_velocities", e.target_velocities},
          {"r_fail", e.r_fail},
          {"half_width", e.half_width}};
}

inline EnvConfig env_config_from_json(const nlohmann::json& j) {
  EnvConfig e;
  e.n_agents = j.at("n_agents");
  e.lanes = j.at("lanes");
  e.circumference = j.at("circumference");
  e.dt = j.at("dt");
  e.v_max = j.at("v_max");
  e.accel_min = j.at("accel_min");
  e.accel_max = j.at("accel_max");
  e.obs_radius = j.at("obs_radius");
  e.idm.s0 = j.at("idm_s0");
  e.idm.t_star = j.at("idm_t_star");
  e.idm.a_min = j.at("idm_a_min");
  e.idm.a_max = j.at("idm_a_max");
  e.target_velocity = j.at("target_velocity");
  e.target_velocities = j.at("target_velocities").get<std::vector<double>>();
  e.r_fail = j.at("r_fail");
  e.half_width = j.at("half_width");
  return e;
}

inline nlohmann::json train_config_to_json(const TrainConfig& t) {
  return {{"episodes", t.episodes},
          {"steps_per_episode", t.steps_per_episode},
          {"policy_delay", t.policy_delay},
          {"target_noise", t.target_noise},
          {"target_noise_clip", t.target_noise_clip},
          {"buffer_capacity", t.buffer_capacity},
          {"batch_size", t.batch_size},
          {"gamma", t.gamma},
          {"tau", t.tau},
          {"explore_sigma_continuous", t.explore_sigma_continuous},
          {"explore_sigma_proto", t.explore_sigma_proto},
          {"actor_lr", t.actor_lr},
          {"critic_lr", t.critic_lr},
          {"hidden_sizes", t.hidden_sizes},
          {"update_every", t.update_every},
          {"warmup_steps", t.warmup_steps},
          {"character_space", character_space_to_json(t.character_space)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.episodes = j.at("episodes");
  t.steps_per_episode = j.at("steps_per_episode");
  t.policy_delay = j.at("policy_delay");
  t.target_noise = j.at("target_noise");
  t.target_noise_clip = j.at("target_noise_clip");
  t.buffer_capacity = j.at("buffer_capacity");
  t.batch_size = j.at("batch_size");
  t.gamma = j.at("gamma");
  t.tau = j.at("tau");
  t.explore_sigma_continuous = j.at("explore_sigma_continuous");
  t.explore_sigma_proto = j.at("explore_sigma_proto");
  t.actor_lr = j.at("actor_lr");
  t.critic_lr = j.at("critic_lr");
  t.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  t.update_every = j.at("update_every");
  t.warmup_steps = j.at("warmup_steps");
  t.character_space = character_space_from_json(j.at("character_space"));
  return t;
}

}  // namespace detail

inline std::string checkpoint_to_string(const Checkpoint& ck) {
  nlohmann::json j;
  j["format_version"] = ck.format_version;
  j["seed"] = ck.seed;
  j["env_config"] = detail::env_config_to_json(ck.env_config);
  j["train_config"] = detail::train_config_to_json(ck.train_config);
  j["networks"] = {
      {"actor", detail::network_to_json(ck.bundle.actor)},
      {"critic1", detail::network_to_json(ck.bundle.critic1)},
      {"critic2", detail::network_to_json(ck.bundle.critic2)},
      {"target_actor", detail::network_to_json(ck.bundle.target_actor)},
      {"target_critic1", detail::network_to_json(ck.bundle.target_critic1)},
      {"target_critic2", detail::network_to_json(ck.bundle.target_critic2)}};
  return j.dump(2) + "\n";
}

inline Checkpoint checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    const int version = j.at("format_version");
    if (version != kCheckpointFormatVersion)
      throw VersionError("checkpoint format_version " +
                         std::to_string(version) + " != supported " +
                         std::to_string(kCheckpointFormatVersion));
    Checkpoint ck;
    ck.format_version = version;
    ck.seed = j.at("seed");
    ck.env_config = detail::env_config_from_json(j.at("env_config"));
    ck.train_config = detail::train_config_from_json(j.at("train_config"));
    const auto& nets = j.at("networks");
    ck.bundle.actor = detail::network_from_json(nets.at("actor"));
    ck.bundle.critic1 = detail::network_from_json(nets.at("critic1"));
    ck.bundle.critic2 = detail::network_from_json(nets.at("critic2"));
    ck.bundle.target_actor =
        detail::network_from_json(nets.at("target_actor"));
    ck.bundle.target_critic1 =
        detail::network_from_json(nets.at("target_critic1"));
    ck.bundle.target_critic2 =
        detail::network_from_json(nets.at("target_critic2"));
    ck.bundle.train_config = ck.train_config;
    ck.bundle.action_space = ActionSpace::from_env(ck.env_config);
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << checkpoint_to_string(ck);
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_string(ss.str());
}

inline Checkpoint make_checkpoint(const PolicyBundle& bundle,
                                  const EnvConfig& env_cfg,
                                  std::uint64_t seed) {
  Checkpoint ck;
  ck.seed = seed;
  ck.env_config = env_cfg;
  ck.train_config = bundle.train_config;
  ck.bundle = bundle;
  return ck;
}

}  // namespace eftlab
