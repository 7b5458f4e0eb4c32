#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "eftlab/action.hpp"
#include "eftlab/character.hpp"
#include "eftlab/env.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/network.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

struct TrainConfig {
  int episodes = 300;           // M
  int steps_per_episode = 400;  // T
  int policy_delay = 2;         // d
  double target_noise = 0.2;    // sigma_bar
  double target_noise_clip = 0.5;
  std::size_t buffer_capacity = 1'000'000;
  int batch_size = 128;
  double gamma = 0.99;
  double tau = 1e-3;
  double explore_sigma_continuous = 0.1;  // sigma_1, on the acceleration
  double explore_sigma_proto = 0.6;       // sigma_2, on the proto head
  double actor_lr = 5e-4;
  double critic_lr = 5e-4;
  std::vector<int> hidden_sizes = {64, 64};
  int update_every = 2;    // env steps between gradient updates
  int warmup_steps = 5000; // uniform-random env steps before updates begin
  CharacterSpace character_space = CharacterSpace::unit_box(3);

  void validate() const {
    if (episodes < 0) throw ConfigError("episodes must be >= 0");
    if (steps_per_episode < 1) throw ConfigError("steps_per_episode >= 1");
    if (policy_delay < 1) throw ConfigError("policy_delay d must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma in [0,1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau in (0,1]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size))
      throw ConfigError("buffer_capacity must hold at least one batch");
    if (update_every < 1) throw ConfigError("update_every must be >= 1");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
    if (target_noise < 0.0 || target_noise_clip < 0.0 ||
        explore_sigma_continuous < 0.0 || explore_sigma_proto < 0.0)
      throw ConfigError("noise scales must be >= 0");
    if (actor_lr <= 0.0 || critic_lr <= 0.0)
      throw ConfigError("learning rates must be > 0");
    if (hidden_sizes.empty()) throw ConfigError("need at least one hidden layer");
    for (int h : hidden_sizes)
      if (h < 1) throw ConfigError("hidden sizes must be >= 1");
  }
};

// Action bounds the actor maps its tanh outputs onto.
struct ActionSpace {
  double accel_min = -3.0;
  double accel_max = 3.0;
  int half_width = 1;  // W

  static ActionSpace from_env(const EnvConfig& cfg) {
    return {cfg.accel_min, cfg.accel_max, cfg.half_width};
  }

  double scale_accel(double unit) const {
    return accel_min + 0.5 * (unit + 1.0) * (accel_max - accel_min);
  }

  // d(accel)/d(unit), for routing critic gradients into the actor.
  double accel_gain() const { return 0.5 * (accel_max - accel_min); }
};

inline constexpr int kObservationDim = 14;

// Shared multi-character actor-critic. The actor maps [obs ++ c] to
// (accel unit, proto) through tanh; both critics map [obs ++ accel ++ proto
// ++ c] to a scalar value. Targets mirror the live networks.
struct PolicyBundle {
  DenseNetwork actor;
  DenseNetwork critic1;
  DenseNetwork critic2;
  DenseNetwork target_actor;
  DenseNetwork target_critic1;
  DenseNetwork target_critic2;
  TrainConfig train_config;
  ActionSpace action_space;

  int character_dims() const { return train_config.character_space.dims(); }
  int actor_input_dim() const { return kObservationDim + character_dims(); }
  int critic_input_dim() const { return kObservationDim + 2 + character_dims(); }
};

inline PolicyBundle make_bundle(const EnvConfig& env_cfg,
                                const TrainConfig& train_cfg, SeededRng& rng) {
  train_cfg.validate();
  env_cfg.validate();
  PolicyBundle b;
  b.train_config = train_cfg;
  b.action_space = ActionSpace::from_env(env_cfg);

  std::vector<int> actor_sizes;
  actor_sizes.push_back(kObservationDim + train_cfg.character_space.dims());
  for (int h : train_cfg.hidden_sizes) actor_sizes.push_back(h);
  actor_sizes.push_back(2);

  std::vector<int> critic_sizes;
  critic_sizes.push_back(kObservationDim + 2 + train_cfg.character_space.dims());
  for (int h : train_cfg.hidden_sizes) critic_sizes.push_back(h);
  critic_sizes.push_back(1);

  b.actor = DenseNetwork::random_init(actor_sizes, Activation::kRelu,
                                      Activation::kTanh, rng);
  b.critic1 = DenseNetwork::random_init(critic_sizes, Activation::kRelu,
                                        Activation::kIdentity, rng);
  b.critic2 = DenseNetwork::random_init(critic_sizes, Activation::kRelu,
                                        Activation::kIdentity, rng);
  b.target_actor = b.actor;
  b.target_critic1 = b.critic1;
  b.target_critic2 = b.critic2;
  return b;
}

inline void build_actor_input(const ObservationVec& o,
                              const CharacterVector& c,
                              std::vector<double>& input) {
  input.resize(o.size() + c.size());
  std::copy(o.begin(), o.end(), input.begin());
  std::copy(c.begin(), c.end(), input.begin() + o.size());
}

// Deterministic policy head; exploration adds Gaussian noise in the
// normalized head space (sigma_1 on the acceleration head, sigma_2 on the
// proto head) and clamps back into range before the acceleration is scaled.
// Noise draw order is fixed: acceleration first, proto second.
inline HybridAction act(const PolicyBundle& b, const ObservationVec& o,
                        const CharacterVector& c, bool explore,
                        SeededRng& rng) {
  if (static_cast<int>(c.size()) != b.character_dims())
    throw ShapeError("act: character dimension mismatch");
  thread_local NetWorkspace ws;
  thread_local std::vector<double> input;
  build_actor_input(o, c, input);
  std::array<double, 2> head;
  b.actor.forward(input, head, ws);

  double unit = head[0];
  double proto = head[1];
  if (explore) {
    unit += b.train_config.explore_sigma_continuous * rng.gaussian();
    unit = std::clamp(unit, -1.0, 1.0);
    proto += b.train_config.explore_sigma_proto * rng.gaussian();
    proto = std::clamp(proto, -1.0, 1.0);
  }
  return make_hybrid_action(b.action_space.scale_accel(unit), proto,
                            b.action_space.half_width);
}

}  // namespace eftlab
