#pragma once

#include <cstdint>
#include <vector>

#include "eftlab/checkpoint.hpp"
#include "eftlab/env.hpp"
#include "eftlab/policy.hpp"
#include "eftlab/replay.hpp"
#include "eftlab/td3.hpp"

namespace eftlab {

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> reward_curve;  // per-episode mean step reward, all agents
};

// Multi-character policy training: every episode resamples each agent's
// character from C; all agents act with the shared policy under their own
// character and every transition feeds the replay buffer. Runs are bitwise
// reproducible from the seed.
inline TrainResult train_policy(const EnvConfig& env_cfg,
                                const TrainConfig& train_cfg,
                                std::uint64_t seed) {
  env_cfg.validate();
  train_cfg.validate();
  SeededRng rng(seed);
  PolicyBundle bundle = make_bundle(env_cfg, train_cfg, rng);
  TrainerState trainer(bundle);
  ReplayBuffer buffer(train_cfg.buffer_capacity);

  TrainResult result;
  result.reward_curve.reserve(train_cfg.episodes);
  const int n = env_cfg.n_agents;
  std::vector<CharacterVector> chars(n);
  std::vector<ObservationVec> obs(n), next_obs(n);
  std::vector<HybridAction> actions(n);
  long update_index = 0;
  long env_steps = 0;

  for (int episode = 0; episode < train_cfg.episodes; ++episode) {
    WorldState state = reset(rng, env_cfg);
    for (int i = 0; i < n; ++i) {
      chars[i] = train_cfg.character_space.sample(rng);
      obs[i] = observe(state, i, env_cfg);
    }
    double reward_sum = 0.0;
    for (int t = 0; t < train_cfg.steps_per_episode; ++t) {
      const bool warming = env_steps < train_cfg.warmup_steps;
      for (int i = 0; i < n; ++i) {
        if (warming) {
          double accel = rng.uniform(env_cfg.accel_min, env_cfg.accel_max);
          double proto = rng.uniform(-1.0, 1.0);
          actions[i] = make_hybrid_action(accel, proto, env_cfg.half_width);
        } else {
          actions[i] = act(bundle, obs[i], chars[i], /*explore=*/true, rng);
        }
      }
      StepResult sr = step(state, actions, env_cfg);
      for (int i = 0; i < n; ++i) {
        RewardBreakdown rb = reward(state, i, actions[i], sr.next, chars[i],
                                    sr.infeasible[i], env_cfg);
        next_obs[i] = observe(sr.next, i, env_cfg);
        buffer.push(ReplayRecord{obs[i], chars[i], actions[i].accel,
                                 actions[i].proto, rb.total, next_obs[i],
                                 /*done=*/false});
        reward_sum += rb.total;
      }
      state = std::move(sr.next);
      obs.swap(next_obs);
      ++env_steps;
      if (env_steps >= train_cfg.warmup_steps &&
          buffer.size() >= static_cast<std::size_t>(train_cfg.batch_size) &&
          env_steps % train_cfg.update_every == 0) {
        auto batch = buffer.sample(
            static_cast<std::size_t>(train_cfg.batch_size), rng);
        ++update_index;
        td3_update(bundle, batch, update_index, trainer, rng);
      }
    }
    result.reward_curve.push_back(
        reward_sum / (static_cast<double>(train_cfg.steps_per_episode) * n));
  }
  result.checkpoint = make_checkpoint(bundle, env_cfg, seed);
  return result;
}

struct RolloutStats {
  double mean_step_reward = 0.0;  // over all agents and steps
};

enum class RolloutPolicy { kGreedy, kUniformRandom };

// Plain policy rollout used for training evaluation: per episode, characters
// resample from C and every agent acts directly on its own observation.
inline RolloutStats evaluate_rollout(const PolicyBundle& bundle,
                                     const EnvConfig& env_cfg,
                                     RolloutPolicy kind, int episodes,
                                     int steps, SeededRng& rng) {
  const int n = env_cfg.n_agents;
  std::vector<CharacterVector> chars(n);
  std::vector<HybridAction> actions(n);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    WorldState state = reset(rng, env_cfg);
    for (int i = 0; i < n; ++i)
      chars[i] = bundle.train_config.character_space.sample(rng);
    for (int t = 0; t < steps; ++t) {
      for (int i = 0; i < n; ++i) {
        if (kind == RolloutPolicy::kGreedy) {
          actions[i] = act(bundle, observe(state, i, env_cfg), chars[i],
                           /*explore=*/false, rng);
        } else {
          double accel = rng.uniform(env_cfg.accel_min, env_cfg.accel_max);
          double proto = rng.uniform(-1.0, 1.0);
          actions[i] = make_hybrid_action(accel, proto, env_cfg.half_width);
        }
      }
      StepResult sr = step(state, actions, env_cfg);
      for (int i = 0; i < n; ++i) {
        total += reward(state, i, actions[i], sr.next, chars[i],
                        sr.infeasible[i], env_cfg)
                     .total;
      }
      state = std::move(sr.next);
    }
  }
  return {total / (static_cast<double>(episodes) * steps * n)};
}

}  // namespace eftlab
