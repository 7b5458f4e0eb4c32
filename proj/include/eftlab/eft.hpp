#pragma once

#include <map>
#include <string>
#include <vector>

#include "eftlab/character.hpp"
#include "eftlab/env.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/policy.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

enum class AgentMode { kProposed, kFceEft, kWithoutEft };

inline std::string to_string(AgentMode m) {
  switch (m) {
    case AgentMode::kProposed: return "proposed";
    case AgentMode::kFceEft: return "fce_eft";
    case AgentMode::kWithoutEft: return "without_eft";
  }
  return "?";
}

inline AgentMode agent_mode_from_string(const std::string& s) {
  if (s == "proposed") return AgentMode::kProposed;
  if (s == "fce_eft") return AgentMode::kFceEft;
  if (s == "without_eft") return AgentMode::kWithoutEft;
  throw ParseError("unknown agent mode '" + s + "'");
}

// Target agent id -> estimated character. Ordered map keeps every traversal
// deterministic.
using InferredCharacterMap = std::map<int, CharacterVector>;

// An observation produced by mental simulation rather than the environment.
struct SimulatedObservation {
  ObservationVec obs;
};

// Greedy action of each target under its estimated character.
inline std::map<int, HybridAction> predict_actions(
    const PolicyBundle& bundle,
    const std::map<int, ObservationVec>& target_observations,
    const InferredCharacterMap& characters) {
  std::map<int, HybridAction> out;
  SeededRng unused(0);  // deterministic head, never draws
  for (const auto& [id, obs] : target_observations) {
    auto it = characters.find(id);
    if (it == characters.end())
      throw ContractError("predict_actions: no character for target " +
                          std::to_string(id));
    out.emplace(id, act(bundle, obs, it->second, /*explore=*/false, unused));
  }
  return out;
}

// One mental kinematic step: predicted targets move under their predicted
// actions, the ego coasts under the null action (zero acceleration, no lane
// change) and every unobserved agent is held at constant velocity. Returns
// the re-rendered ego observation.
inline SimulatedObservation simulate_next_observation(
    const WorldState& state, int ego,
    const std::map<int, HybridAction>& predicted, const EnvConfig& cfg) {
  if (ego < 0 || ego >= state.n_agents())
    throw ShapeError("simulate_next_observation: ego index out of range");
  std::vector<HybridAction> actions(state.n_agents(),
                                    HybridAction::null_action());
  for (const auto& [id, action] : predicted) {
    if (id < 0 || id >= state.n_agents() || id == ego)
      throw ContractError(
          "simulate_next_observation: predicted action for invalid agent " +
          std::to_string(id));
    actions[id] = action;
  }
  StepResult sr = step(state, actions, cfg);
  return SimulatedObservation{observe(sr.next, ego, cfg)};
}

// Greedy policy action on the simulated observation under the own character.
inline HybridAction foresight_select(const PolicyBundle& bundle,
                                     const SimulatedObservation& o_hat,
                                     const CharacterVector& c) {
  SeededRng unused(0);
  return act(bundle, o_hat.obs, c, /*explore=*/false, unused);
}

struct EpisodeLogRow {
  int step = 0;
  int agent = 0;
  ObservationVec obs;
  double accel = 0.0;
  double proto = 0.0;
  int lane_change = 0;
  RewardBreakdown reward;
};

struct EpisodeResult {
  std::vector<double> total_rewards;  // summed per agent
  std::vector<EpisodeLogRow> log;

  double mean_step_reward(int steps) const {
    double s = 0.0;
    for (double r : total_rewards) s += r;
    return s / (static_cast<double>(steps) *
                static_cast<double>(total_rewards.size()));
  }
};

// Agents within the ego's observation radius by shortest arc distance.
inline std::vector<int> observable_targets(const WorldState& state, int ego,
                                           const EnvConfig& cfg) {
  std::vector<int> out;
  for (int j = 0; j < state.n_agents(); ++j) {
    if (j == ego) continue;
    double d = detail::forward_gap(state.positions[ego], state.positions[j],
                                   cfg.circumference);
    double arc = std::min(d, cfg.circumference - d);
    if (arc <= cfg.obs_radius) out.push_back(j);
  }
  return out;
}

// One evaluation episode. Agent 0 is the single EFT-capable agent; everyone
// else acts greedily through the shared policy under its true character.
//   proposed:    targets take characters from chars_for_eft (never-observed
//                agents fall back to the midpoint of C)
//   fce_eft:     every target is assumed to share the ego character
//   without_eft: the ego acts directly on its current observation
inline EpisodeResult run_episode(const PolicyBundle& bundle,
                                 const EnvConfig& cfg, AgentMode mode,
                                 const std::vector<CharacterVector>& characters,
                                 const InferredCharacterMap& chars_for_eft,
                                 int steps, SeededRng& rng) {
  if (static_cast<int>(characters.size()) != cfg.n_agents)
    throw ShapeError("run_episode: one character per agent required");
  if (steps < 1) throw ConfigError("run_episode: steps must be >= 1");

  const int n = cfg.n_agents;
  const CharacterVector fallback =
      bundle.train_config.character_space.midpoint();
  EpisodeResult result;
  result.total_rewards.assign(n, 0.0);
  result.log.reserve(static_cast<std::size_t>(steps) * n);

  WorldState state = reset(rng, cfg);
  std::vector<HybridAction> actions(n);
  std::vector<ObservationVec> obs(n);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < n; ++i) obs[i] = observe(state, i, cfg);

    if (mode == AgentMode::kWithoutEft) {
      actions[0] = act(bundle, obs[0], characters[0], false, rng);
    } else {
      std::map<int, ObservationVec> target_obs;
      InferredCharacterMap target_chars;
      for (int j : observable_targets(state, 0, cfg)) {
        target_obs.emplace(j, obs[j]);
        if (mode == AgentMode::kFceEft) {
          target_chars.emplace(j, characters[0]);
        } else {
          auto it = chars_for_eft.find(j);
          target_chars.emplace(j, it != chars_for_eft.end() ? it->second
                                                            : fallback);
        }
      }
      auto predicted = predict_actions(bundle, target_obs, target_chars);
      SimulatedObservation o_hat =
          simulate_next_observation(state, 0, predicted, cfg);
      actions[0] = foresight_select(bundle, o_hat, characters[0]);
    }
    for (int i = 1; i < n; ++i)
      actions[i] = act(bundle, obs[i], characters[i], false, rng);

    StepResult sr = step(state, actions, cfg);
    for (int i = 0; i < n; ++i) {
      RewardBreakdown rb = reward(state, i, actions[i], sr.next,
                                  characters[i], sr.infeasible[i], cfg);
      result.total_rewards[i] += rb.total;
      result.log.push_back(EpisodeLogRow{t, i, obs[i], actions[i].accel,
                                         actions[i].proto,
                                         actions[i].lane_change, rb});
    }
    state = std::move(sr.next);
  }
  return result;
}

}  // namespace eftlab
