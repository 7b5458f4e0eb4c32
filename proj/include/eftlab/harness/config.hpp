#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eftlab/checkpoint.hpp"
#include "eftlab/eft.hpp"
#include "eftlab/env.hpp"
#include "eftlab/harness/toml.hpp"
#include "eftlab/inference.hpp"
#include "eftlab/policy.hpp"

namespace eftlab {

// One out-of-distribution inference case: training samples characters from
// the restricted ranges (applied to every component); probes are planted as
// constant vectors (p, p, ..., p).
struct OodCase {
  std::string name;
  std::vector<Interval> train_ranges;
  std::vector<double> probe_values;     // outside the training ranges
  std::vector<double> control_values;   // in-distribution reference probes
};

struct StudyConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<AgentMode> modes = {AgentMode::kProposed, AgentMode::kFceEft,
                                  AgentMode::kWithoutEft};
  std::vector<int> diversity_levels = {1, 2, 3};
  std::vector<double> noise_sigmas = {0.0, 0.01, 0.05, 0.1, 0.2, 0.3};
  std::vector<int> trajectory_lengths = {200, 500, 1000};  // inference study
  int noise_trajectory_length = 1000;
  int observer_steps = 400;   // pre-episode observation phase
  int eval_steps = 400;       // evaluation episode length
  int eval_episodes = 3;      // rollouts per training evaluation
  std::vector<double> behavior_values = {0.0, 0.25, 0.5, 0.75, 1.0};
  int behavior_steps = 400;
  std::size_t max_workers = 0;  // 0 = hardware concurrency
  bool write_episode_logs = false;

  void validate() const {
    if (seeds.empty()) throw ConfigError("study needs at least one seed");
    if (diversity_levels.empty()) throw ConfigError("diversity_levels empty");
    for (int n : diversity_levels)
      if (n < 1) throw ConfigError("diversity level must be >= 1");
    for (double s : noise_sigmas)
      if (s < 0.0) throw ConfigError("noise sigma must be >= 0");
    for (int t : trajectory_lengths)
      if (t < 1) throw ConfigError("trajectory length must be >= 1");
    if (noise_trajectory_length < 1 || observer_steps < 1 || eval_steps < 1 ||
        behavior_steps < 1 || eval_episodes < 1)
      throw ConfigError("study step counts must be >= 1");
  }
};

struct ExperimentConfig {
  EnvConfig env;
  TrainConfig train;
  InferenceConfig inference;
  StudyConfig study;
  std::vector<OodCase> ood_cases;
  std::uint64_t base_seed = 0;
  std::string output_dir = "runs";
  std::string preset = "desk";

  void validate() const {
    env.validate();
    train.validate();
    inference.validate();
    study.validate();
    for (int n : study.diversity_levels)
      if (n > env.n_agents)
        throw ConfigError("diversity level exceeds agent count");
    for (const auto& c : ood_cases) {
      if (c.train_ranges.empty())
        throw ConfigError("ood case '" + c.name + "' has no train ranges");
      if (c.probe_values.empty())
        throw ConfigError("ood case '" + c.name + "' has no probes");
    }
  }
};

inline std::vector<OodCase> default_ood_cases() {
  return {
      OodCase{"interior_hole",
              {{0.0, 0.6}, {0.8, 1.0}},
              {0.65, 0.70, 0.75},
              {0.3, 0.5}},
      OodCase{"exterior",
              {{0.2, 0.8}},
              {0.0, 0.1, 0.9, 1.0},
              {0.4, 0.6}},
  };
}

// Desk-scale defaults: small, converges on a workstation in minutes.
inline ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.ood_cases = default_ood_cases();
  cfg.preset = "desk";
  return cfg;
}

// Full-scale settings (21 agents, 3500 episodes of 3000 steps); kept for
// completeness, impractically slow on a desktop.
inline ExperimentConfig paper_scale_config() {
  ExperimentConfig cfg = desk_config();
  cfg.preset = "paper_scale";
  cfg.env.n_agents = 21;
  cfg.train.episodes = 3500;
  cfg.train.steps_per_episode = 3000;
  cfg.train.buffer_capacity = 4'000'000;
  cfg.train.update_every = 1;
  cfg.inference.max_iterations = 200;
  cfg.study.diversity_levels = {1, 2, 3, 4, 5};
  return cfg;
}

inline ExperimentConfig config_from_preset(const std::string& preset) {
  if (preset == "desk") return desk_config();
  if (preset == "paper_scale") return paper_scale_config();
  throw ConfigError("unknown preset '" + preset + "' (desk|paper_scale)");
}

namespace detail {

inline std::vector<Interval> intervals_from_matrix(
    const std::vector<std::vector<double>>& rows, const std::string& key) {
  std::vector<Interval> out;
  for (const auto& r : rows) {
    if (r.size() != 2)
      throw ConfigError("'" + key + "' entries must be [lo, hi] pairs");
    out.push_back({r[0], r[1]});
  }
  return out;
}

}  // namespace detail

// Overlays TOML keys onto a preset-initialized config. Unknown keys fail
// loudly to catch typos.
inline ExperimentConfig apply_toml(ExperimentConfig cfg,
                                   const TomlTable& toml) {
  static const std::vector<std::string> known = {
      "base_seed", "output_dir", "preset",
      "env.n_agents", "env.lanes", "env.circumference", "env.dt", "env.v_max",
      "env.accel_min", "env.accel_max", "env.obs_radius", "env.idm_s0",
      "env.idm_t_star", "env.idm_a_min", "env.idm_a_max",
      "env.target_velocity", "env.target_velocities", "env.r_fail",
      "env.half_width",
      "train.episodes", "train.steps_per_episode", "train.policy_delay",
      "train.target_noise", "train.target_noise_clip", "train.buffer_capacity",
      "train.batch_size", "train.gamma", "train.tau",
      "train.explore_sigma_continuous", "train.explore_sigma_proto",
      "train.actor_lr", "train.critic_lr", "train.hidden_sizes",
      "train.update_every", "train.warmup_steps", "train.character_space",
      "inference.learning_rate", "inference.max_iterations",
      "inference.convergence_tol", "inference.sigma_pi",
      "study.seeds", "study.modes", "study.diversity_levels",
      "study.noise_sigmas", "study.trajectory_lengths",
      "study.noise_trajectory_length", "study.observer_steps",
      "study.eval_steps", "study.eval_episodes", "study.behavior_values",
      "study.behavior_steps", "study.max_workers", "study.write_episode_logs",
      "ood.cases", "ood.interior_hole_train_ranges",
      "ood.interior_hole_probes", "ood.interior_hole_controls",
      "ood.exterior_train_ranges", "ood.exterior_probes",
      "ood.exterior_controls"};
  for (const auto& [key, value] : toml.values()) {
    (void)value;
    bool ok = false;
    for (const auto& k : known)
      if (k == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }

  cfg.base_seed = static_cast<std::uint64_t>(
      toml.get_int("base_seed", static_cast<std::int64_t>(cfg.base_seed)));
  cfg.output_dir = toml.get_string("output_dir", cfg.output_dir);

  auto& e = cfg.env;
  e.n_agents = static_cast<int>(toml.get_int("env.n_agents", e.n_agents));
  e.lanes = static_cast<int>(toml.get_int("env.lanes", e.lanes));
  e.circumference = toml.get_double("env.circumference", e.circumference);
  e.dt = toml.get_double("env.dt", e.dt);
  e.v_max = toml.get_double("env.v_max", e.v_max);
  e.accel_min = toml.get_double("env.accel_min", e.accel_min);
  e.accel_max = toml.get_double("env.accel_max", e.accel_max);
  e.obs_radius = toml.get_double("env.obs_radius", e.obs_radius);
  e.idm.s0 = toml.get_double("env.idm_s0", e.idm.s0);
  e.idm.t_star = toml.get_double("env.idm_t_star", e.idm.t_star);
  e.idm.a_min = toml.get_double("env.idm_a_min", e.idm.a_min);
  e.idm.a_max = toml.get_double("env.idm_a_max", e.idm.a_max);
  e.target_velocity = toml.get_double("env.target_velocity", e.target_velocity);
  if (toml.has("env.target_velocities"))
    e.target_velocities = toml.get_double_array("env.target_velocities");
  e.r_fail = toml.get_double("env.r_fail", e.r_fail);
  e.half_width = static_cast<int>(toml.get_int("env.half_width", e.half_width));

  auto& t = cfg.train;
  t.episodes = static_cast<int>(toml.get_int("train.episodes", t.episodes));
  t.steps_per_episode = static_cast<int>(
      toml.get_int("train.steps_per_episode", t.steps_per_episode));
  t.policy_delay =
      static_cast<int>(toml.get_int("train.policy_delay", t.policy_delay));
  t.target_noise = toml.get_double("train.target_noise", t.target_noise);
  t.target_noise_clip =
      toml.get_double("train.target_noise_clip", t.target_noise_clip);
  t.buffer_capacity = static_cast<std::size_t>(toml.get_int(
      "train.buffer_capacity", static_cast<std::int64_t>(t.buffer_capacity)));
  t.batch_size =
      static_cast<int>(toml.get_int("train.batch_size", t.batch_size));
  t.gamma = toml.get_double("train.gamma", t.gamma);
  t.tau = toml.get_double("train.tau", t.tau);
  t.explore_sigma_continuous = toml.get_double(
      "train.explore_sigma_continuous", t.explore_sigma_continuous);
  t.explore_sigma_proto =
      toml.get_double("train.explore_sigma_proto", t.explore_sigma_proto);
  t.actor_lr = toml.get_double("train.actor_lr", t.actor_lr);
  t.critic_lr = toml.get_double("train.critic_lr", t.critic_lr);
  if (toml.has("train.hidden_sizes")) {
    t.hidden_sizes.clear();
    for (auto v : toml.get_int_array("train.hidden_sizes"))
      t.hidden_sizes.push_back(static_cast<int>(v));
  }
  t.update_every =
      static_cast<int>(toml.get_int("train.update_every", t.update_every));
  t.warmup_steps =
      static_cast<int>(toml.get_int("train.warmup_steps", t.warmup_steps));
  if (toml.has("train.character_space")) {
    auto rows = toml.get_double_matrix("train.character_space");
    std::vector<std::vector<Interval>> comps;
    for (const auto& r : rows) {
      if (r.size() != 2)
        throw ConfigError("train.character_space entries must be [lo, hi]");
      comps.push_back({Interval{r[0], r[1]}});
    }
    t.character_space = CharacterSpace(std::move(comps));
  }

  auto& inf = cfg.inference;
  inf.learning_rate =
      toml.get_double("inference.learning_rate", inf.learning_rate);
  inf.max_iterations = static_cast<int>(
      toml.get_int("inference.max_iterations", inf.max_iterations));
  inf.convergence_tol =
      toml.get_double("inference.convergence_tol", inf.convergence_tol);
  inf.sigma_pi = toml.get_double("inference.sigma_pi", inf.sigma_pi);

  auto& s = cfg.study;
  if (toml.has("study.seeds")) {
    s.seeds.clear();
    for (auto v : toml.get_int_array("study.seeds"))
      s.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (toml.has("study.modes")) {
    s.modes.clear();
    for (const auto& m : toml.get_string_array("study.modes"))
      s.modes.push_back(agent_mode_from_string(m));
  }
  if (toml.has("study.diversity_levels")) {
    s.diversity_levels.clear();
    for (auto v : toml.get_int_array("study.diversity_levels"))
      s.diversity_levels.push_back(static_cast<int>(v));
  }
  if (toml.has("study.noise_sigmas"))
    s.noise_sigmas = toml.get_double_array("study.noise_sigmas");
  if (toml.has("study.trajectory_lengths")) {
    s.trajectory_lengths.clear();
    for (auto v : toml.get_int_array("study.trajectory_lengths"))
      s.trajectory_lengths.push_back(static_cast<int>(v));
  }
  s.noise_trajectory_length = static_cast<int>(toml.get_int(
      "study.noise_trajectory_length", s.noise_trajectory_length));
  s.observer_steps =
      static_cast<int>(toml.get_int("study.observer_steps", s.observer_steps));
  s.eval_steps =
      static_cast<int>(toml.get_int("study.eval_steps", s.eval_steps));
  s.eval_episodes =
      static_cast<int>(toml.get_int("study.eval_episodes", s.eval_episodes));
  if (toml.has("study.behavior_values"))
    s.behavior_values = toml.get_double_array("study.behavior_values");
  s.behavior_steps =
      static_cast<int>(toml.get_int("study.behavior_steps", s.behavior_steps));
  s.max_workers = static_cast<std::size_t>(toml.get_int(
      "study.max_workers", static_cast<std::int64_t>(s.max_workers)));
  s.write_episode_logs =
      toml.get_bool("study.write_episode_logs", s.write_episode_logs);

  if (toml.has("ood.cases")) {
    std::vector<OodCase> cases;
    for (const auto& name : toml.get_string_array("ood.cases")) {
      for (const auto& c : default_ood_cases())
        if (c.name == name) cases.push_back(c);
    }
    cfg.ood_cases = std::move(cases);
  }
  auto override_case = [&](const std::string& name, const std::string& prefix) {
    for (auto& c : cfg.ood_cases) {
      if (c.name != name) continue;
      if (toml.has(prefix + "_train_ranges"))
        c.train_ranges = detail::intervals_from_matrix(
            toml.get_double_matrix(prefix + "_train_ranges"),
            prefix + "_train_ranges");
      if (toml.has(prefix + "_probes"))
        c.probe_values = toml.get_double_array(prefix + "_probes");
      if (toml.has(prefix + "_controls"))
        c.control_values = toml.get_double_array(prefix + "_controls");
    }
  };
  override_case("interior_hole", "ood.interior_hole");
  override_case("exterior", "ood.exterior");

  cfg.validate();
  return cfg;
}

// Canonical JSON rendering; the manifest hash is taken over this string, so
// it changes exactly when a config field changes.
inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["base_seed"] = cfg.base_seed;
  j["output_dir"] = cfg.output_dir;
  j["preset"] = cfg.preset;
  j["env"] = detail::env_config_to_json(cfg.env);
  j["train"] = detail::train_config_to_json(cfg.train);
  j["inference"] = {{"learning_rate", cfg.inference.learning_rate},
                    {"max_iterations", cfg.inference.max_iterations},
                    {"convergence_tol", cfg.inference.convergence_tol},
                    {"sigma_pi", cfg.inference.sigma_pi}};
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : cfg.study.modes) modes.push_back(to_string(m));
  j["study"] = {{"seeds", cfg.study.seeds},
                {"modes", modes},
                {"diversity_levels", cfg.study.diversity_levels},
                {"noise_sigmas", cfg.study.noise_sigmas},
                {"trajectory_lengths", cfg.study.trajectory_lengths},
                {"noise_trajectory_length", cfg.study.noise_trajectory_length},
                {"observer_steps", cfg.study.observer_steps},
                {"eval_steps", cfg.study.eval_steps},
                {"eval_episodes", cfg.study.eval_episodes},
                {"behavior_values", cfg.study.behavior_values},
                {"behavior_steps", cfg.study.behavior_steps},
                {"max_workers", cfg.study.max_workers},
                {"write_episode_logs", cfg.study.write_episode_logs}};
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : cfg.ood_cases) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& iv : c.train_ranges) ranges.push_back({iv.lo, iv.hi});
    cases.push_back({{"name", c.name},
                     {"train_ranges", ranges},
                     {"probe_values", c.probe_values},
                     {"control_values", c.control_values}});
  }
  j["ood_cases"] = cases;
  return j;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = experiment_config_to_json(cfg).dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : canon) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eftlab
