#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "eftlab/checkpoint.hpp"
#include "eftlab/eft.hpp"
#include "eftlab/harness/config.hpp"
#include "eftlab/harness/csv.hpp"
#include "eftlab/harness/manifest.hpp"
#include "eftlab/harness/parallel.hpp"
#include "eftlab/harness/stats.hpp"
#include "eftlab/inference.hpp"
#include "eftlab/train.hpp"
#include "eftlab/trajectory.hpp"

namespace eftlab {

namespace fs = std::filesystem;

inline std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------
// Shared trajectory derivations. The planted trajectory for (T, seed) is a
// function of the base seed only — not of which study asks for it — so the
// noise study at sigma=0 reproduces the noiseless study bit for bit.
// ---------------------------------------------------------------------------

struct PlantedTrajectory {
  TrajectoryRecord traj;
  CharacterVector c_true;
};

inline PlantedTrajectory make_planted_trajectory(const Checkpoint& ck,
                                                 std::uint64_t base_seed,
                                                 int traj_len,
                                                 std::uint64_t seed_label) {
  SeededRng rng(derive_seed(base_seed, "traj", traj_len, seed_label));
  const auto& space = ck.train_config.character_space;
  const int n = ck.env_config.n_agents;
  std::vector<CharacterVector> chars(n);
  for (int i = 0; i < n; ++i) chars[i] = space.sample(rng);
  PlantedTrajectory out;
  out.c_true = chars[0];
  out.traj = collect_trajectory(ck.bundle, ck.env_config, chars, /*target=*/0,
                                traj_len, rng);
  return out;
}

inline CharacterVector draw_c_init(const CharacterSpace& bounds,
                                   std::uint64_t base_seed, int traj_len,
                                   std::uint64_t seed_label) {
  SeededRng rng(derive_seed(base_seed, "cinit", traj_len, seed_label));
  return bounds.sample(rng);
}

inline InferenceConfig inference_config_for(const ExperimentConfig& cfg) {
  InferenceConfig inf = cfg.inference;
  inf.bounds = cfg.train.character_space.bounding_box();
  return inf;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOutputs {
  std::string checkpoint_path;
  std::string curve_path;
  std::vector<double> reward_curve;
};

inline TrainOutputs cmd_train(const ExperimentConfig& cfg,
                              const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  TrainResult tr =
      train_policy(cfg.env, cfg.train, derive_seed(cfg.base_seed, "train"));

  TrainOutputs out;
  out.reward_curve = tr.reward_curve;
  out.checkpoint_path = (fs::path(out_dir) / "checkpoint.json").string();
  save_checkpoint(tr.checkpoint, out.checkpoint_path);

  out.curve_path = (fs::path(out_dir) / "reward_curve.csv").string();
  CsvWriter curve(out.curve_path, {"episode", "mean_reward"});
  for (std::size_t e = 0; e < tr.reward_curve.size(); ++e)
    curve.row(static_cast<long>(e + 1), tr.reward_curve[e]);
  curve.close();

  RunManifest m = make_manifest(cfg, "train");
  m.checkpoints["policy"] = out.checkpoint_path;
  m.outputs["reward_curve"] = out.curve_path;
  write_manifest(m, out_dir);
  return out;
}

// ---------------------------------------------------------------------------
// inference-study (convergence over iterations and trajectory length)
// ---------------------------------------------------------------------------

struct InferenceStudyCell {
  int traj_len = 0;
  std::uint64_t seed = 0;
  std::vector<double> l1_curve;  // L1 to truth after each iteration
  int iterations = 0;
  bool converged = false;
  double final_l1 = 0.0;
};

inline std::vector<InferenceStudyCell> run_inference_study_cells(
    const ExperimentConfig& cfg, const Checkpoint& ck) {
  const InferenceConfig inf = inference_config_for(cfg);
  std::vector<std::pair<int, std::uint64_t>> keys;
  for (int traj_len : cfg.study.trajectory_lengths)
    for (std::uint64_t s : cfg.study.seeds) keys.emplace_back(traj_len, s);

  std::vector<InferenceStudyCell> cells(keys.size());
  parallel_for(keys.size(), cfg.study.max_workers, [&](std::size_t k) {
    const auto [traj_len, seed] = keys[k];
    PlantedTrajectory pt =
        make_planted_trajectory(ck, cfg.base_seed, traj_len, seed);
    CharacterVector c0 =
        draw_c_init(inf.bounds, cfg.base_seed, traj_len, seed);
    InferenceResult res = infer_character(ck.bundle.actor,
                                          ck.bundle.action_space, pt.traj, c0,
                                          inf);
    InferenceStudyCell& cell = cells[k];
    cell.traj_len = traj_len;
    cell.seed = seed;
    cell.iterations = res.iterations_used;
    cell.converged = res.converged;
    cell.l1_curve.reserve(res.c_history.size());
    for (const auto& c : res.c_history)
      cell.l1_curve.push_back(l1_distance(c, pt.c_true));
    cell.final_l1 = l1_distance(res.c_hat, pt.c_true);
  });
  return cells;
}

inline void cmd_inference_study(const ExperimentConfig& cfg,
                                const std::string& checkpoint_path,
                                const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  auto cells = run_inference_study_cells(cfg, ck);

  CsvWriter curves((fs::path(out_dir) / "inference_study.csv").string(),
                   {"T", "seed", "iteration", "l1"});
  for (const auto& cell : cells)
    for (std::size_t i = 0; i < cell.l1_curve.size(); ++i)
      curves.row(cell.traj_len, cell.seed, static_cast<long>(i + 1),
                 cell.l1_curve[i]);
  curves.close();

  CsvWriter iters((fs::path(out_dir) / "inference_iterations.csv").string(),
                  {"T", "seed", "iterations", "converged"});
  for (const auto& cell : cells)
    iters.row(cell.traj_len, cell.seed, static_cast<long>(cell.iterations),
              cell.converged ? 1 : 0);
  iters.close();

  CsvWriter metrics((fs::path(out_dir) / "metrics.csv").string(),
                    {"study", "seed", "mode", "n", "sigma", "metric", "value"});
  for (const auto& cell : cells) {
    metrics.row("inference", cell.seed, "", std::to_string(cell.traj_len), "",
                "final_l1", csv_format(cell.final_l1));
    metrics.row("inference", cell.seed, "", std::to_string(cell.traj_len), "",
                "iterations", csv_format(static_cast<long>(cell.iterations)));
  }
  metrics.close();

  RunManifest m = make_manifest(cfg, "inference-study");
  m.checkpoints["policy"] = checkpoint_path;
  m.outputs["inference_study"] =
      (fs::path(out_dir) / "inference_study.csv").string();
  m.outputs["inference_iterations"] =
      (fs::path(out_dir) / "inference_iterations.csv").string();
  write_manifest(m, out_dir);
}

// ---------------------------------------------------------------------------
// noise-study (Table-1 analog)
// ---------------------------------------------------------------------------

struct NoiseStudyCell {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  InferenceMetrics metrics;
};

inline std::vector<NoiseStudyCell> run_noise_study_cells(
    const ExperimentConfig& cfg, const Checkpoint& ck) {
  const InferenceConfig inf = inference_config_for(cfg);
  const int traj_len = cfg.study.noise_trajectory_length;
  std::vector<std::pair<double, std::uint64_t>> keys;
  for (double sigma : cfg.study.noise_sigmas)
    for (std::uint64_t s : cfg.study.seeds) keys.emplace_back(sigma, s);

  std::vector<NoiseStudyCell> cells(keys.size());
  parallel_for(keys.size(), cfg.study.max_workers, [&](std::size_t k) {
    const auto [sigma, seed] = keys[k];
    PlantedTrajectory pt =
        make_planted_trajectory(ck, cfg.base_seed, traj_len, seed);
    SeededRng noise_rng(
        derive_seed(cfg.base_seed, "noise", bits_of(sigma), seed));
    TrajectoryRecord noisy = add_trajectory_noise(pt.traj, sigma, noise_rng);
    CharacterVector c0 =
        draw_c_init(inf.bounds, cfg.base_seed, traj_len, seed);
    InferenceResult res = infer_character(ck.bundle.actor,
                                          ck.bundle.action_space, noisy, c0,
                                          inf);
    // SNR is defined against the clean trajectory's signal power.
    cells[k] = NoiseStudyCell{
        sigma, seed,
        inference_metrics(res.c_hat, pt.c_true, sigma, pt.traj,
                          inf.bounds)};
  });
  return cells;
}

inline void cmd_noise_study(const ExperimentConfig& cfg,
                            const std::string& checkpoint_path,
                            const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  auto cells = run_noise_study_cells(cfg, ck);

  CsvWriter w((fs::path(out_dir) / "noise_study.csv").string(),
              {"sigma", "seed", "acc", "l1", "snr_db", "signal_power"});
  for (const auto& c : cells)
    w.row(c.sigma, c.seed, c.metrics.acc_percent, c.metrics.l1,
          c.metrics.snr_db, c.metrics.signal_power);
  w.close();

  CsvWriter metrics((fs::path(out_dir) / "metrics.csv").string(),
                    {"study", "seed", "mode", "n", "sigma", "metric", "value"});
  for (const auto& c : cells) {
    metrics.row("noise", c.seed, "", "", csv_format(c.sigma), "acc",
                csv_format(c.metrics.acc_percent));
    metrics.row("noise", c.seed, "", "", csv_format(c.sigma), "l1",
                csv_format(c.metrics.l1));
  }
  metrics.close();

  RunManifest m = make_manifest(cfg, "noise-study");
  m.checkpoints["policy"] = checkpoint_path;
  m.outputs["noise_study"] = (fs::path(out_dir) / "noise_study.csv").string();
  write_manifest(m, out_dir);
}

// ---------------------------------------------------------------------------
// diversity-ablation (Fig-4 analog)
// ---------------------------------------------------------------------------

// Records every listed target during one greedy rollout.
inline std::map<int, TrajectoryRecord> collect_observer_trajectories(
    const PolicyBundle& bundle, const EnvConfig& env_cfg,
    const std::vector<CharacterVector>& chars, const std::vector<int>& targets,
    int steps, SeededRng& rng) {
  std::map<int, TrajectoryRecord> out;
  for (int t : targets) out[t] = TrajectoryRecord{};
  WorldState state = reset(rng, env_cfg);
  std::vector<HybridAction> actions(env_cfg.n_agents);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < env_cfg.n_agents; ++i)
      actions[i] = act(bundle, observe(state, i, env_cfg), chars[i],
                       /*explore=*/false, rng);
    for (auto& [target, traj] : out)
      traj.steps.push_back(TrajStep{observe(state, target, env_cfg),
                                    actions[target].accel,
                                    actions[target].lane_change});
    state = step(state, actions, env_cfg).next;
  }
  return out;
}

struct AblationCell {
  int n = 0;
  std::uint64_t seed = 0;
  std::map<AgentMode, double> mean_reward;
  std::map<AgentMode, EpisodeResult> episodes;  // kept for log export
};

// Protocol per (n, seed): agents are split round-robin into n groups, one
// character per group. The ego (agent 0) knows groupmates share its own
// character; every foreign group's character is inferred from one
// representative's observer trajectory, then all modes evaluate on the same
// derived episode seed.
inline AblationCell run_ablation_cell(const ExperimentConfig& cfg,
                                      const Checkpoint& ck, int n,
                                      std::uint64_t seed) {
  const EnvConfig& env_cfg = ck.env_config;
  const int n_agents = env_cfg.n_agents;
  const InferenceConfig inf = inference_config_for(cfg);

  SeededRng char_rng(derive_seed(cfg.base_seed, "abl-chars", n, seed));
  std::vector<CharacterVector> group_chars(n);
  for (int g = 0; g < n; ++g)
    group_chars[g] = ck.train_config.character_space.sample(char_rng);
  std::vector<CharacterVector> chars(n_agents);
  for (int i = 0; i < n_agents; ++i) chars[i] = group_chars[i % n];

  // Observer phase: representative of every foreign group (agent g is the
  // lowest-indexed member of group g under the round-robin assignment).
  std::vector<int> reps;
  for (int g = 1; g < n; ++g) reps.push_back(g);
  InferredCharacterMap chars_for_eft;
  if (!reps.empty()) {
    SeededRng obs_rng(derive_seed(cfg.base_seed, "abl-obs", n, seed));
    auto trajs = collect_observer_trajectories(
        ck.bundle, env_cfg, chars, reps, cfg.study.observer_steps, obs_rng);
    std::map<int, CharacterVector> inferred_by_group;
    for (int g : reps) {
      SeededRng init_rng(derive_seed(cfg.base_seed, "abl-init", n, seed, g));
      CharacterVector c0 = inf.bounds.sample(init_rng);
      InferenceResult res =
          infer_character(ck.bundle.actor, ck.bundle.action_space,
                          trajs.at(g), c0, inf);
      inferred_by_group[g] = res.c_hat;
    }
    for (int j = 1; j < n_agents; ++j) {
      const int g = j % n;
      chars_for_eft[j] = g == 0 ? chars[0] : inferred_by_group.at(g);
    }
  } else {
    for (int j = 1; j < n_agents; ++j) chars_for_eft[j] = chars[0];
  }

  AblationCell cell;
  cell.n = n;
  cell.seed = seed;
  const std::uint64_t eval_seed = derive_seed(cfg.base_seed, "abl-eval", n, seed);
  for (AgentMode mode : cfg.study.modes) {
    SeededRng eval_rng(eval_seed);
    EpisodeResult er = run_episode(ck.bundle, env_cfg, mode, chars,
                                   chars_for_eft, cfg.study.eval_steps,
                                   eval_rng);
    cell.mean_reward[mode] = er.mean_step_reward(cfg.study.eval_steps);
    cell.episodes[mode] = std::move(er);
  }
  return cell;
}

inline std::vector<AblationCell> run_ablation_cells(
    const ExperimentConfig& cfg, const Checkpoint& ck) {
  std::vector<std::pair<int, std::uint64_t>> keys;
  for (int n : cfg.study.diversity_levels)
    for (std::uint64_t s : cfg.study.seeds) keys.emplace_back(n, s);
  std::vector<AblationCell> cells(keys.size());
  parallel_for(keys.size(), cfg.study.max_workers, [&](std::size_t k) {
    cells[k] = run_ablation_cell(cfg, ck, keys[k].first, keys[k].second);
  });
  return cells;
}

inline void write_episode_log_csv(const std::vector<EpisodeLogRow>& rows,
                                  const std::string& path) {
  std::vector<std::string> cols = {"step", "agent"};
  for (int i = 1; i <= 14; ++i) cols.push_back("o_" + std::to_string(i));
  for (const char* c : {"a_c", "proto", "a_d", "r1", "r2", "r3",
                        "r_fail_applied", "total"})
    cols.push_back(c);
  CsvWriter w(path, cols);
  for (const auto& r : rows) {
    std::vector<std::string> fields = {std::to_string(r.step),
                                       std::to_string(r.agent)};
    for (double o : r.obs) fields.push_back(csv_format(o));
    fields.push_back(csv_format(r.accel));
    fields.push_back(csv_format(r.proto));
    fields.push_back(std::to_string(r.lane_change));
    fields.push_back(csv_format(r.reward.r1));
    fields.push_back(csv_format(r.reward.r2));
    fields.push_back(csv_format(r.reward.r3));
    fields.push_back(csv_format(r.reward.r_fail_applied));
    fields.push_back(csv_format(r.reward.total));
    w.row_strings(fields);
  }
  w.close();
}

inline void cmd_diversity_ablation(const ExperimentConfig& cfg,
                                   const std::string& checkpoint_path,
                                   const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  auto cells = run_ablation_cells(cfg, ck);

  CsvWriter w((fs::path(out_dir) / "diversity_ablation.csv").string(),
              {"n", "mode", "seed", "mean_reward"});
  for (const auto& cell : cells)
    for (AgentMode mode : cfg.study.modes)
      w.row(cell.n, to_string(mode), cell.seed, cell.mean_reward.at(mode));
  w.close();

  if (cfg.study.write_episode_logs) {
    const std::string log_dir = ensure_dir((fs::path(out_dir) / "episodes").string());
    for (const auto& cell : cells)
      for (const auto& [mode, er] : cell.episodes)
        write_episode_log_csv(
            er.log, (fs::path(log_dir) /
                     ("n" + std::to_string(cell.n) + "_seed" +
                      std::to_string(cell.seed) + "_" + to_string(mode) +
                      ".csv"))
                        .string());
  }

  CsvWriter metrics((fs::path(out_dir) / "metrics.csv").string(),
                    {"study", "seed", "mode", "n", "sigma", "metric", "value"});
  for (const auto& cell : cells)
    for (AgentMode mode : cfg.study.modes)
      metrics.row("diversity", cell.seed, to_string(mode),
                  std::to_string(cell.n), "", "mean_reward",
                  csv_format(cell.mean_reward.at(mode)));
  metrics.close();

  RunManifest m = make_manifest(cfg, "diversity-ablation");
  m.checkpoints["policy"] = checkpoint_path;
  m.outputs["diversity_ablation"] =
      (fs::path(out_dir) / "diversity_ablation.csv").string();
  write_manifest(m, out_dir);
}

// ---------------------------------------------------------------------------
// ood-study (Fig-5 analog); trains its own restricted-range checkpoints
// ---------------------------------------------------------------------------

struct OodCell {
  std::string case_name;
  double probe = 0.0;
  bool ood = true;
  std::uint64_t seed = 0;
  double c_hat_mean = 0.0;
  double abs_error = 0.0;  // mean per-component |c_hat - probe|
};

inline std::vector<OodCell> run_ood_case_cells(const ExperimentConfig& cfg,
                                               const OodCase& ood_case,
                                               int case_index,
                                               const Checkpoint& ck) {
  InferenceConfig inf = inference_config_for(cfg);  // full-range bounds
  const int traj_len = cfg.study.noise_trajectory_length;
  const int dims = cfg.train.character_space.dims();

  struct Key {
    double probe;
    bool ood;
    std::uint64_t seed;
  };
  std::vector<Key> keys;
  for (double p : ood_case.probe_values)
    for (std::uint64_t s : cfg.study.seeds) keys.push_back({p, true, s});
  for (double p : ood_case.control_values)
    for (std::uint64_t s : cfg.study.seeds) keys.push_back({p, false, s});

  std::vector<OodCell> cells(keys.size());
  parallel_for(keys.size(), cfg.study.max_workers, [&](std::size_t k) {
    const Key key = keys[k];
    SeededRng traj_rng(derive_seed(cfg.base_seed, "ood-traj", case_index,
                                   bits_of(key.probe), key.seed));
    const int n = ck.env_config.n_agents;
    std::vector<CharacterVector> chars(n);
    for (int i = 0; i < n; ++i)
      chars[i] = ck.train_config.character_space.sample(traj_rng);
    chars[0] = CharacterVector(static_cast<std::size_t>(dims), key.probe);
    TrajectoryRecord traj = collect_trajectory(ck.bundle, ck.env_config,
                                               chars, 0, traj_len, traj_rng);
    SeededRng init_rng(derive_seed(cfg.base_seed, "ood-init", case_index,
                                   bits_of(key.probe), key.seed));
    CharacterVector c0 = inf.bounds.sample(init_rng);
    InferenceResult res = infer_character(ck.bundle.actor,
                                          ck.bundle.action_space, traj, c0,
                                          inf);
    double mean_c = 0.0, err = 0.0;
    for (double c : res.c_hat) {
      mean_c += c;
      err += std::abs(c - key.probe);
    }
    cells[k] = OodCell{ood_case.name,
                       key.probe,
                       key.ood,
                       key.seed,
                       mean_c / dims,
                       err / dims};
  });
  return cells;
}

// Trains one policy per OOD case with characters drawn only from the case's
// restricted ranges, then infers planted probes against it.
inline void cmd_ood_study(const ExperimentConfig& cfg,
                          const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  if (cfg.ood_cases.empty()) throw ConfigError("no ood cases configured");

  RunManifest m = make_manifest(cfg, "ood-study");
  std::vector<OodCell> all_cells;
  for (std::size_t ci = 0; ci < cfg.ood_cases.size(); ++ci) {
    const OodCase& c = cfg.ood_cases[ci];
    TrainConfig restricted = cfg.train;
    restricted.character_space = CharacterSpace::uniform(
        cfg.train.character_space.dims(), c.train_ranges);
    TrainResult tr =
        train_policy(cfg.env, restricted,
                     derive_seed(cfg.base_seed, "ood-train",
                                 static_cast<int>(ci)));
    const std::string ck_path =
        (fs::path(out_dir) / ("checkpoint_" + c.name + ".json")).string();
    save_checkpoint(tr.checkpoint, ck_path);
    m.checkpoints[c.name] = ck_path;

    auto cells = run_ood_case_cells(cfg, c, static_cast<int>(ci),
                                    tr.checkpoint);
    all_cells.insert(all_cells.end(), cells.begin(), cells.end());
  }

  CsvWriter w((fs::path(out_dir) / "ood_study.csv").string(),
              {"case", "probe", "kind", "seed", "c_hat_mean", "abs_error"});
  for (const auto& cell : all_cells)
    w.row(cell.case_name, cell.probe, cell.ood ? "ood" : "control", cell.seed,
          cell.c_hat_mean, cell.abs_error);
  w.close();

  CsvWriter metrics((fs::path(out_dir) / "metrics.csv").string(),
                    {"study", "seed", "mode", "n", "sigma", "metric", "value"});
  for (const auto& cell : all_cells)
    metrics.row("ood", cell.seed, cell.case_name, "",
                csv_format(cell.probe), "abs_error",
                csv_format(cell.abs_error));
  metrics.close();

  m.outputs["ood_study"] = (fs::path(out_dir) / "ood_study.csv").string();
  write_manifest(m, out_dir);
}

// ---------------------------------------------------------------------------
// behavior-study (Appendix-H analog): sweep one character component with the
// others zeroed, roll out a homogeneous society, log behavior statistics.
// ---------------------------------------------------------------------------

struct BehaviorCell {
  int component = 0;  // 0-based
  double value = 0.0;
  std::uint64_t seed = 0;
  double mean_velocity = 0.0;
  double mean_follower_gap = 0.0;  // meters, capped at the observation radius
  double lane_changes_per_agent = 0.0;
};

inline std::vector<BehaviorCell> run_behavior_cells(const ExperimentConfig& cfg,
                                                    const Checkpoint& ck) {
  const EnvConfig& env_cfg = ck.env_config;
  const int dims = ck.train_config.character_space.dims();
  struct Key {
    int component;
    double value;
    std::uint64_t seed;
  };
  std::vector<Key> keys;
  for (int k = 0; k < dims; ++k)
    for (double v : cfg.study.behavior_values)
      for (std::uint64_t s : cfg.study.seeds) keys.push_back({k, v, s});

  std::vector<BehaviorCell> cells(keys.size());
  parallel_for(keys.size(), cfg.study.max_workers, [&](std::size_t idx) {
    const Key key = keys[idx];
    CharacterVector c(static_cast<std::size_t>(dims), 0.0);
    c[key.component] = key.value;
    std::vector<CharacterVector> chars(env_cfg.n_agents, c);
    SeededRng rng(derive_seed(cfg.base_seed, "behavior", key.component,
                              bits_of(key.value), key.seed));
    WorldState state = reset(rng, env_cfg);
    std::vector<HybridAction> actions(env_cfg.n_agents);
    double vel_sum = 0.0, gap_sum = 0.0;
    long lane_changes = 0;
    for (int t = 0; t < cfg.study.behavior_steps; ++t) {
      for (int i = 0; i < env_cfg.n_agents; ++i)
        actions[i] = act(ck.bundle, observe(state, i, env_cfg), chars[i],
                         false, rng);
      StepResult sr = step(state, actions, env_cfg);
      for (int i = 0; i < env_cfg.n_agents; ++i) {
        vel_sum += sr.next.velocities[i];
        Neighbor follow = detail::nearest_follower(
            sr.next, i, sr.next.lanes[i], env_cfg.obs_radius,
            env_cfg.circumference);
        gap_sum += follow.exists ? follow.gap : env_cfg.obs_radius;
        if (sr.next.lanes[i] != state.lanes[i]) ++lane_changes;
      }
      state = std::move(sr.next);
    }
    const double samples =
        static_cast<double>(cfg.study.behavior_steps) * env_cfg.n_agents;
    cells[idx] = BehaviorCell{
        key.component,
        key.value,
        key.seed,
        vel_sum / samples,
        gap_sum / samples,
        static_cast<double>(lane_changes) / env_cfg.n_agents};
  });
  return cells;
}

inline void cmd_behavior_study(const ExperimentConfig& cfg,
                               const std::string& checkpoint_path,
                               const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  auto cells = run_behavior_cells(cfg, ck);

  CsvWriter w((fs::path(out_dir) / "behavior_study.csv").string(),
              {"component", "value", "seed", "metric", "stat"});
  for (const auto& cell : cells) {
    const std::string comp = "c" + std::to_string(cell.component + 1);
    w.row(comp, cell.value, cell.seed, "mean_velocity", cell.mean_velocity);
    w.row(comp, cell.value, cell.seed, "mean_follower_gap",
          cell.mean_follower_gap);
    w.row(comp, cell.value, cell.seed, "lane_changes",
          cell.lane_changes_per_agent);
  }
  w.close();

  RunManifest m = make_manifest(cfg, "behavior-study");
  m.checkpoints["policy"] = checkpoint_path;
  m.outputs["behavior_study"] =
      (fs::path(out_dir) / "behavior_study.csv").string();
  write_manifest(m, out_dir);
}

// ---------------------------------------------------------------------------
// export-plotdata: aggregate raw study CSVs into one tidy file per figure.
// ---------------------------------------------------------------------------

struct ExportReport {
  std::vector<std::string> written;
  std::vector<std::string> skipped;  // "figure: reason"
};

namespace detail {

// Group rows by a key column tuple and aggregate one value column.
struct GroupAgg {
  std::vector<std::string> key;
  std::vector<double> values;
};

inline std::vector<GroupAgg> group_by(const CsvTable& table,
                                      const std::vector<std::string>& key_cols,
                                      const std::string& value_col) {
  std::vector<int> key_idx;
  for (const auto& c : key_cols) key_idx.push_back(table.column_index(c));
  const int value_idx = table.column_index(value_col);
  std::map<std::vector<std::string>, std::vector<double>> groups;
  for (const auto& row : table.rows) {
    std::vector<std::string> key;
    for (int i : key_idx) key.push_back(row[i]);
    groups[key].push_back(std::stod(row[value_idx]));
  }
  std::vector<GroupAgg> out;
  for (auto& [key, values] : groups)
    out.push_back(GroupAgg{key, std::move(values)});
  return out;
}

}  // namespace detail

inline ExportReport cmd_export_plotdata(const std::string& run_dir,
                                        std::ostream& notices = std::cerr) {
  ExportReport report;
  const fs::path base(run_dir);
  if (!fs::exists(base)) throw IoError("run directory '" + run_dir + "' not found");
  const fs::path out = base / "plotdata";

  // Study CSVs may live in the run dir itself or one subdirectory below;
  // ties resolve to the lexicographically smallest path.
  auto find_csv = [&](const std::string& name) -> std::string {
    if (fs::exists(base / name)) return (base / name).string();
    std::vector<std::string> hits;
    if (fs::is_directory(base))
      for (const auto& entry : fs::directory_iterator(base))
        if (entry.is_directory() && fs::exists(entry.path() / name))
          hits.push_back((entry.path() / name).string());
    std::sort(hits.begin(), hits.end());
    return hits.empty() ? std::string{} : hits.front();
  };
  auto skip = [&](const std::string& fig, const std::string& missing) {
    report.skipped.push_back(fig + ": " + missing + " not found");
    notices << "[skip] " << fig << ": " << missing << " not found\n";
  };
  auto ensure_out = [&]() { ensure_dir(out.string()); };

  // fig3a: mean/std of the L1 curve over seeds at the longest T.
  if (std::string path = find_csv("inference_study.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    long t_max = 0;
    const int t_idx = t.column_index("T");
    for (const auto& row : t.rows) t_max = std::max(t_max, std::stol(row[t_idx]));
    std::map<long, std::vector<double>> by_iter;
    const int iter_idx = t.column_index("iteration");
    const int l1_idx = t.column_index("l1");
    for (const auto& row : t.rows)
      if (std::stol(row[t_idx]) == t_max)
        by_iter[std::stol(row[iter_idx])].push_back(std::stod(row[l1_idx]));
    ensure_out();
    CsvWriter w((out / "fig3a.csv").string(),
                {"iteration", "mean_l1", "std_l1", "n_seeds"});
    for (const auto& [iter, values] : by_iter)
      w.row(iter, mean(values), stddev(values),
            static_cast<long>(values.size()));
    w.close();
    report.written.push_back((out / "fig3a.csv").string());
  } else {
    skip("fig3a", "inference_study.csv");
  }

  // fig3b: iterations-to-convergence vs trajectory length.
  if (std::string path = find_csv("inference_iterations.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    auto groups = detail::group_by(t, {"T"}, "iterations");
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) {
                return std::stol(a.key[0]) < std::stol(b.key[0]);
              });
    ensure_out();
    CsvWriter w((out / "fig3b.csv").string(),
                {"T", "mean_iterations", "std_iterations", "median_iterations"});
    for (const auto& g : groups)
      w.row(std::stol(g.key[0]), mean(g.values), stddev(g.values),
            median(g.values));
    w.close();
    report.written.push_back((out / "fig3b.csv").string());
  } else {
    skip("fig3b", "inference_iterations.csv");
  }

  // fig4: mean/std reward per (n, mode).
  if (std::string path = find_csv("diversity_ablation.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    auto groups = detail::group_by(t, {"n", "mode"}, "mean_reward");
    ensure_out();
    CsvWriter w((out / "fig4.csv").string(),
                {"n", "mode", "mean_reward", "std_reward"});
    for (const auto& g : groups)
      w.row(std::stol(g.key[0]), g.key[1], mean(g.values), stddev(g.values));
    w.close();
    report.written.push_back((out / "fig4.csv").string());
  } else {
    skip("fig4", "diversity_ablation.csv");
  }

  // table1: accuracy and snr per noise level.
  if (std::string path = find_csv("noise_study.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    auto acc = detail::group_by(t, {"sigma"}, "acc");
    auto l1 = detail::group_by(t, {"sigma"}, "l1");
    auto snr = detail::group_by(t, {"sigma"}, "snr_db");
    auto key_less = [](const auto& a, const auto& b) {
      return std::stod(a.key[0]) < std::stod(b.key[0]);
    };
    std::sort(acc.begin(), acc.end(), key_less);
    std::sort(l1.begin(), l1.end(), key_less);
    std::sort(snr.begin(), snr.end(), key_less);
    ensure_out();
    CsvWriter w((out / "table1.csv").string(),
                {"sigma", "mean_acc", "std_acc", "mean_l1", "snr_db"});
    for (std::size_t i = 0; i < acc.size(); ++i)
      w.row(std::stod(acc[i].key[0]), mean(acc[i].values),
            stddev(acc[i].values), mean(l1[i].values), mean(snr[i].values));
    w.close();
    report.written.push_back((out / "table1.csv").string());
  } else {
    skip("table1", "noise_study.csv");
  }

  // fig5: estimated vs true characters per case and probe.
  if (std::string path = find_csv("ood_study.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    auto est = detail::group_by(t, {"case", "probe", "kind"}, "c_hat_mean");
    auto err = detail::group_by(t, {"case", "probe", "kind"}, "abs_error");
    ensure_out();
    CsvWriter w((out / "fig5.csv").string(),
                {"case", "probe", "kind", "mean_c_hat", "std_c_hat",
                 "mean_abs_error"});
    for (std::size_t i = 0; i < est.size(); ++i)
      w.row(est[i].key[0], std::stod(est[i].key[1]), est[i].key[2],
            mean(est[i].values), stddev(est[i].values), mean(err[i].values));
    w.close();
    report.written.push_back((out / "fig5.csv").string());
  } else {
    skip("fig5", "ood_study.csv");
  }

  // figA1: behavior statistics per component sweep value.
  if (std::string path = find_csv("behavior_study.csv"); !path.empty()) {
    CsvTable t = read_csv(path);
    auto groups = detail::group_by(t, {"component", "value", "metric"}, "stat");
    ensure_out();
    CsvWriter w((out / "figA1.csv").string(),
                {"component", "value", "metric", "mean", "std"});
    for (const auto& g : groups)
      w.row(g.key[0], std::stod(g.key[1]), g.key[2], mean(g.values),
            stddev(g.values));
    w.close();
    report.written.push_back((out / "figA1.csv").string());
  } else {
    skip("figA1", "behavior_study.csv");
  }

  return report;
}

}  // namespace eftlab
