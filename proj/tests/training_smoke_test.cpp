#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eftlab/harness/studies.hpp"
#include "eftlab/train.hpp"

using namespace eftlab;
namespace fs = std::filesystem;

namespace {

// Tiny configuration so a full train/study cycle stays in the seconds range.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg = desk_config();
  cfg.env.n_agents = 3;
  cfg.train.episodes = 3;
  cfg.train.steps_per_episode = 40;
  cfg.train.batch_size = 32;
  cfg.train.hidden_sizes = {16, 16};
  cfg.train.buffer_capacity = 10000;
  cfg.train.warmup_steps = 40;
  cfg.inference.max_iterations = 30;
  cfg.study.seeds = {0, 1};
  cfg.study.trajectory_lengths = {50, 80};
  cfg.study.noise_trajectory_length = 80;
  cfg.study.noise_sigmas = {0.0, 0.1};
  cfg.study.observer_steps = 40;
  cfg.study.eval_steps = 40;
  cfg.study.behavior_values = {0.0, 1.0};
  cfg.study.behavior_steps = 40;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(TrainingSmoke, IdenticalSeedsGiveBitwiseIdenticalCheckpoints) {
  ExperimentConfig cfg = tiny_config();
  TrainResult a = train_policy(cfg.env, cfg.train, 5);
  TrainResult b = train_policy(cfg.env, cfg.train, 5);
  EXPECT_EQ(a.reward_curve, b.reward_curve);
  EXPECT_EQ(checkpoint_to_string(a.checkpoint),
            checkpoint_to_string(b.checkpoint));
  TrainResult c = train_policy(cfg.env, cfg.train, 6);
  EXPECT_NE(checkpoint_to_string(a.checkpoint),
            checkpoint_to_string(c.checkpoint));
}

TEST(TrainingSmoke, CmdTrainWritesArtifacts) {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = temp_dir("eftlab_train_smoke");
  TrainOutputs out = cmd_train(cfg, dir.string());
  EXPECT_TRUE(fs::exists(out.checkpoint_path));
  EXPECT_TRUE(fs::exists(out.curve_path));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  CsvTable curve = read_csv(out.curve_path);
  EXPECT_EQ(curve.rows.size(), 3u);  // one row per episode

  // Identical config + seed: identical curve bytes.
  std::string first = slurp(out.curve_path);
  fs::path dir2 = temp_dir("eftlab_train_smoke2");
  TrainOutputs out2 = cmd_train(cfg, dir2.string());
  EXPECT_EQ(first, slurp(out2.curve_path));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(TrainingSmoke, StudiesRunAndAreByteReproducible) {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = temp_dir("eftlab_study_smoke");
  TrainOutputs tr = cmd_train(cfg, (dir / "train").string());

  cmd_inference_study(cfg, tr.checkpoint_path, (dir / "inf1").string());
  cmd_inference_study(cfg, tr.checkpoint_path, (dir / "inf2").string());
  EXPECT_EQ(slurp(dir / "inf1" / "inference_study.csv"),
            slurp(dir / "inf2" / "inference_study.csv"));
  EXPECT_EQ(slurp(dir / "inf1" / "inference_iterations.csv"),
            slurp(dir / "inf2" / "inference_iterations.csv"));

  cmd_noise_study(cfg, tr.checkpoint_path, (dir / "noise1").string());
  cmd_noise_study(cfg, tr.checkpoint_path, (dir / "noise2").string());
  EXPECT_EQ(slurp(dir / "noise1" / "noise_study.csv"),
            slurp(dir / "noise2" / "noise_study.csv"));

  cmd_diversity_ablation(cfg, tr.checkpoint_path, (dir / "abl").string());
  CsvTable abl = read_csv((dir / "abl" / "diversity_ablation.csv").string());
  EXPECT_EQ(abl.rows.size(),
            cfg.study.diversity_levels.size() * 3 * cfg.study.seeds.size());

  // n = 1: proposed and fce_eft agree exactly, per seed.
  const int n_idx = abl.column_index("n");
  const int mode_idx = abl.column_index("mode");
  const int seed_idx = abl.column_index("seed");
  const int val_idx = abl.column_index("mean_reward");
  std::map<std::string, std::map<std::string, std::string>> by_seed;
  for (const auto& row : abl.rows)
    if (row[n_idx] == "1") by_seed[row[seed_idx]][row[mode_idx]] = row[val_idx];
  for (const auto& [seed, modes] : by_seed) {
    ASSERT_TRUE(modes.count("proposed") && modes.count("fce_eft"));
    EXPECT_EQ(modes.at("proposed"), modes.at("fce_eft")) << "seed " << seed;
  }

  cmd_behavior_study(cfg, tr.checkpoint_path, (dir / "behav").string());
  CsvTable behav = read_csv((dir / "behav" / "behavior_study.csv").string());
  EXPECT_EQ(behav.rows.size(), 3u * cfg.study.behavior_values.size() *
                                   cfg.study.seeds.size() * 3u);

  // The consistency link: noise sigma=0 reproduces the noiseless study's
  // final L1 at the shared trajectory length.
  CsvTable noise = read_csv((dir / "noise1" / "noise_study.csv").string());
  CsvTable inf = read_csv((dir / "inf1" / "inference_study.csv").string());
  const int s_sigma = noise.column_index("sigma");
  const int s_seed = noise.column_index("seed");
  const int s_l1 = noise.column_index("l1");
  const int i_T = inf.column_index("T");
  const int i_seed = inf.column_index("seed");
  const int i_l1 = inf.column_index("l1");
  for (const auto& nrow : noise.rows) {
    if (std::stod(nrow[s_sigma]) != 0.0) continue;
    std::string last_l1;
    for (const auto& irow : inf.rows)
      if (std::stoi(irow[i_T]) == cfg.study.noise_trajectory_length &&
          irow[i_seed] == nrow[s_seed])
        last_l1 = irow[i_l1];
    ASSERT_FALSE(last_l1.empty());
    EXPECT_EQ(nrow[s_l1], last_l1) << "seed " << nrow[s_seed];
  }

  ExportReport report = cmd_export_plotdata(dir.string());
  EXPECT_EQ(report.written.size(), 5u);  // everything except fig5 (no ood)
  EXPECT_EQ(report.skipped.size(), 1u);
  fs::remove_all(dir);
}
