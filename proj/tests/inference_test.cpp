#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "eftlab/inference.hpp"
#include "eftlab/policy.hpp"
#include "eftlab/trajectory.hpp"
#include "testutil.hpp"

using namespace eftlab;

namespace {

PolicyBundle small_bundle(std::uint64_t seed = 1) {
  EnvConfig env;
  TrainConfig tc;
  tc.hidden_sizes = {16, 16};
  SeededRng rng(seed);
  return make_bundle(env, tc, rng);
}

ObservationVec random_obs(SeededRng& rng) {
  ObservationVec o;
  for (double& x : o) x = rng.uniform(-1.0, 1.0);
  return o;
}

// Trajectory generated by the bundle's own greedy policy under c_true.
TrajectoryRecord self_consistent_trajectory(const PolicyBundle& b,
                                            const CharacterVector& c_true,
                                            int steps, SeededRng& rng) {
  TrajectoryRecord traj;
  SeededRng unused(0);
  for (int t = 0; t < steps; ++t) {
    TrajStep s;
    s.obs = random_obs(rng);
    HybridAction a = act(b, s.obs, c_true, false, unused);
    s.accel = a.accel;
    s.lane_change = a.lane_change;
    traj.steps.push_back(s);
  }
  return traj;
}

}  // namespace

TEST(TrajectoryLoss, ZeroAtGeneratingCharacter) {
  PolicyBundle b = small_bundle();
  SeededRng rng(4);
  CharacterVector c_true = {0.3, 0.6, 0.9};
  TrajectoryRecord traj = self_consistent_trajectory(b, c_true, 50, rng);
  TrajectoryLoss tl =
      trajectory_loss(b.actor, b.action_space, traj, c_true);
  EXPECT_DOUBLE_EQ(tl.loss, 0.0);
  for (double g : tl.grad_c) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(TrajectoryLoss, NonNegativeEverywhere) {
  PolicyBundle b = small_bundle();
  SeededRng rng(5);
  CharacterVector c_true = {0.2, 0.4, 0.6};
  TrajectoryRecord traj = self_consistent_trajectory(b, c_true, 30, rng);
  for (int k = 0; k < 20; ++k) {
    CharacterVector c = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                         rng.uniform(0.0, 1.0)};
    TrajectoryLoss tl = trajectory_loss(b.actor, b.action_space, traj, c);
    EXPECT_GE(tl.loss, 0.0);
  }
}

TEST(TrajectoryLoss, RejectsEmptyTrajectory) {
  PolicyBundle b = small_bundle();
  TrajectoryRecord empty;
  EXPECT_THROW(
      trajectory_loss(b.actor, b.action_space, empty, {0.5, 0.5, 0.5}),
      ShapeError);
}

// Gradient wrt the character slice vs central differences, at probes where
// the discrete indicator set is locally constant.
TEST(TrajectoryLoss, GradientMatchesFiniteDifferences) {
  PolicyBundle b = small_bundle(21);
  SeededRng rng(6);
  CharacterVector c_true = {0.5, 0.5, 0.5};
  TrajectoryRecord traj = self_consistent_trajectory(b, c_true, 25, rng);
  const double h = 1e-6;
  int checked = 0;
  for (int probe = 0; probe < 40 && checked < 20; ++probe) {
    CharacterVector c = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                         rng.uniform(0.05, 0.95)};
    auto loss_at = [&](const std::vector<double>& cc) {
      return trajectory_loss(b.actor, b.action_space, traj, cc).loss;
    };
    // Skip probes whose indicator pattern flips within the FD stencil.
    auto pattern = [&](const CharacterVector& cc) {
      std::vector<int> pat;
      SeededRng unused(0);
      for (const auto& s : traj.steps) {
        HybridAction a = act(b, s.obs, cc, false, unused);
        pat.push_back(a.lane_change != s.lane_change ? 1 : 0);
      }
      return pat;
    };
    bool stable = true;
    auto base_pat = pattern(c);
    for (std::size_t k = 0; k < c.size() && stable; ++k) {
      CharacterVector up = c, dn = c;
      up[k] += h;
      dn[k] -= h;
      stable = pattern(up) == base_pat && pattern(dn) == base_pat;
    }
    if (!stable) continue;

    TrajectoryLoss tl = trajectory_loss(b.actor, b.action_space, traj, c);
    for (std::size_t k = 0; k < c.size(); ++k) {
      double fd = testutil::central_diff(loss_at, c, k, h);
      EXPECT_LE(testutil::relative_error(tl.grad_c[k], fd), 1e-4)
          << "probe " << probe << " component " << k;
    }
    ++checked;
  }
  EXPECT_GE(checked, 15);
}

TEST(InferCharacter, ImmediateConvergenceAtTruth) {
  PolicyBundle b = small_bundle();
  SeededRng rng(4);
  CharacterVector c_true = {0.3, 0.6, 0.9};
  TrajectoryRecord traj = self_consistent_trajectory(b, c_true, 40, rng);
  InferenceConfig cfg;
  InferenceResult res =
      infer_character(b.actor, b.action_space, traj, c_true, cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations_used, 1);
  ASSERT_EQ(res.loss_curve.size(), 1u);
  EXPECT_DOUBLE_EQ(res.loss_curve[0], 0.0);
  EXPECT_EQ(res.c_hat, c_true);
}

TEST(InferCharacter, StaysInsideBounds) {
  PolicyBundle b = small_bundle();
  SeededRng rng(8);
  CharacterVector c_true = {0.1, 0.9, 0.5};
  TrajectoryRecord traj = self_consistent_trajectory(b, c_true, 40, rng);
  InferenceConfig cfg;
  cfg.max_iterations = 50;
  InferenceResult res = infer_character(b.actor, b.action_space, traj,
                                        {0.5, 0.5, 0.5}, cfg);
  EXPECT_TRUE(cfg.bounds.contains(res.c_hat));
  EXPECT_LE(res.iterations_used, cfg.max_iterations);
  EXPECT_EQ(res.loss_curve.size(),
            static_cast<std::size_t>(res.iterations_used));
  EXPECT_EQ(res.c_history.size(),
            static_cast<std::size_t>(res.iterations_used));
}

TEST(InferCharacter, RejectsInitOutsideBounds) {
  PolicyBundle b = small_bundle();
  SeededRng rng(8);
  TrajectoryRecord traj =
      self_consistent_trajectory(b, {0.5, 0.5, 0.5}, 5, rng);
  InferenceConfig cfg;
  EXPECT_THROW(
      infer_character(b.actor, b.action_space, traj, {1.5, 0.5, 0.5}, cfg),
      ConfigError);
}

TEST(AddTrajectoryNoise, SigmaZeroIsIdentity) {
  PolicyBundle b = small_bundle();
  SeededRng rng(9);
  TrajectoryRecord traj =
      self_consistent_trajectory(b, {0.5, 0.5, 0.5}, 20, rng);
  SeededRng noise(1);
  TrajectoryRecord out = add_trajectory_noise(traj, 0.0, noise);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    EXPECT_EQ(out.steps[t].obs, traj.steps[t].obs);
    EXPECT_EQ(out.steps[t].accel, traj.steps[t].accel);
    EXPECT_EQ(out.steps[t].lane_change, traj.steps[t].lane_change);
  }
}

TEST(AddTrajectoryNoise, EmpiricalStdMatchesSigma) {
  // Small observations keep the clip inactive so the sample std is unbiased.
  TrajectoryRecord traj;
  const int steps = 7200;  // 7200*14 > 1e5 samples
  for (int t = 0; t < steps; ++t) {
    TrajStep s;
    s.obs.fill(0.0);
    traj.steps.push_back(s);
  }
  const double sigma = 0.05;
  SeededRng rng(11);
  TrajectoryRecord out = add_trajectory_noise(traj, sigma, rng);
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : out.steps)
    for (double o : s.obs) {
      sq += o * o;
      ++n;
    }
  const double est = std::sqrt(sq / static_cast<double>(n));
  EXPECT_NEAR(est, sigma, 0.05 * sigma);
}

TEST(AddTrajectoryNoise, OutputsClippedToObservationRange) {
  TrajectoryRecord traj;
  TrajStep s;
  s.obs.fill(1.0);
  traj.steps.assign(100, s);
  SeededRng rng(13);
  TrajectoryRecord out = add_trajectory_noise(traj, 2.0, rng);
  for (const auto& st : out.steps)
    for (double o : st.obs) {
      EXPECT_GE(o, -1.0);
      EXPECT_LE(o, 1.0);
    }
}

TEST(InferenceMetrics, PerfectRecovery) {
  TrajectoryRecord traj;
  TrajStep s;
  s.obs.fill(0.5);
  traj.steps.assign(10, s);
  CharacterVector c = {0.2, 0.4, 0.6};
  auto m = inference_metrics(c, c, 0.1, traj, CharacterSpace::unit_box(3));
  EXPECT_DOUBLE_EQ(m.l1, 0.0);
  EXPECT_DOUBLE_EQ(m.acc_percent, 100.0);
}

TEST(InferenceMetrics, UniformDeviationAccuracy) {
  TrajectoryRecord traj;
  TrajStep s;
  s.obs.fill(0.5);
  traj.steps.assign(10, s);
  CharacterVector c_true = {0.2, 0.4, 0.6};
  CharacterVector c_hat = {0.3, 0.5, 0.7};
  auto m = inference_metrics(c_hat, c_true, 0.1, traj,
                             CharacterSpace::unit_box(3));
  EXPECT_NEAR(m.l1, 0.3, 1e-12);
  EXPECT_NEAR(m.acc_percent, 90.0, 1e-9);
}

TEST(InferenceMetrics, SnrClosedFormAndZeroSigmaSentinel) {
  TrajectoryRecord traj;
  TrajStep s;
  s.obs.fill(0.5);  // power 0.25
  traj.steps.assign(10, s);
  CharacterVector c = {0.5, 0.5, 0.5};
  auto m = inference_metrics(c, c, 0.1, traj, CharacterSpace::unit_box(3));
  EXPECT_NEAR(m.snr_db, 10.0 * std::log10(0.25 / 0.01), 1e-12);
  auto m0 = inference_metrics(c, c, 0.0, traj, CharacterSpace::unit_box(3));
  EXPECT_TRUE(std::isinf(m0.snr_db));
}

TEST(TrajectoryCsv, RoundTripAndHeaderCheck) {
  PolicyBundle b = small_bundle();
  SeededRng rng(15);
  TrajectoryRecord traj =
      self_consistent_trajectory(b, {0.1, 0.5, 0.9}, 12, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "eftlab_traj.csv").string();
  save_trajectory_csv(traj, path);
  TrajectoryRecord loaded = load_trajectory_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(loaded.steps.size(), traj.steps.size());
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    EXPECT_EQ(loaded.steps[t].obs, traj.steps[t].obs);
    EXPECT_EQ(loaded.steps[t].accel, traj.steps[t].accel);
    EXPECT_EQ(loaded.steps[t].lane_change, traj.steps[t].lane_change);
  }
}
