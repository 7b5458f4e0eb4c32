#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "eftlab/eft.hpp"
#include "eftlab/policy.hpp"

using namespace eftlab;

namespace {

PolicyBundle small_bundle(std::uint64_t seed = 1) {
  EnvConfig env;
  TrainConfig tc;
  tc.hidden_sizes = {16, 16};
  SeededRng rng(seed);
  return make_bundle(env, tc, rng);
}

std::vector<CharacterVector> society(int n, SeededRng& rng) {
  std::vector<CharacterVector> chars(n);
  for (auto& c : chars)
    c = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
  return chars;
}

bool logs_identical(const std::vector<EpisodeLogRow>& a,
                    const std::vector<EpisodeLogRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].step != b[i].step || a[i].agent != b[i].agent) return false;
    if (a[i].obs != b[i].obs) return false;
    if (a[i].accel != b[i].accel || a[i].proto != b[i].proto ||
        a[i].lane_change != b[i].lane_change)
      return false;
    if (a[i].reward.total != b[i].reward.total) return false;
  }
  return true;
}

}  // namespace

TEST(PredictActions, OracleCharacterReproducesGreedyAction) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  SeededRng rng(3);
  WorldState s = reset(rng, cfg);
  auto chars = society(cfg.n_agents, rng);

  std::map<int, ObservationVec> obs;
  InferredCharacterMap inferred;
  for (int j = 1; j < cfg.n_agents; ++j) {
    obs[j] = observe(s, j, cfg);
    inferred[j] = chars[j];
  }
  auto predicted = predict_actions(b, obs, inferred);
  SeededRng unused(0);
  for (int j = 1; j < cfg.n_agents; ++j) {
    HybridAction actual = act(b, obs[j], chars[j], false, unused);
    EXPECT_EQ(predicted.at(j).accel, actual.accel);
    EXPECT_EQ(predicted.at(j).proto, actual.proto);
    EXPECT_EQ(predicted.at(j).lane_change, actual.lane_change);
  }
}

TEST(PredictActions, EmptyTargetSetGivesEmptyMap) {
  PolicyBundle b = small_bundle();
  auto out = predict_actions(b, {}, {});
  EXPECT_TRUE(out.empty());
}

TEST(PredictActions, MissingCharacterIsContractViolation) {
  PolicyBundle b = small_bundle();
  std::map<int, ObservationVec> obs;
  obs[2] = ObservationVec{};
  EXPECT_THROW(predict_actions(b, obs, {}), ContractError);
}

TEST(SimulateNextObservation, StaticWorldKeepsObservation) {
  EnvConfig cfg;
  cfg.n_agents = 3;
  WorldState s;
  s.positions = {0.0, 20.0, 40.0};
  s.velocities = {0.0, 0.0, 0.0};
  s.lanes = {0, 0, 1};
  std::map<int, HybridAction> predicted = {{1, HybridAction::null_action()},
                                           {2, HybridAction::null_action()}};
  SimulatedObservation o_hat = simulate_next_observation(s, 0, predicted, cfg);
  EXPECT_EQ(o_hat.obs, observe(s, 0, cfg));
}

// A leader closing at dv with zero predicted acceleration loses dv*dt/rho of
// normalized gap per step (ego coasts).
TEST(SimulateNextObservation, ClosingNeighborKinematics) {
  EnvConfig cfg;
  cfg.n_agents = 2;
  WorldState s;
  s.positions = {0.0, 30.0};
  s.velocities = {4.0, 2.0};  // leader 2 m/s slower -> closing at 2 m/s
  s.lanes = {0, 0};
  ObservationVec before = observe(s, 0, cfg);
  std::map<int, HybridAction> predicted = {{1, HybridAction::null_action()}};
  SimulatedObservation o_hat = simulate_next_observation(s, 0, predicted, cfg);
  const double expected_drop = 2.0 * cfg.dt / cfg.obs_radius;
  EXPECT_NEAR(before[kObsRelPosBase + kLeaderSame] -
                  o_hat.obs[kObsRelPosBase + kLeaderSame],
              expected_drop, 1e-12);
}

TEST(SimulateNextObservation, NoNeighborsEqualsCoastingPropagation) {
  EnvConfig cfg;
  cfg.n_agents = 1;
  WorldState s;
  s.positions = {10.0};
  s.velocities = {3.0};
  s.lanes = {0};
  SimulatedObservation o_hat = simulate_next_observation(s, 0, {}, cfg);
  std::vector<HybridAction> null_acts = {HybridAction::null_action()};
  WorldState coasted = step(s, null_acts, cfg).next;
  EXPECT_EQ(o_hat.obs, observe(coasted, 0, cfg));
}

TEST(SimulateNextObservation, NullActionPreservesEgoVelocityAndLane) {
  EnvConfig cfg;
  SeededRng rng(5);
  WorldState s = reset(rng, cfg);
  std::map<int, HybridAction> predicted;
  for (int j = 1; j < cfg.n_agents; ++j)
    predicted[j] = make_hybrid_action(1.0, 0.9, cfg.half_width);
  std::vector<HybridAction> actions(cfg.n_agents,
                                    HybridAction::null_action());
  for (const auto& [id, a] : predicted) actions[id] = a;
  WorldState next = step(s, actions, cfg).next;
  EXPECT_EQ(next.velocities[0], s.velocities[0]);
  EXPECT_EQ(next.lanes[0], s.lanes[0]);
}

TEST(SimulateNextObservation, InvalidPredictedIdRejected) {
  EnvConfig cfg;
  cfg.n_agents = 2;
  WorldState s;
  s.positions = {0.0, 50.0};
  s.velocities = {1.0, 1.0};
  s.lanes = {0, 0};
  std::map<int, HybridAction> predicted = {{0, HybridAction::null_action()}};
  EXPECT_THROW(simulate_next_observation(s, 0, predicted, cfg),
               ContractError);
  predicted = {{7, HybridAction::null_action()}};
  EXPECT_THROW(simulate_next_observation(s, 0, predicted, cfg),
               ContractError);
}

TEST(ForesightSelect, DeterministicAndMatchesGreedyOnStaticWorld) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  cfg.n_agents = 2;
  WorldState s;
  s.positions = {0.0, 25.0};
  s.velocities = {0.0, 0.0};
  s.lanes = {0, 0};
  CharacterVector c0 = {0.4, 0.3, 0.2};
  std::map<int, HybridAction> predicted = {{1, HybridAction::null_action()}};
  SimulatedObservation o_hat = simulate_next_observation(s, 0, predicted, cfg);
  HybridAction foresight = foresight_select(b, o_hat, c0);
  SeededRng unused(0);
  HybridAction direct = act(b, observe(s, 0, cfg), c0, false, unused);
  EXPECT_EQ(foresight.accel, direct.accel);  // static world: o_hat == o
  HybridAction again = foresight_select(b, o_hat, c0);
  EXPECT_EQ(foresight.accel, again.accel);
  EXPECT_EQ(foresight.proto, again.proto);
}

TEST(RunEpisode, WithoutEftEqualsPlainRollout) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  SeededRng rng(7);
  auto chars = society(cfg.n_agents, rng);
  const int steps = 30;

  SeededRng e1(123);
  EpisodeResult without =
      run_episode(b, cfg, AgentMode::kWithoutEft, chars, {}, steps, e1);

  // Hand-rolled greedy rollout with the same seed.
  SeededRng e2(123);
  WorldState s = reset(e2, cfg);
  std::vector<HybridAction> actions(cfg.n_agents);
  std::vector<double> totals(cfg.n_agents, 0.0);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < cfg.n_agents; ++i)
      actions[i] = act(b, observe(s, i, cfg), chars[i], false, e2);
    StepResult sr = step(s, actions, cfg);
    for (int i = 0; i < cfg.n_agents; ++i)
      totals[i] += reward(s, i, actions[i], sr.next, chars[i],
                          sr.infeasible[i], cfg)
                       .total;
    s = std::move(sr.next);
  }
  ASSERT_EQ(without.total_rewards.size(), totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i)
    EXPECT_DOUBLE_EQ(without.total_rewards[i], totals[i]);
}

// FCE collapse: when the supplied character map equals the ego character for
// every agent, proposed and fce_eft produce bitwise identical episodes.
TEST(RunEpisode, FceCollapseIsBitwise) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  SeededRng rng(11);
  CharacterVector shared = {0.6, 0.2, 0.7};
  std::vector<CharacterVector> chars(cfg.n_agents, shared);
  InferredCharacterMap all_ego;
  for (int j = 1; j < cfg.n_agents; ++j) all_ego[j] = shared;
  const int steps = 40;

  SeededRng e1(55), e2(55);
  EpisodeResult proposed =
      run_episode(b, cfg, AgentMode::kProposed, chars, all_ego, steps, e1);
  EpisodeResult fce =
      run_episode(b, cfg, AgentMode::kFceEft, chars, {}, steps, e2);
  EXPECT_EQ(proposed.total_rewards, fce.total_rewards);
  EXPECT_TRUE(logs_identical(proposed.log, fce.log));
}

TEST(RunEpisode, SeededDeterminism) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  SeededRng rng(13);
  auto chars = society(cfg.n_agents, rng);
  InferredCharacterMap inferred;
  for (int j = 1; j < cfg.n_agents; ++j) inferred[j] = chars[j];
  SeededRng e1(9), e2(9);
  EpisodeResult a =
      run_episode(b, cfg, AgentMode::kProposed, chars, inferred, 25, e1);
  EpisodeResult b2 =
      run_episode(b, cfg, AgentMode::kProposed, chars, inferred, 25, e2);
  EXPECT_EQ(a.total_rewards, b2.total_rewards);
  EXPECT_TRUE(logs_identical(a.log, b2.log));
}

TEST(RunEpisode, SimulatedObservationsStayValid) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  SeededRng rng(17);
  auto chars = society(cfg.n_agents, rng);
  InferredCharacterMap inferred;
  for (int j = 1; j < cfg.n_agents; ++j) inferred[j] = chars[j];
  SeededRng e(21);
  EpisodeResult res =
      run_episode(b, cfg, AgentMode::kProposed, chars, inferred, 50, e);
  for (const auto& row : res.log)
    for (double o : row.obs) {
      ASSERT_GE(o, -1.0);
      ASSERT_LE(o, 1.0);
    }
}

// With exact characters and deterministic policies, every prediction matches
// the action the target actually executes in the same step.
TEST(RunEpisode, OracleCharacterPredictionsAreExact) {
  PolicyBundle b = small_bundle();
  EnvConfig cfg;
  cfg.n_agents = 4;
  SeededRng rng(23);
  auto chars = society(cfg.n_agents, rng);
  const int steps = 40;

  SeededRng e(77);
  WorldState s = reset(e, cfg);
  SeededRng unused(0);
  for (int t = 0; t < steps; ++t) {
    std::map<int, ObservationVec> tobs;
    InferredCharacterMap tchars;
    for (int j : observable_targets(s, 0, cfg)) {
      tobs[j] = observe(s, j, cfg);
      tchars[j] = chars[j];
    }
    auto predicted = predict_actions(b, tobs, tchars);
    std::vector<HybridAction> actions(cfg.n_agents);
    for (int i = 0; i < cfg.n_agents; ++i)
      actions[i] = act(b, observe(s, i, cfg), chars[i], false, unused);
    for (const auto& [j, pa] : predicted) {
      ASSERT_EQ(pa.accel, actions[j].accel) << "step " << t << " agent " << j;
      ASSERT_EQ(pa.lane_change, actions[j].lane_change);
    }
    s = step(s, actions, cfg).next;
  }
}
