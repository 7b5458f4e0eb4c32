#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "eftlab/action.hpp"
#include "eftlab/character.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

// Two vehicles are never allowed to sit closer than this on the same lane;
// purely a distinctness guard, far below any physical gap.
inline constexpr double kMinSeparation = 1e-6;

struct IdmParams {
  double s0 = 2.0;      // minimum gap, meters
  double t_star = 1.0;  // minimum time headway, seconds
  double a_min = -3.0;  // braking bound used in the safety distance, m/s^2
  double a_max = 3.0;
};

struct EnvConfig {
  int n_agents = 6;
  int lanes = 2;
  double circumference = 200.0;  // meters
  double dt = 1.0;               // seconds
  double v_max = 7.0;            // m/s
  double accel_min = -3.0;       // m/s^2
  double accel_max = 3.0;
  double obs_radius = 50.0;      // meters
  IdmParams idm;
  double target_velocity = 3.5;           // m/s, used when the list is empty
  std::vector<double> target_velocities;  // optional per-agent override
  double r_fail = -1.0;
  int half_width = 1;  // W; |A^d| = 2W+1

  double target_velocity_of(int i) const {
    if (target_velocities.empty()) return target_velocity;
    return target_velocities[static_cast<std::size_t>(i)];
  }

  // Gap floor for the follower-distance reward; the raw formula diverges as
  // the gap approaches zero.
  double gap_floor() const { return 0.01 * obs_radius; }

  void validate() const {
    if (n_agents < 1) throw ConfigError("n_agents must be >= 1");
    if (lanes < 1) throw ConfigError("lanes must be >= 1");
    if (circumference <= 0.0) throw ConfigError("circumference must be > 0");
    if (dt <= 0.0) throw ConfigError("dt must be > 0");
    if (v_max <= 0.0) throw ConfigError("v_max must be > 0");
    if (!(accel_min < 0.0 && 0.0 < accel_max))
      throw ConfigError("accel bounds must satisfy a_min < 0 < a_max");
    if (obs_radius <= 0.0) throw ConfigError("obs_radius must be > 0");
    if (idm.s0 <= 0.0) throw ConfigError("idm.s0 must be > 0");
    if (idm.a_min >= 0.0 || idm.a_max <= 0.0)
      throw ConfigError("idm accel bounds must bracket 0");
    if (half_width < 1) throw ConfigError("half_width W must be >= 1");
    if (r_fail > 0.0) throw ConfigError("r_fail must be <= 0");
    if (!target_velocities.empty() &&
        static_cast<int>(target_velocities.size()) != n_agents)
      throw ConfigError("target_velocities length != n_agents");
    for (int i = 0; i < n_agents; ++i)
      if (target_velocity_of(i) <= 0.0)
        throw ConfigError("target velocity must be > 0 (R1 divides by it)");
  }
};

struct WorldState {
  std::vector<double> positions;   // arc length in [0, circumference)
  std::vector<double> velocities;  // [0, v_max]
  std::vector<int> lanes;          // [0, L-1]
  long time_step = 0;

  int n_agents() const { return static_cast<int>(positions.size()); }
};

// 14 components, all in [-1, 1]:
//   [0]     ego velocity, 2v/v_max - 1
//   [1..6]  relative velocity (other - ego)/v_max: leader L/S/R, follower L/S/R
//   [7..12] relative arc distance /rho, same slot order
//   [13]    lane index, 2k/(L-1) - 1 (0 when L == 1)
// Slots without a neighbor hold the sentinel (dv=0, dp=+1). "Left" is the
// inner lane (k+1), the one a_d=+1 moves into.
using ObservationVec = std::array<double, 14>;

inline constexpr int kObsEgoVelocity = 0;
inline constexpr int kObsRelVelBase = 1;   // 6 slots
inline constexpr int kObsRelPosBase = 7;   // 6 slots
inline constexpr int kObsLane = 13;
// Slot order within each 6-block.
enum NeighborSlot {
  kLeaderLeft = 0,
  kLeaderSame = 1,
  kLeaderRight = 2,
  kFollowerLeft = 3,
  kFollowerSame = 4,
  kFollowerRight = 5,
};

struct Neighbor {
  bool exists = false;
  int index = -1;
  double gap = 0.0;  // meters, along the driving direction
};

namespace detail {

inline double wrap_position(double p, double circumference) {
  double r = std::fmod(p, circumference);
  if (r < 0.0) r += circumference;
  return r;
}

inline double forward_gap(double from, double to, double circumference) {
  return wrap_position(to - from, circumference);
}

// Nearest leader/follower of agent i on `lane`, looking up to `radius` meters.
inline Neighbor nearest_leader(const WorldState& s, int i, int lane,
                               double radius, double circumference) {
  Neighbor best;
  for (int j = 0; j < s.n_agents(); ++j) {
    if (j == i || s.lanes[j] != lane) continue;
    double d = forward_gap(s.positions[i], s.positions[j], circumference);
    if (d <= radius && (!best.exists || d < best.gap)) {
      best = {true, j, d};
    }
  }
  return best;
}

inline Neighbor nearest_follower(const WorldState& s, int i, int lane,
                                 double radius, double circumference) {
  Neighbor best;
  for (int j = 0; j < s.n_agents(); ++j) {
    if (j == i || s.lanes[j] != lane) continue;
    double d = forward_gap(s.positions[j], s.positions[i], circumference);
    if (d <= radius && (!best.exists || d < best.gap)) {
      best = {true, j, d};
    }
  }
  return best;
}

}  // namespace detail

// Random collision-free deployment; velocities uniform in [0, v*_i].
inline WorldState reset(SeededRng& rng, const EnvConfig& cfg) {
  cfg.validate();
  const double slots_per_lane = std::floor(cfg.circumference / cfg.idm.s0);
  if (static_cast<double>(cfg.n_agents) >
      slots_per_lane * static_cast<double>(cfg.lanes))
    throw ConfigError("cannot place " + std::to_string(cfg.n_agents) +
                      " agents with pairwise gap >= s0");

  WorldState s;
  s.positions.resize(cfg.n_agents);
  s.velocities.resize(cfg.n_agents);
  s.lanes.resize(cfg.n_agents);
  const int max_attempts = 10000 * cfg.n_agents;
  int attempts = 0;
  for (int i = 0; i < cfg.n_agents; ++i) {
    for (;;) {
      if (++attempts > max_attempts)
        throw ConfigError("agent placement did not find a feasible layout");
      int lane = static_cast<int>(rng.uniform_index(
          static_cast<std::uint64_t>(cfg.lanes)));
      double pos = rng.uniform(0.0, cfg.circumference);
      bool ok = true;
      for (int j = 0; j < i; ++j) {
        if (s.lanes[j] != lane) continue;
        double d = detail::forward_gap(pos, s.positions[j], cfg.circumference);
        double arc = std::min(d, cfg.circumference - d);
        if (arc < cfg.idm.s0) {
          ok = false;
          break;
        }
      }
      if (ok) {
        s.lanes[i] = lane;
        s.positions[i] = pos;
        break;
      }
    }
    s.velocities[i] = rng.uniform(0.0, cfg.target_velocity_of(i));
  }
  return s;
}

inline ObservationVec observe(const WorldState& s, int i,
                              const EnvConfig& cfg) {
  if (i < 0 || i >= s.n_agents())
    throw ShapeError("observe: agent index out of range");
  ObservationVec o;
  o[kObsEgoVelocity] = 2.0 * s.velocities[i] / cfg.v_max - 1.0;
  const int ego_lane = s.lanes[i];
  const std::array<int, 3> lane_of_column = {ego_lane + 1, ego_lane,
                                             ego_lane - 1};  // L, S, R
  for (int col = 0; col < 3; ++col) {
    const int lane = lane_of_column[col];
    Neighbor lead, follow;
    if (lane >= 0 && lane < cfg.lanes) {
      lead = detail::nearest_leader(s, i, lane, cfg.obs_radius,
                                    cfg.circumference);
      follow = detail::nearest_follower(s, i, lane, cfg.obs_radius,
                                        cfg.circumference);
    }
    const auto fill = [&](int slot, const Neighbor& nb) {
      if (nb.exists) {
        double dv = (s.velocities[nb.index] - s.velocities[i]) / cfg.v_max;
        o[kObsRelVelBase + slot] = std::clamp(dv, -1.0, 1.0);
        o[kObsRelPosBase + slot] =
            std::clamp(nb.gap / cfg.obs_radius, -1.0, 1.0);
      } else {
        o[kObsRelVelBase + slot] = 0.0;
        o[kObsRelPosBase + slot] = 1.0;
      }
    };
    fill(kLeaderLeft + col, lead);
    fill(kFollowerLeft + col, follow);
  }
  o[kObsLane] = cfg.lanes == 1
                    ? 0.0
                    : 2.0 * static_cast<double>(ego_lane) /
                              static_cast<double>(cfg.lanes - 1) -
                          1.0;
  return o;
}

struct StepResult {
  WorldState next;
  std::vector<bool> infeasible;  // lane-change attempt rejected this step
};

// Simultaneous move: every velocity/position updates from the pre-step state;
// a lane change commits only if the target lane exists and the nearest vehicle
// on it (at post-step positions, pre-step lanes) is farther than s0.
inline StepResult step(const WorldState& s,
                       std::span<const HybridAction> actions,
                       const EnvConfig& cfg) {
  if (static_cast<int>(actions.size()) != s.n_agents())
    throw ShapeError("step: action count " + std::to_string(actions.size()) +
                     " != n_agents " + std::to_string(s.n_agents()));
  const int n = s.n_agents();
  StepResult r;
  r.next.positions.resize(n);
  r.next.velocities.resize(n);
  r.next.lanes.resize(n);
  r.infeasible.assign(n, false);
  r.next.time_step = s.time_step + 1;

  for (int i = 0; i < n; ++i) {
    double a = std::clamp(actions[i].accel, cfg.accel_min, cfg.accel_max);
    double v = std::clamp(s.velocities[i] + a * cfg.dt, 0.0, cfg.v_max);
    r.next.velocities[i] = v;
    r.next.positions[i] = detail::wrap_position(
        s.positions[i] + v * cfg.dt, cfg.circumference);
  }
  for (int i = 0; i < n; ++i) {
    const int dlane = actions[i].lane_change;
    int lane = s.lanes[i];
    if (dlane != 0) {
      const int target = lane + dlane;
      bool ok = target >= 0 && target < cfg.lanes;
      if (ok) {
        for (int j = 0; j < n; ++j) {
          if (j == i || s.lanes[j] != target) continue;
          double d = detail::forward_gap(r.next.positions[i],
                                         r.next.positions[j],
                                         cfg.circumference);
          double arc = std::min(d, cfg.circumference - d);
          if (arc < cfg.idm.s0) {
            ok = false;
            break;
          }
        }
      }
      if (ok)
        lane = target;
      else
        r.infeasible[i] = true;
    }
    r.next.lanes[i] = lane;
  }
  return r;
}

// IDM-style safety distance; v_follow and dv_follow are the follower's speed
// and its speed relative to the ego (positive = closing).
inline double safety_distance(double v_follow, double dv_follow,
                              const EnvConfig& cfg) {
  const double brake = 2.0 * std::sqrt(std::abs(cfg.idm.a_min * cfg.idm.a_max));
  return cfg.idm.s0 +
         std::max(0.0, v_follow * (cfg.idm.t_star + dv_follow / brake));
}

struct RewardBreakdown {
  double r1 = 0.0;              // target-velocity tracking, <= 1
  double r2 = 0.0;              // follower safety distance, <= 0
  double r3 = 0.0;              // unnecessary lane change, <= 0
  double r_fail_applied = 0.0;  // <= 0
  double total = 0.0;
};

// Character-weighted reward for agent i over the transition s -> s_next under
// its executed action. Distances in the R2 ratio are scale-free; R3 uses
// rho-normalized gaps. Missing neighbors count as a full-radius gap.
inline RewardBreakdown reward(const WorldState& s, int i,
                              const HybridAction& action,
                              const WorldState& s_next,
                              const CharacterVector& c, bool infeasible,
                              const EnvConfig& cfg) {
  if (c.size() != 3) throw ShapeError("driving reward expects K=3 characters");
  const double v_star = cfg.target_velocity_of(i);
  if (v_star <= 0.0) throw ConfigError("target velocity must be > 0");
  RewardBreakdown out;

  out.r1 = 1.0 - std::abs((s_next.velocities[i] - v_star) / v_star);

  // R2: follower on the post-step same lane, post-step positions.
  Neighbor follow = detail::nearest_follower(s_next, i, s_next.lanes[i],
                                             cfg.obs_radius,
                                             cfg.circumference);
  double gap = follow.exists ? follow.gap : cfg.obs_radius;
  gap = std::max(gap, cfg.gap_floor());
  double v_follow = follow.exists ? s_next.velocities[follow.index] : 0.0;
  double dv_follow =
      follow.exists ? s_next.velocities[follow.index] - s_next.velocities[i]
                    : 0.0;
  const double s_star = safety_distance(v_follow, dv_follow, cfg);
  const double ratio = s_star / gap;
  out.r2 = std::min(0.0, 1.0 - ratio * ratio);

  // R3: leading space before (old lane) vs after (new lane), rho-normalized.
  Neighbor lead_before = detail::nearest_leader(s, i, s.lanes[i],
                                                cfg.obs_radius,
                                                cfg.circumference);
  Neighbor lead_after = detail::nearest_leader(s_next, i, s_next.lanes[i],
                                               cfg.obs_radius,
                                               cfg.circumference);
  const double dp_before =
      (lead_before.exists ? lead_before.gap : cfg.obs_radius) / cfg.obs_radius;
  const double dp_after =
      (lead_after.exists ? lead_after.gap : cfg.obs_radius) / cfg.obs_radius;
  out.r3 = std::abs(static_cast<double>(action.lane_change)) * dp_before *
           std::min(0.0, dp_after - dp_before);

  out.r_fail_applied = infeasible ? cfg.r_fail : 0.0;
  out.total = c[0] * out.r1 + c[1] * out.r2 + c[2] * out.r3 +
              out.r_fail_applied;
  return out;
}

}  // namespace eftlab
