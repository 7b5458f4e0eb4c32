#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eftlab/env.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/policy.hpp"

namespace eftlab {

// One step of a target agent's observation-action history.
struct TrajStep {
  ObservationVec obs;
  double accel = 0.0;   // executed continuous action
  int lane_change = 0;  // executed discrete action
};

struct TrajectoryRecord {
  std::vector<TrajStep> steps;

  std::size_t length() const { return steps.size(); }
};

namespace detail {

// Shortest-roundtrip formatting so CSV output is byte-stable and lossless.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string trajectory_csv_header() {
  std::string h = "t";
  for (int i = 1; i <= 14; ++i) h += ",o_" + std::to_string(i);
  h += ",a_c,a_d";
  return h;
}

inline void save_trajectory_csv(const TrajectoryRecord& traj,
                                const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << trajectory_csv_header() << "\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const TrajStep& s = traj.steps[t];
    f << t;
    for (double o : s.obs) f << ',' << detail::format_double(o);
    f << ',' << detail::format_double(s.accel) << ',' << s.lane_change
      << "\n";
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline TrajectoryRecord load_trajectory_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(f, line)) throw ParseError("trajectory file is empty");
  if (line != trajectory_csv_header())
    throw ParseError("trajectory header mismatch in '" + path + "'");
  TrajectoryRecord traj;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    TrajStep step;
    if (!std::getline(ss, field, ',')) throw ParseError("missing t column");
    for (int i = 0; i < 14; ++i) {
      if (!std::getline(ss, field, ','))
        throw ParseError("trajectory row has fewer than 14 observations");
      step.obs[i] = std::stod(field);
    }
    if (!std::getline(ss, field, ',')) throw ParseError("missing a_c column");
    step.accel = std::stod(field);
    if (!std::getline(ss, field, ',')) throw ParseError("missing a_d column");
    step.lane_change = std::stoi(field);
    traj.steps.push_back(step);
  }
  if (traj.steps.empty()) throw ParseError("trajectory has no steps");
  return traj;
}

// Rolls the world forward with every agent acting greedily under its own
// character and records the target agent's observation-action pairs. The
// horizon is independent of the training episode length (the ring road never
// terminates).
inline TrajectoryRecord collect_trajectory(
    const PolicyBundle& bundle, const EnvConfig& env_cfg,
    const std::vector<CharacterVector>& characters, int target, int steps,
    SeededRng& rng) {
  if (target < 0 || target >= env_cfg.n_agents)
    throw ShapeError("collect_trajectory: target index out of range");
  if (static_cast<int>(characters.size()) != env_cfg.n_agents)
    throw ShapeError("collect_trajectory: one character per agent required");
  TrajectoryRecord traj;
  traj.steps.reserve(steps);
  WorldState state = reset(rng, env_cfg);
  std::vector<HybridAction> actions(env_cfg.n_agents);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < env_cfg.n_agents; ++i)
      actions[i] = act(bundle, observe(state, i, env_cfg), characters[i],
                       /*explore=*/false, rng);
    traj.steps.push_back(TrajStep{observe(state, target, env_cfg),
                                  actions[target].accel,
                                  actions[target].lane_change});
    state = step(state, actions, env_cfg).next;
  }
  return traj;
}

}  // namespace eftlab
