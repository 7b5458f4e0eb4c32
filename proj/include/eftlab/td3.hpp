#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "eftlab/adam.hpp"
#include "eftlab/network.hpp"
#include "eftlab/policy.hpp"
#include "eftlab/replay.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

struct UpdateReport {
  bool skipped = false;
  double critic_loss = 0.0;  // mean squared TD error over both critics
  std::optional<double> actor_loss;  // -mean Q1, present on actor steps
};

// Optimizer state plus preallocated scratch; one per training run.
struct TrainerState {
  AdamState adam_actor;
  AdamState adam_critic1;
  AdamState adam_critic2;
  std::vector<double> grad;        // reused for each network's batch gradient
  std::vector<double> input_grad;  // per-sample input gradient
  std::vector<double> x;           // per-sample network input
  std::vector<double> targets;     // per-batch TD targets
  NetWorkspace ws;

  TrainerState(const PolicyBundle& b)
      : adam_actor(b.actor.param_count(), b.train_config.actor_lr),
        adam_critic1(b.critic1.param_count(), b.train_config.critic_lr),
        adam_critic2(b.critic2.param_count(), b.train_config.critic_lr) {}
};

inline void build_critic_input(const ObservationVec& o, double accel,
                               double proto, const CharacterVector& c,
                               std::vector<double>& x) {
  x.resize(o.size() + 2 + c.size());
  std::copy(o.begin(), o.end(), x.begin());
  x[o.size()] = accel;
  x[o.size() + 1] = proto;
  std::copy(c.begin(), c.end(), x.begin() + o.size() + 2);
}

// y = r + gamma*(1-done)*min(Q'1, Q'2)(o', pi'(o') + clipped noise, c).
// Target smoothing noise lives in the normalized head space, as the
// exploration noise does. Per sample the rng supplies the acceleration-head
// noise first, then the proto noise, both clipped to +-target_noise_clip.
inline std::vector<double> compute_td_targets(
    const PolicyBundle& b, std::span<const ReplayRecord> batch,
    SeededRng& rng) {
  const auto& tc = b.train_config;
  std::vector<double> ys;
  ys.reserve(batch.size());
  thread_local NetWorkspace ws;
  thread_local std::vector<double> in;
  std::array<double, 2> head;
  for (const ReplayRecord& rec : batch) {
    build_actor_input(rec.next_obs, rec.character, in);
    b.target_actor.forward(in, head, ws);
    double noise_a = std::clamp(tc.target_noise * rng.gaussian(),
                                -tc.target_noise_clip, tc.target_noise_clip);
    double noise_p = std::clamp(tc.target_noise * rng.gaussian(),
                                -tc.target_noise_clip, tc.target_noise_clip);
    double accel =
        b.action_space.scale_accel(std::clamp(head[0] + noise_a, -1.0, 1.0));
    double proto = std::clamp(head[1] + noise_p, -1.0, 1.0);

    thread_local std::vector<double> x;
    build_critic_input(rec.next_obs, accel, proto, rec.character, x);
    std::array<double, 1> q1, q2;
    b.target_critic1.forward(x, q1, ws);
    b.target_critic2.forward(x, q2, ws);
    const double not_done = rec.done ? 0.0 : 1.0;
    ys.push_back(rec.reward +
                 tc.gamma * not_done * std::min(q1[0], q2[0]));
  }
  return ys;
}

// Mean squared error of critic(inputs[i]) against targets[i]; the batch
// gradient lands in `grad` (zeroed first). Inputs are rows of a flat matrix.
inline double critic_loss_and_grad(const DenseNetwork& critic,
                                   std::span<const double> inputs_flat,
                                   std::span<const double> targets,
                                   std::span<double> grad,
                                   std::span<double> input_grad_scratch,
                                   NetWorkspace& ws) {
  const std::size_t dim = static_cast<std::size_t>(critic.input_size());
  const std::size_t n = targets.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  std::array<double, 1> gout;
  for (std::size_t k = 0; k < n; ++k) {
    std::span<const double> x = inputs_flat.subspan(k * dim, dim);
    auto q = critic.forward_prepared(x, ws);
    const double diff = q[0] - targets[k];
    loss += diff * diff;
    gout[0] = 2.0 * diff / static_cast<double>(n);
    critic.backward(x, gout, grad, input_grad_scratch, ws,
                    /*workspace_prepared=*/true);
  }
  return loss / static_cast<double>(n);
}

// One TD3 step: both critics regress to the shared target; every d-th call
// also ascends the actor on Q1 and soft-updates all three targets.
// update_index is 1-based.
inline UpdateReport td3_update(PolicyBundle& b,
                               std::span<const ReplayRecord> batch,
                               long update_index, TrainerState& ts,
                               SeededRng& rng) {
  if (batch.empty()) {
    return UpdateReport{.skipped = true};
  }
  const auto& tc = b.train_config;
  const std::size_t n = batch.size();
  const std::size_t cdim = static_cast<std::size_t>(b.critic_input_dim());

  ts.targets = compute_td_targets(b, batch, rng);

  // Flat batch of critic inputs from the stored (executed) actions.
  thread_local std::vector<double> xflat;
  xflat.resize(n * cdim);
  {
    std::vector<double> row;
    for (std::size_t k = 0; k < n; ++k) {
      const ReplayRecord& rec = batch[k];
      build_critic_input(rec.obs, rec.accel, rec.proto, rec.character, row);
      std::copy(row.begin(), row.end(), xflat.begin() + k * cdim);
    }
  }

  ts.input_grad.resize(cdim);
  UpdateReport report;
  double loss_sum = 0.0;
  for (DenseNetwork* critic : {&b.critic1, &b.critic2}) {
    ts.grad.assign(critic->param_count(), 0.0);
    loss_sum += critic_loss_and_grad(*critic, xflat, ts.targets, ts.grad,
                                     ts.input_grad, ts.ws);
    adam_step(critic->params(),
              std::span<const double>(ts.grad.data(), ts.grad.size()),
              critic == &b.critic1 ? ts.adam_critic1 : ts.adam_critic2);
  }
  report.critic_loss = loss_sum / 2.0;

  if (update_index % tc.policy_delay == 0) {
    ts.grad.assign(b.actor.param_count(), 0.0);
    thread_local std::vector<double> ain;
    thread_local std::vector<double> cin;
    thread_local std::vector<double> actor_igrad;
    actor_igrad.resize(static_cast<std::size_t>(b.actor_input_dim()));
    thread_local NetWorkspace actor_ws;
    std::array<double, 2> head;
    std::array<double, 2> head_grad;
    std::array<double, 1> q_gout = {1.0};
    double q_sum = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (const ReplayRecord& rec : batch) {
      build_actor_input(rec.obs, rec.character, ain);
      auto out = b.actor.forward_prepared(ain, actor_ws);
      head = {out[0], out[1]};
      const double accel = b.action_space.scale_accel(head[0]);
      build_critic_input(rec.obs, accel, head[1], rec.character, cin);
      auto q = b.critic1.forward_prepared(cin, ts.ws);
      q_sum += q[0];
      b.critic1.backward_input_only(cin, q_gout, ts.input_grad, ts.ws,
                                    /*workspace_prepared=*/true);
      // Ascend Q: minimize -Q, so negate the chain into the actor heads.
      head_grad[0] = -inv_n * ts.input_grad[kObservationDim] *
                     b.action_space.accel_gain();
      head_grad[1] = -inv_n * ts.input_grad[kObservationDim + 1];
      b.actor.backward(ain, head_grad, ts.grad, actor_igrad, actor_ws,
                       /*workspace_prepared=*/true);
    }
    adam_step(b.actor.params(),
              std::span<const double>(ts.grad.data(), ts.grad.size()),
              ts.adam_actor);
    report.actor_loss = -q_sum * inv_n;

    soft_update(b.target_actor, b.actor, tc.tau);
    soft_update(b.target_critic1, b.critic1, tc.tau);
    soft_update(b.target_critic2, b.critic2, tc.tau);
  }
  return report;
}

}  // namespace eftlab
