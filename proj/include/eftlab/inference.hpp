#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "eftlab/adam.hpp"
#include "eftlab/character.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/network.hpp"
#include "eftlab/policy.hpp"
#include "eftlab/rng.hpp"
#include "eftlab/trajectory.hpp"

namespace eftlab {

struct InferenceConfig {
  double learning_rate = 1e-3;
  int max_iterations = 500;
  double convergence_tol = 5e-4;  // successive-iterate L1 change
  int convergence_patience = 5;   // consecutive small steps required
  double sigma_pi = 1.0;          // nuisance scale of the Gaussian likelihood
  CharacterSpace bounds = CharacterSpace::unit_box(3);

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("inference learning_rate > 0");
    if (max_iterations < 1) throw ConfigError("inference max_iterations >= 1");
    if (convergence_tol <= 0.0) throw ConfigError("inference tol > 0");
    if (convergence_patience < 1) throw ConfigError("patience >= 1");
    if (sigma_pi <= 0.0) throw ConfigError("sigma_pi > 0");
  }
};

struct InferenceResult {
  CharacterVector c_hat;
  std::vector<double> loss_curve;           // one entry per iteration
  std::vector<CharacterVector> c_history;   // iterate after each update
  int iterations_used = 0;
  bool converged = false;
};

struct TrajectoryLoss {
  double loss = 0.0;
  CharacterVector grad_c;
};

// Negative log-likelihood surrogate of the trajectory under character c:
// mean over steps of |a_c(o;c) - a*_c| / (2*pi*sigma^2) plus, when the
// quantized discrete head disagrees with the executed one, |a*_d - proto|.
// The gradient flows through the actor to its character input slice; the
// indicator is held constant and |.| has subgradient 0 at 0.
inline TrajectoryLoss trajectory_loss(const DenseNetwork& actor,
                                      const ActionSpace& space,
                                      const TrajectoryRecord& traj,
                                      const CharacterVector& c,
                                      double sigma_pi = 1.0) {
  if (traj.steps.empty()) throw ShapeError("trajectory_loss: empty trajectory");
  const int cdim = static_cast<int>(c.size());
  if (actor.input_size() != kObservationDim + cdim)
    throw ShapeError("trajectory_loss: actor input != obs + character dims");
  if (actor.output_size() != 2)
    throw ShapeError("trajectory_loss: actor must have two output heads");

  const double cont_scale =
      1.0 / (2.0 * std::numbers::pi * sigma_pi * sigma_pi);
  const double inv_t = 1.0 / static_cast<double>(traj.steps.size());

  thread_local NetWorkspace ws;
  thread_local std::vector<double> input;
  thread_local std::vector<double> input_grad;
  input_grad.resize(static_cast<std::size_t>(actor.input_size()));

  TrajectoryLoss out;
  out.grad_c.assign(c.size(), 0.0);
  std::array<double, 2> gout;
  for (const TrajStep& step : traj.steps) {
    build_actor_input(step.obs, c, input);
    auto head = actor.forward_prepared(input, ws);
    const double accel = space.scale_accel(head[0]);
    const double proto = head[1];

    const double cont_diff = accel - step.accel;
    out.loss += cont_scale * std::abs(cont_diff);
    const double sign_cont = cont_diff > 0.0 ? 1.0 : (cont_diff < 0.0 ? -1.0 : 0.0);
    gout[0] = cont_scale * sign_cont * space.accel_gain();

    gout[1] = 0.0;
    if (post_process(proto, space.half_width) != step.lane_change) {
      const double disc_diff =
          static_cast<double>(step.lane_change) - proto;
      out.loss += std::abs(disc_diff);
      // d|a*_d - proto|/d proto = -sign(a*_d - proto)
      const double sign_disc =
          disc_diff > 0.0 ? 1.0 : (disc_diff < 0.0 ? -1.0 : 0.0);
      gout[1] = -sign_disc;
    }

    actor.backward_input_only(input, gout, input_grad, ws,
                              /*workspace_prepared=*/true);
    for (int k = 0; k < cdim; ++k)
      out.grad_c[k] += input_grad[kObservationDim + k];
  }
  out.loss *= inv_t;
  for (double& g : out.grad_c) g *= inv_t;
  return out;
}

// Gradient-based likelihood maximization over the character input, with Adam
// steps projected back into the bounds each iteration. Stops once the
// successive-iterate L1 change stays at or below the tolerance for
// `convergence_patience` consecutive iterations (momentum sign flips make a
// single small step a false convergence signal).
inline InferenceResult infer_character(const DenseNetwork& actor,
                                       const ActionSpace& space,
                                       const TrajectoryRecord& traj,
                                       const CharacterVector& c_init,
                                       const InferenceConfig& cfg) {
  cfg.validate();
  if (!cfg.bounds.contains(c_init))
    throw ConfigError("infer_character: c_init outside the character space");
  InferenceResult result;
  CharacterVector c = c_init;
  AdamState adam(c.size(), cfg.learning_rate);
  int small_steps = 0;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    TrajectoryLoss tl = trajectory_loss(actor, space, traj, c, cfg.sigma_pi);
    if (!std::isfinite(tl.loss))
      throw NonFiniteError("infer_character: loss diverged at iteration " +
                           std::to_string(iter + 1));
    CharacterVector c_next = c;
    adam_step(c_next, tl.grad_c, adam);
    c_next = cfg.bounds.project(std::move(c_next));

    result.loss_curve.push_back(tl.loss);
    result.c_history.push_back(c_next);
    result.iterations_used = iter + 1;
    const double change = l1_distance(c_next, c);
    c = std::move(c_next);
    // An exactly-zero step means a (projected) stationary point; a merely
    // small step must persist, since Adam momentum crossovers also shrink it.
    small_steps = change <= cfg.convergence_tol ? small_steps + 1 : 0;
    if (change == 0.0 || small_steps >= cfg.convergence_patience) {
      result.converged = true;
      break;
    }
  }
  result.c_hat = std::move(c);
  return result;
}

// Adds i.i.d. Gaussian noise to every observation component and clips back
// to the [-1, 1] observation range; actions are untouched.
inline TrajectoryRecord add_trajectory_noise(const TrajectoryRecord& traj,
                                             double sigma, SeededRng& rng) {
  if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  TrajectoryRecord out = traj;
  if (sigma == 0.0) return out;
  for (TrajStep& step : out.steps)
    for (double& o : step.obs)
      o = std::clamp(o + sigma * rng.gaussian(), -1.0, 1.0);
  return out;
}

struct InferenceMetrics {
  double l1 = 0.0;
  double acc_percent = 0.0;
  double snr_db = 0.0;
  double signal_power = 0.0;  // mean squared observation component
};

// L1 error, range-normalized accuracy percentage and the trajectory's
// signal-to-noise ratio. ACC maps perfect recovery to 100 by complementing
// the mean per-component absolute error over each component's range.
inline InferenceMetrics inference_metrics(const CharacterVector& c_hat,
                                          const CharacterVector& c_true,
                                          double sigma,
                                          const TrajectoryRecord& traj,
                                          const CharacterSpace& space) {
  if (c_hat.size() != c_true.size() ||
      static_cast<int>(c_hat.size()) != space.dims())
    throw ShapeError("inference_metrics: dimension mismatch");
  InferenceMetrics m;
  m.l1 = l1_distance(c_hat, c_true);
  double norm_err = 0.0;
  for (int k = 0; k < space.dims(); ++k) {
    double range = space.component_range(k);
    if (range <= 0.0) throw ConfigError("degenerate character range");
    norm_err += std::abs(c_hat[k] - c_true[k]) / range;
  }
  norm_err /= space.dims();
  m.acc_percent = 100.0 * std::max(0.0, 1.0 - norm_err);

  double power = 0.0;
  std::size_t count = 0;
  for (const TrajStep& s : traj.steps)
    for (double o : s.obs) {
      power += o * o;
      ++count;
    }
  m.signal_power = count ? power / static_cast<double>(count) : 0.0;
  m.snr_db = sigma == 0.0
                 ? std::numeric_limits<double>::infinity()
                 : 10.0 * std::log10(m.signal_power / (sigma * sigma));
  return m;
}

}  // namespace eftlab
