#pragma once

#include <algorithm>
#include <cmath>

#include "eftlab/errors.hpp"

namespace eftlab {

// Quantizes a proto-action into the integer lane-change command in [-W, W].
// The bin of width-index w covers (w - (W+w)/(2W+1), w + (W-w)/(2W+1)];
// closed forms floor the right inequality and clamp both ends. Inputs outside
// the [-W, W] allocation (exploration noise) are clamped first.
inline int post_process(double proto, int half_width) {
  if (half_width < 1) throw ConfigError("post_process: W must be >= 1");
  const double w = static_cast<double>(half_width);
  const double p = std::clamp(proto, -w, w);
  const double scaled =
      (2.0 * w + 1.0) / (2.0 * w) * (p + w / (2.0 * w + 1.0));
  double q = std::floor(scaled);
  q = std::min(q, w);
  q = std::max(q, -w);
  return static_cast<int>(q);
}

// Continuous acceleration plus the lane-change command, carrying both the
// pre-quantization proto value and the quantized integer.
struct HybridAction {
  double accel = 0.0;   // m/s^2
  double proto = 0.0;   // pre-quantization discrete head, [-1, 1]
  int lane_change = 0;  // post_process(proto, W)

  static HybridAction null_action() { return {0.0, 0.0, 0}; }
};

inline HybridAction make_hybrid_action(double accel, double proto,
                                       int half_width) {
  return HybridAction{accel, proto, post_process(proto, half_width)};
}

}  // namespace eftlab
