#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "eftlab/character.hpp"
#include "eftlab/env.hpp"
#include "eftlab/errors.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

// One stored transition; the discrete action is kept in proto form so critic
// training stays on the quantizer-free path.
struct ReplayRecord {
  ObservationVec obs;
  CharacterVector character;
  double accel = 0.0;
  double proto = 0.0;
  double reward = 0.0;
  ObservationVec next_obs;
  bool done = false;

  bool finite() const {
    for (double x : obs)
      if (!std::isfinite(x)) return false;
    for (double x : next_obs)
      if (!std::isfinite(x)) return false;
    for (double x : character)
      if (!std::isfinite(x)) return false;
    return std::isfinite(accel) && std::isfinite(proto) &&
           std::isfinite(reward);
  }
};

// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be > 0");
    records_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
  }

  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(ReplayRecord r) {
    if (!r.finite()) throw NonFiniteError("replay record");
    if (records_.size() < capacity_) {
      records_.push_back(std::move(r));
    } else {
      records_[write_] = std::move(r);
    }
    write_ = (write_ + 1) % capacity_;
  }

  std::vector<ReplayRecord> sample(std::size_t n, SeededRng& rng) const {
    std::vector<ReplayRecord> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
      out.push_back(records_[rng.uniform_index(records_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<ReplayRecord> records_;
};

}  // namespace eftlab
