#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eftlab/errors.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

// Reward-weight vector c; K=3 for the driving task.
using CharacterVector = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Interval&) const = default;
};

// Per-component character space. Each component may be a union of intervals
// (used when training deliberately leaves a hole in the range); sampling picks
// an interval with probability proportional to its length. Projection clips
// to the bounding box of each component.
class CharacterSpace {
 public:
  CharacterSpace() = default;

  explicit CharacterSpace(std::vector<std::vector<Interval>> components)
      : components_(std::move(components)) {
    validate();
  }

  static CharacterSpace unit_box(int dims) {
    std::vector<std::vector<Interval>> comps(
        static_cast<std::size_t>(dims), std::vector<Interval>{{0.0, 1.0}});
    return CharacterSpace(std::move(comps));
  }

  // One interval list applied to every component.
  static CharacterSpace uniform(int dims, std::vector<Interval> intervals) {
    std::vector<std::vector<Interval>> comps(static_cast<std::size_t>(dims),
                                             intervals);
    return CharacterSpace(std::move(comps));
  }

  int dims() const { return static_cast<int>(components_.size()); }
  const std::vector<std::vector<Interval>>& components() const {
    return components_;
  }

  double component_min(int k) const {
    double m = components_[k].front().lo;
    for (const auto& iv : components_[k]) m = std::min(m, iv.lo);
    return m;
  }

  double component_max(int k) const {
    double m = components_[k].front().hi;
    for (const auto& iv : components_[k]) m = std::max(m, iv.hi);
    return m;
  }

  double component_range(int k) const {
    return component_max(k) - component_min(k);
  }

  CharacterVector sample(SeededRng& rng) const {
    CharacterVector c(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const auto& ivs = components_[k];
      double total = 0.0;
      for (const auto& iv : ivs) total += iv.hi - iv.lo;
      double u = rng.uniform() * total;
      double x = ivs.back().hi;
      for (const auto& iv : ivs) {
        double len = iv.hi - iv.lo;
        if (u <= len || &iv == &ivs.back()) {
          x = iv.lo + std::min(u, len);
          break;
        }
        u -= len;
      }
      c[k] = x;
    }
    return c;
  }

  CharacterVector project(CharacterVector c) const {
    check_dims(c);
    for (int k = 0; k < dims(); ++k)
      c[k] = std::clamp(c[k], component_min(k), component_max(k));
    return c;
  }

  bool contains(const CharacterVector& c) const {
    if (static_cast<int>(c.size()) != dims()) return false;
    for (int k = 0; k < dims(); ++k)
      if (c[k] < component_min(k) || c[k] > component_max(k)) return false;
    return true;
  }

  CharacterVector midpoint() const {
    CharacterVector c(components_.size());
    for (int k = 0; k < dims(); ++k)
      c[k] = 0.5 * (component_min(k) + component_max(k));
    return c;
  }

  // The bounding box as a plain space (drops interval holes).
  CharacterSpace bounding_box() const {
    std::vector<std::vector<Interval>> comps(components_.size());
    for (int k = 0; k < dims(); ++k)
      comps[k] = {Interval{component_min(k), component_max(k)}};
    return CharacterSpace(std::move(comps));
  }

 private:
  void validate() const {
    if (components_.empty())
      throw ConfigError("character space needs at least one component");
    for (const auto& ivs : components_) {
      if (ivs.empty())
        throw ConfigError("character component needs at least one interval");
      for (const auto& iv : ivs)
        if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
          throw ConfigError("invalid character interval");
    }
  }

  void check_dims(const CharacterVector& c) const {
    if (static_cast<int>(c.size()) != dims())
      throw ShapeError("character dimension " + std::to_string(c.size()) +
                       " != " + std::to_string(dims()));
  }

  std::vector<std::vector<Interval>> components_;
};

inline double l1_distance(const CharacterVector& a, const CharacterVector& b) {
  if (a.size() != b.size()) throw ShapeError("l1_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

}  // namespace eftlab
