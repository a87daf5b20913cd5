// Phase-space state types and L1 metrics shared by every other module.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssinn/errors.hpp"

namespace ssinn {

// Positions q and momenta p at one instant. Immutable by convention:
// every operation returns a new state.
struct PhaseState {
  std::vector<double> q;
  std::vector<double> p;

  PhaseState() = default;
  PhaseState(std::vector<double> q_, std::vector<double> p_)
      : q(std::move(q_)), p(std::move(p_)) {
    if (q.size() != p.size() || q.empty())
      throw std::invalid_argument("PhaseState: q and p must have equal nonzero length");
    for (double v : q)
      if (!std::isfinite(v)) throw std::invalid_argument("PhaseState: non-finite position");
    for (double v : p)
      if (!std::isfinite(v)) throw std::invalid_argument("PhaseState: non-finite momentum");
  }

  int dim() const { return static_cast<int>(q.size()); }
};

// Timestamped rollout. Times are absolute and strictly increasing.
struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;

  void push(double t, PhaseState s) {
    if (!times.empty()) {
      if (t <= times.back()) throw std::invalid_argument("Trajectory: times must be strictly increasing");
      if (s.dim() != states.front().dim())
        throw std::invalid_argument("Trajectory: inconsistent state dimension");
    }
    times.push_back(t);
    states.push_back(std::move(s));
  }

  std::size_t size() const { return times.size(); }
};

inline void require_same_dim(const PhaseState& a, const PhaseState& b, const char* who) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}

// Sum of |a.q - b.q| + |a.p - b.p| over all components.
inline double l1_distance(const PhaseState& a, const PhaseState& b) {
  require_same_dim(a, b, "l1_distance");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += std::abs(a.q[i] - b.q[i]) + std::abs(a.p[i] - b.p[i]);
  return s;
}

// (position L1, momentum L1); the two parts sum to l1_distance.
inline std::pair<double, double> split_error(const PhaseState& a, const PhaseState& b) {
  require_same_dim(a, b, "split_error");
  double sq = 0.0, sp = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    sq += std::abs(a.q[i] - b.q[i]);
    sp += std::abs(a.p[i] - b.p[i]);
  }
  return {sq, sp};
}

}  // namespace ssinn
