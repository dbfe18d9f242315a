#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "diffnet/graph.hpp"

namespace diffnet {

struct Activation {
  int node = 0;
  double time = 0.0;

  friend bool operator==(const Activation&, const Activation&) = default;
};

// Activation record of one diffusion within a time window. Only activated
// nodes are stored; everything else is implicitly "never activated"
// (infinite time). Seeds are the nodes activated at time 0; at least one
// must exist. Immutable value type.
class Cascade {
 public:
  Cascade(int node_count, double horizon, std::vector<Activation> events);

  int node_count() const { return n_; }
  double horizon() const { return horizon_; }
  // Sorted by (time, node).
  std::span<const Activation> events() const { return events_; }
  std::size_t activated_count() const { return events_.size(); }
  std::vector<int> seeds() const;
  // Activation time of v, or +infinity if it never activated.
  double time_of(int v) const;

  // Same record viewed under a different window: activations after the new
  // horizon are dropped (treated as never activated).
  Cascade with_horizon(double new_horizon) const;

  friend bool operator==(const Cascade& a, const Cascade& b) {
    return a.n_ == b.n_ && a.horizon_ == b.horizon_ && a.events_ == b.events_;
  }

 private:
  int n_ = 0;
  double horizon_ = 0.0;
  std::vector<Activation> events_;
};

// Binary activation snapshot of a cascade at time t: bits[v] == 1 iff v
// activated at or before t.
struct StateVector {
  double t = 0.0;
  std::vector<std::uint8_t> bits;

  bool active(int v) const { return bits[static_cast<std::size_t>(v)] != 0; }
};

// Event-queue simulation of the continuous-time independent cascade: seeds
// activate at 0; an activation at t proposes each out-neighbor at
// t + Exp(rate), and a node takes its earliest proposal within the horizon.
// Deterministic given rng_seed; exact ties resolve to the smallest proposing
// (src, dst) pair.
Cascade simulate_cascade(const Graph& g, std::span<const int> seeds, double horizon,
                         std::uint64_t rng_seed);

StateVector state_at(const Cascade& c, double t);

// Text format: header "meta n=<nodes> T=<horizon>", then one cascade per
// line as comma-separated "node:time" pairs with at least one time-0 pair.
std::vector<Cascade> cascades_load(const std::string& path);
void cascades_save(std::span<const Cascade> cascades, const std::string& path);

// Deterministic shuffle-then-cut partition into train/validation/test.
// Fractions must be positive and sum to 1.
struct CascadeSplit {
  std::vector<Cascade> train;
  std::vector<Cascade> validation;
  std::vector<Cascade> test;
};
CascadeSplit split_cascades(std::span<const Cascade> cascades,
                            std::array<double, 3> fractions, std::uint64_t rng_seed);

}  // namespace diffnet
