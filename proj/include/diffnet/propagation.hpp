#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diffnet/cascade.hpp"
#include "diffnet/params.hpp"

namespace diffnet {

// Predicted probabilities are clamped into [kDefaultClampLo, 1 - kDefaultClampLo]
// so log terms stay finite and Euler overshoot (eps * rate > 1) is capped.
inline constexpr double kDefaultClampLo = 1e-7;

// Expected diffusion rate per node conditioned on a state: for inactive v,
// the sum of rates from its active in-neighbors; 0 for active v.
std::vector<double> conditional_rate(const ParamMatrix& params, const StateVector& state);

// One explicit first-order step: state + eps * rates, clamped. Active nodes
// map to the upper clamp.
std::vector<double> euler_step(const StateVector& state, std::span<const double> rates,
                               double eps, double clamp_lo = kDefaultClampLo);

// Binary cross-entropy of one step, restricted to nodes inactive at the
// step's start (active nodes are pinned to probability 1 with target 1 and
// contribute nothing). Smaller is better.
double bce_step_loss(std::span<const double> predicted, const StateVector& target,
                     const StateVector& start);

// Per-step trace of the forward pass.
struct StepRecord {
  int k = 0;            // 1-based step index; the tail partial step follows the last full one
  double width = 0.0;   // eps, or the tail remainder
  std::vector<double> rates;      // conditional rate at step start (0 at active nodes)
  std::vector<double> predicted;  // clamped probabilities
  StateVector target;             // state at the step's end
  double loss = 0.0;
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<StepRecord> steps;
};

// Work counters for complexity checks.
struct WalkStats {
  std::uint64_t node_scans = 0;  // per-step passes over the node vector
  std::uint64_t edge_scans = 0;  // stored row entries visited
};

// Replays a cascade on the eps-grid (full steps plus one partial tail step
// when T is not a multiple of eps), predicting each next state from the
// observed one. Returns the summed loss and the per-step records.
ForwardResult forward_cascade(const ParamMatrix& params, const Cascade& cascade, double eps,
                              double clamp_lo = kDefaultClampLo, WalkStats* stats = nullptr);

// Loss only, without materializing records.
double cascade_loss(const ParamMatrix& params, const Cascade& cascade, double eps,
                    double clamp_lo = kDefaultClampLo, WalkStats* stats = nullptr);

// Accumulates d(loss)/d(params) into grad (flat, aligned with params.values());
// returns the loss. Clamped predictions contribute zero gradient; slots never
// touched are left as-is.
double grad_cascade(const ParamMatrix& params, const Cascade& cascade, double eps,
                    std::span<double> grad, double clamp_lo = kDefaultClampLo);

// Closed-form one-step approximation error: eps*rate + exp(-eps*rate) - 1,
// elementwise. Nonnegative, zero at rate 0, increasing in eps.
double local_error(double rate, double eps);
std::vector<double> local_error(std::span<const double> rates, double eps);

}  // namespace diffnet
