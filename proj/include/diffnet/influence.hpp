#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "diffnet/cascade.hpp"
#include "diffnet/graph.hpp"
#include "diffnet/rng.hpp"

namespace diffnet {

struct InfluenceQuery {
  std::vector<int> seeds;
  double horizon = 0.0;
  double eta = 0.1;
  double delta = 0.05;
  std::uint64_t rng_seed = 1;
};

struct InfluenceEstimate {
  std::int64_t theta = 0;
  double mean_spread = 0.0;
  std::vector<int> samples;
};

struct SpreadGroundTruth {
  std::vector<int> seeds;
  double mean_spread = 0.0;
  int resamples = 0;
};

// Samples needed for additive eta*n accuracy with confidence 1 - delta:
// ceil(ln(2/delta) / (2 eta^2)).
std::int64_t hoeffding_theta(double eta, double delta);

// One spread draw: every edge delay is sampled from its exponential on first
// visit, all seeds start a shortest-path frontier at time 0, and the count
// of nodes reached within the horizon is returned (always >= |seeds|).
int sample_spread(const Graph& g, std::span<const int> seeds, double horizon, Rng& rng);

// Fixed-instance variant: delays indexed like g.edges_by_source(). Shares
// one instance across horizons or seed sets.
int spread_with_delays(const Graph& g, std::span<const int> seeds, double horizon,
                       std::span<const double> delays);
std::vector<double> sample_instance_delays(const Graph& g, Rng& rng);

// theta independent spread samples (per-sample generator seeded with
// rng_seed + index) and their mean; |mean - E[I]| <= eta*n with probability
// >= 1 - delta.
InfluenceEstimate estimate_influence(const Graph& g, const InfluenceQuery& query,
                                     int workers = 0);

// Experimental ground truth from held-out cascades: per round, draw one
// cascade seeded at each query seed and count the union of activated nodes;
// averages over `resamples` rounds. Requires singleton-seed cascades.
SpreadGroundTruth ground_truth_spread(std::span<const Cascade> test_cascades,
                                      std::span<const int> seeds, int resamples = 1000,
                                      std::uint64_t rng_seed = 1);

double ie_mae(std::span<const double> estimates, std::span<const double> truths);

// Open interval for the expected window E[T] needed to cover what the true
// rates cover by t_star, when rates are known within eps_err and the
// smallest true rate is c * eps_err (c > 1):
// ((1 - exp(-eps_err t*)) / eps_err, c t* / (c - 1)); eps_err = 0 gives
// (t*, c t* / (c - 1)).
std::pair<double, double> time_window_bound(double eps_err, double c, double t_star);

}  // namespace diffnet
