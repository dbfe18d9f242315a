#include "diffnet/influence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "diffnet/errors.hpp"
#include "diffnet/parallel.hpp"

namespace diffnet {

namespace {

std::vector<int> checked_seed_list(const Graph& g, std::span<const int> seeds) {
  if (seeds.empty()) throw ValidationError("influence: seed set is empty");
  std::vector<int> list(seeds.begin(), seeds.end());
  std::sort(list.begin(), list.end());
  list.erase(std::unique(list.begin(), list.end()), list.end());
  for (int s : list) {
    if (s < 0 || s >= g.node_count()) {
      throw ValidationError("influence: seed " + std::to_string(s) + " out of range");
    }
  }
  return list;
}

// Dijkstra over lazily-weighted edges. weight(edge_id, edge) supplies the
// delay the first time the edge is relaxed; expansion stops once the nearest
// frontier node lies beyond the horizon.
template <class WeightFn>
int reached_within(const Graph& g, const std::vector<int>& seeds, double horizon,
                   WeightFn&& weight) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(g.node_count()), inf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  for (int s : seeds) {
    dist[static_cast<std::size_t>(s)] = 0.0;
    frontier.push({0.0, s});
  }
  int reached = 0;
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (d > horizon) break;
    ++reached;
    const std::size_t base = g.outgoing_base(u);
    const auto edges = g.outgoing(u);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      const double nd = d + weight(base + i, e);
      if (nd <= horizon && nd < dist[static_cast<std::size_t>(e.dst)]) {
        dist[static_cast<std::size_t>(e.dst)] = nd;
        frontier.push({nd, e.dst});
      }
    }
  }
  return reached;
}

}  // namespace

std::int64_t hoeffding_theta(double eta, double delta) {
  if (!(eta > 0.0 && eta < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("hoeffding_theta: eta and delta must lie in (0,1)");
  }
  return static_cast<std::int64_t>(std::ceil(std::log(2.0 / delta) / (2.0 * eta * eta)));
}

int sample_spread(const Graph& g, std::span<const int> seeds, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw ValidationError("influence: horizon must be > 0");
  const std::vector<int> list = checked_seed_list(g, seeds);
  return reached_within(g, list, horizon,
                        [&](std::size_t, const Edge& e) { return rng.exponential(e.rate); });
}

int spread_with_delays(const Graph& g, std::span<const int> seeds, double horizon,
                       std::span<const double> delays) {
  if (!(horizon > 0.0)) throw ValidationError("influence: horizon must be > 0");
  if (delays.size() != g.edge_count()) {
    throw ValidationError("spread_with_delays: delay vector size mismatch");
  }
  const std::vector<int> list = checked_seed_list(g, seeds);
  return reached_within(g, list, horizon,
                        [&](std::size_t id, const Edge&) { return delays[id]; });
}

std::vector<double> sample_instance_delays(const Graph& g, Rng& rng) {
  std::vector<double> delays;
  delays.reserve(g.edge_count());
  for (const Edge& e : g.edges_by_source()) delays.push_back(rng.exponential(e.rate));
  return delays;
}

InfluenceEstimate estimate_influence(const Graph& g, const InfluenceQuery& query,
                                     int workers) {
  const std::vector<int> seeds = checked_seed_list(g, query.seeds);
  if (!(query.horizon > 0.0)) throw ValidationError("influence: horizon must be > 0");
  InfluenceEstimate estimate;
  estimate.theta = hoeffding_theta(query.eta, query.delta);
  estimate.samples.assign(static_cast<std::size_t>(estimate.theta), 0);
  parallel_chunks(static_cast<std::size_t>(estimate.theta), workers,
                  [&](int, std::size_t lo, std::size_t hi) {
                    for (std::size_t i = lo; i < hi; ++i) {
                      Rng rng(query.rng_seed + static_cast<std::uint64_t>(i));
                      estimate.samples[i] = sample_spread(g, seeds, query.horizon, rng);
                    }
                  });
  std::int64_t total = 0;
  for (int s : estimate.samples) total += s;
  estimate.mean_spread = static_cast<double>(total) / static_cast<double>(estimate.theta);
  return estimate;
}

SpreadGroundTruth ground_truth_spread(std::span<const Cascade> test_cascades,
                                      std::span<const int> seeds, int resamples,
                                      std::uint64_t rng_seed) {
  if (seeds.empty()) throw ValidationError("ground_truth: seed set is empty");
  if (resamples < 1) throw ValidationError("ground_truth: resamples must be >= 1");
  if (test_cascades.empty()) throw ValidationError("ground_truth: no test cascades");
  const int n = test_cascades.front().node_count();

  // Cascades usable for node s: exactly those seeded at {s} alone.
  std::vector<std::vector<std::size_t>> by_seed(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < test_cascades.size(); ++i) {
    const std::vector<int> cs = test_cascades[i].seeds();
    if (cs.size() == 1) by_seed[static_cast<std::size_t>(cs[0])].push_back(i);
  }
  for (int s : seeds) {
    if (s < 0 || s >= n) throw ValidationError("ground_truth: seed " + std::to_string(s) + " out of range");
    if (by_seed[static_cast<std::size_t>(s)].empty()) {
      throw ValidationError("ground_truth: no test cascade with singleton seed " +
                            std::to_string(s));
    }
  }

  Rng rng(rng_seed);
  std::vector<std::uint8_t> in_union(static_cast<std::size_t>(n), 0);
  std::vector<int> touched;
  std::int64_t total = 0;
  for (int round = 0; round < resamples; ++round) {
    touched.clear();
    for (int s : seeds) {
      const auto& pool = by_seed[static_cast<std::size_t>(s)];
      const Cascade& c = test_cascades[pool[rng.index(pool.size())]];
      for (const Activation& e : c.events()) {
        if (!in_union[static_cast<std::size_t>(e.node)]) {
          in_union[static_cast<std::size_t>(e.node)] = 1;
          touched.push_back(e.node);
        }
      }
    }
    total += static_cast<std::int64_t>(touched.size());
    for (int v : touched) in_union[static_cast<std::size_t>(v)] = 0;
  }

  SpreadGroundTruth gt;
  gt.seeds.assign(seeds.begin(), seeds.end());
  gt.resamples = resamples;
  gt.mean_spread = static_cast<double>(total) / static_cast<double>(resamples);
  return gt;
}

double ie_mae(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) {
    throw ValidationError("ie_mae: list lengths differ");
  }
  if (estimates.empty()) throw ValidationError("ie_mae: empty lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum += std::abs(estimates[i] - truths[i]);
  }
  return sum / static_cast<double>(estimates.size());
}

std::pair<double, double> time_window_bound(double eps_err, double c, double t_star) {
  if (eps_err < 0.0) throw ValidationError("time_window_bound: eps_err must be >= 0");
  if (!(c > 1.0)) throw ValidationError("time_window_bound: c must be > 1");
  if (!(t_star > 0.0)) throw ValidationError("time_window_bound: t_star must be > 0");
  const double lower = eps_err == 0.0 ? t_star : -std::expm1(-eps_err * t_star) / eps_err;
  const double upper = c * t_star / (c - 1.0);
  return {lower, upper};
}

}  // namespace diffnet
