#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <queue>

#include "diffnet/errors.hpp"
#include "diffnet/influence.hpp"

using namespace diffnet;

namespace {

Graph chain_graph() { return Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

// exact expected spread of the unit-rate 3-node chain at T=1:
// 1 + P(Exp(1) <= 1) + P(Erlang(2,1) <= 1)
double chain_expected_spread() {
  const double p1 = 1.0 - std::exp(-1.0);
  const double p2 = 1.0 - std::exp(-1.0) * 2.0;
  return 1.0 + p1 + p2;  // 1.89636
}

// independent oracle: single-source shortest-path reach set on fixed delays
std::vector<std::uint8_t> reach_set(const Graph& g, int source, double horizon,
                                    const std::vector<double>& delays) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(g.node_count()), inf);
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>> pq;
  dist[static_cast<std::size_t>(source)] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    const std::size_t base = g.outgoing_base(u);
    const auto out = g.outgoing(u);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double nd = d + delays[base + i];
      if (nd < dist[static_cast<std::size_t>(out[i].dst)]) {
        dist[static_cast<std::size_t>(out[i].dst)] = nd;
        pq.push({nd, out[i].dst});
      }
    }
  }
  std::vector<std::uint8_t> reached(static_cast<std::size_t>(g.node_count()), 0);
  for (int v = 0; v < g.node_count(); ++v) {
    if (dist[static_cast<std::size_t>(v)] <= horizon) reached[static_cast<std::size_t>(v)] = 1;
  }
  return reached;
}

Graph random_graph(int n, int edges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> list;
  while (static_cast<int>(list.size()) < edges) {
    const int u = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    const int v = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    if (u == v) continue;
    bool dup = false;
    for (const Edge& e : list) {
      if (e.src == u && e.dst == v) {
        dup = true;
        break;
      }
    }
    if (!dup) list.push_back({u, v, rng.uniform(0.2, 2.0)});
  }
  return Graph(n, std::move(list));
}

}  // namespace

TEST_CASE("hoeffding_theta") {
  CHECK(hoeffding_theta(0.1, 0.05) == 185);
  CHECK(hoeffding_theta(0.1, 0.01) == 265);
  CHECK_THROWS_AS(hoeffding_theta(0.0, 0.05), ValidationError);
  CHECK_THROWS_AS(hoeffding_theta(1.0, 0.05), ValidationError);
  CHECK_THROWS_AS(hoeffding_theta(0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(hoeffding_theta(0.1, 1.5), ValidationError);
}

TEST_CASE("sample_spread on an edgeless graph returns the seed count") {
  Graph g(6, {});
  Rng rng(1);
  const std::array<int, 3> seeds{0, 2, 4};
  CHECK(sample_spread(g, seeds, 5.0, rng) == 3);
}

TEST_CASE("sample_spread with huge rates reaches everything reachable") {
  // delays ~ Exp(1e9) are effectively zero
  Graph g(5, {{0, 1, 1e9}, {1, 2, 1e9}, {2, 3, 1e9}});  // node 4 unreachable
  Rng rng(2);
  const std::array<int, 1> seeds{0};
  for (int i = 0; i < 20; ++i) CHECK(sample_spread(g, seeds, 1.0, rng) == 4);
}

TEST_CASE("sample_spread validates inputs") {
  Graph g(3, {{0, 1, 1.0}});
  Rng rng(3);
  CHECK_THROWS_AS(sample_spread(g, {}, 1.0, rng), ValidationError);
  const std::array<int, 1> bad{9};
  CHECK_THROWS_AS(sample_spread(g, bad, 1.0, rng), ValidationError);
}

TEST_CASE("chain oracle: sampled mean matches the Erlang expectation") {
  Graph g = chain_graph();
  const std::array<int, 1> seeds{0};
  const int theta = 20000;
  std::int64_t total = 0;
  for (int i = 0; i < theta; ++i) {
    Rng rng(4000 + static_cast<std::uint64_t>(i));
    total += sample_spread(g, seeds, 1.0, rng);
  }
  const double mean = static_cast<double>(total) / theta;
  CHECK(std::abs(mean - chain_expected_spread()) < 0.02);
}

TEST_CASE("estimate_influence") {
  SUBCASE("edgeless graph gives the seed count with zero variance") {
    Graph g(4, {});
    InfluenceQuery q;
    q.seeds = {1, 3};
    q.horizon = 2.0;
    q.eta = 0.2;
    q.delta = 0.1;
    q.rng_seed = 5;
    InfluenceEstimate est = estimate_influence(g, q);
    CHECK(est.theta == hoeffding_theta(0.2, 0.1));
    CHECK(est.mean_spread == 2.0);
    for (int s : est.samples) CHECK(s == 2);
  }
  SUBCASE("same seed gives identical sample lists") {
    Graph g = chain_graph();
    InfluenceQuery q;
    q.seeds = {0};
    q.horizon = 1.0;
    q.eta = 0.1;
    q.delta = 0.05;
    q.rng_seed = 11;
    InfluenceEstimate a = estimate_influence(g, q, 1);
    InfluenceEstimate b = estimate_influence(g, q, 4);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.samples == b.samples);
    CHECK(a.mean_spread == b.mean_spread);
  }
  SUBCASE("samples stay within [|S|, n]") {
    Graph g = random_graph(32, 96, 17);
    InfluenceQuery q;
    q.seeds = {0, 5, 9};
    q.horizon = 1.5;
    q.eta = 0.15;
    q.delta = 0.1;
    q.rng_seed = 23;
    InfluenceEstimate est = estimate_influence(g, q);
    for (int s : est.samples) {
      CHECK(s >= 3);
      CHECK(s <= 32);
    }
    CHECK(est.mean_spread >= 3.0);
    CHECK(est.mean_spread <= 32.0);
  }
}

TEST_CASE("shared delays: spread is monotone in the horizon") {
  Graph g = random_graph(32, 128, 31);
  const std::array<int, 2> seeds{1, 7};
  for (std::uint64_t i = 0; i < 25; ++i) {
    Rng rng(600 + i);
    auto delays = sample_instance_delays(g, rng);
    int prev = 0;
    for (double horizon : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const int spread = spread_with_delays(g, seeds, horizon, delays);
      CHECK(spread >= prev);
      prev = spread;
    }
  }
}

TEST_CASE("shared delays: adding a seed never shrinks the spread") {
  Graph g = random_graph(32, 128, 37);
  for (std::uint64_t i = 0; i < 25; ++i) {
    Rng rng(700 + i);
    auto delays = sample_instance_delays(g, rng);
    std::vector<int> seeds{2};
    int prev = spread_with_delays(g, seeds, 1.0, delays);
    for (int extra : {5, 11, 19, 28}) {
      seeds.push_back(extra);
      const int spread = spread_with_delays(g, seeds, 1.0, delays);
      CHECK(spread >= prev);
      prev = spread;
    }
  }
}

TEST_CASE("multi-seed spread equals the union of single-source reach sets") {
  for (std::uint64_t instance = 0; instance < 50; ++instance) {
    Graph g = random_graph(32, 100, 1000 + instance);
    Rng rng(2000 + instance);
    auto delays = sample_instance_delays(g, rng);
    const std::vector<int> seeds{static_cast<int>(instance % 32),
                                 static_cast<int>((instance * 7 + 3) % 32),
                                 static_cast<int>((instance * 13 + 11) % 32)};
    const double horizon = 1.0;
    std::vector<std::uint8_t> in_union(32, 0);
    for (int s : seeds) {
      auto reached = reach_set(g, s, horizon, delays);
      for (int v = 0; v < 32; ++v) {
        if (reached[static_cast<std::size_t>(v)]) in_union[static_cast<std::size_t>(v)] = 1;
      }
    }
    int union_size = 0;
    for (std::uint8_t b : in_union) union_size += b;
    CHECK(spread_with_delays(g, seeds, horizon, delays) == union_size);
  }
}

TEST_CASE("ground_truth_spread") {
  SUBCASE("single seed with one matching cascade") {
    std::vector<Cascade> cs{Cascade(8, 10.0, {{2, 0.0}, {3, 1.0}, {4, 2.0}, {5, 3.0}, {6, 4.0}})};
    SpreadGroundTruth gt = ground_truth_spread(cs, std::array<int, 1>{2}, 100, 1);
    CHECK(gt.mean_spread == 5.0);
    CHECK(gt.resamples == 100);
  }
  SUBCASE("two seeds with disjoint activation sets") {
    std::vector<Cascade> cs{
        Cascade(10, 10.0, {{0, 0.0}, {1, 1.0}, {2, 2.0}}),
        Cascade(10, 10.0, {{5, 0.0}, {6, 1.0}, {7, 2.0}, {8, 3.0}}),
    };
    SpreadGroundTruth gt = ground_truth_spread(cs, std::array<int, 2>{0, 5}, 50, 2);
    CHECK(gt.mean_spread == 7.0);
  }
  SUBCASE("missing singleton cascade names the seed") {
    std::vector<Cascade> cs{Cascade(4, 10.0, {{0, 0.0}})};
    CHECK_THROWS_WITH_AS(ground_truth_spread(cs, std::array<int, 1>{3}, 10, 1),
                         doctest::Contains("3"), ValidationError);
  }
  SUBCASE("multi-seed cascades are not usable as singleton sources") {
    std::vector<Cascade> cs{Cascade(4, 10.0, {{0, 0.0}, {1, 0.0}})};
    CHECK_THROWS_AS(ground_truth_spread(cs, std::array<int, 1>{0}, 10, 1), ValidationError);
  }
  SUBCASE("mean lies in [|S|, n]") {
    std::vector<Cascade> cs;
    Graph g = random_graph(16, 48, 77);
    for (int i = 0; i < 200; ++i) {
      const std::array<int, 1> seeds{i % 16};
      cs.push_back(simulate_cascade(g, seeds, 4.0, 3000 + static_cast<std::uint64_t>(i)));
    }
    SpreadGroundTruth gt = ground_truth_spread(cs, std::array<int, 3>{0, 4, 9}, 1000, 3);
    CHECK(gt.mean_spread >= 3.0);
    CHECK(gt.mean_spread <= 16.0);
  }
}

TEST_CASE("ie_mae") {
  CHECK(ie_mae(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(ie_mae(std::vector<double>{3}, std::vector<double>{5}) == 2.0);
  CHECK(ie_mae(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 5}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ie_mae(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("time_window_bound") {
  SUBCASE("zero estimation error collapses the lower bound to t_star") {
    auto [lo, hi] = time_window_bound(0.0, 2.0, 10.0);
    CHECK(lo == doctest::Approx(10.0));
    CHECK(hi == doctest::Approx(20.0));
  }
  SUBCASE("reference values") {
    auto [lo, hi] = time_window_bound(0.1, 2.0, 10.0);
    CHECK(lo == doctest::Approx((1.0 - std::exp(-1.0)) / 0.1).epsilon(1e-9));  // 6.3212
    CHECK(hi == doctest::Approx(20.0));
  }
  SUBCASE("huge c pushes the upper bound to t_star") {
    auto [lo, hi] = time_window_bound(0.1, 1e9, 10.0);
    CHECK(hi == doctest::Approx(10.0).epsilon(1e-6));
    (void)lo;
  }
  SUBCASE("lower bound approaches t_star as eps_err shrinks") {
    double prev = 0.0;
    for (double e : {1.0, 0.1, 0.01, 0.001}) {
      auto [lo, hi] = time_window_bound(e, 2.0, 10.0);
      CHECK(lo > prev);
      CHECK(lo < 10.0);
      prev = lo;
      (void)hi;
    }
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(time_window_bound(-0.1, 2.0, 10.0), ValidationError);
    CHECK_THROWS_AS(time_window_bound(0.1, 1.0, 10.0), ValidationError);
    CHECK_THROWS_AS(time_window_bound(0.1, 2.0, 0.0), ValidationError);
  }
}

TEST_CASE("estimation work scales near-linearly in the sample count") {
  Graph g = random_graph(256, 1024, 91);
  InfluenceQuery q;
  q.seeds = {0, 17, 101};
  q.horizon = 1.0;
  q.rng_seed = 13;

  auto timed = [&](double eta) {
    q.eta = eta;
    q.delta = 0.05;
    const auto start = std::chrono::steady_clock::now();
    estimate_influence(g, q, 1);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  // warm up, then compare theta and 16*theta (eta halves four times -> x16)
  timed(0.2);
  const double t_small = std::max(timed(0.2), 1e-4);
  const double t_big = timed(0.05);
  const double theta_ratio = static_cast<double>(hoeffding_theta(0.05, 0.05)) /
                             static_cast<double>(hoeffding_theta(0.2, 0.05));
  // generous envelope: within 8x of proportional either way
  CHECK(t_big / t_small < theta_ratio * 8.0);
}
