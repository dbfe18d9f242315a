#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/train.hpp"

using namespace diffnet;

namespace {

std::vector<Cascade> single_edge_cascades(double rate, double horizon, int count,
                                          std::uint64_t seed0) {
  Graph g(2, {{0, 1, rate}});
  const std::array<int, 1> seeds{0};
  std::vector<Cascade> cascades;
  cascades.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    cascades.push_back(simulate_cascade(g, seeds, horizon, seed0 + static_cast<std::uint64_t>(i)));
  }
  return cascades;
}

// For a single always-active parent, the per-step activation of the child is
// Bernoulli with success 1 - exp(-rate*eps) at every exposure (memoryless),
// so the BCE-optimal constant prediction is q* = 1 - exp(-rate*eps) and the
// optimal entry is q*/eps.
double single_edge_optimum(double rate, double eps) {
  return -std::expm1(-rate * eps) / eps;
}

}  // namespace

TEST_CASE("init_params") {
  SUBCASE("n=1 collapses to the zero matrix") {
    ParamMatrix p = init_params(1, 0.5, 7);
    CHECK(p.at(0, 0) == 0.0);
  }
  SUBCASE("about half of the off-diagonal entries project to zero") {
    const int n = 100;
    ParamMatrix p = init_params(n, 0.01, 11);
    int zeros = 0;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (u != v && p.at(u, v) == 0.0) ++zeros;
      }
    }
    const double frac = static_cast<double>(zeros) / (n * n - n);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
  }
  SUBCASE("positive entries look half-normal with the requested scale") {
    const int n = 100;
    const double sigma = 1.0 / n;
    ParamMatrix p = init_params(n, sigma, 13);
    double sum = 0.0, sum2 = 0.0;
    int count = 0;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        const double x = p.at(u, v);
        if (u != v && x > 0.0) {
          sum += x;
          sum2 += x * x;
          ++count;
        }
      }
    }
    const double mean = sum / count;
    const double std_dev = std::sqrt(sum2 / count - mean * mean);
    // half-normal: mean = sigma*sqrt(2/pi), std = sigma*sqrt(1-2/pi)
    CHECK(mean == doctest::Approx(sigma * std::sqrt(2.0 / 3.14159265358979)).epsilon(0.05));
    CHECK(std_dev == doctest::Approx(sigma * std::sqrt(1.0 - 2.0 / 3.14159265358979)).epsilon(0.08));
  }
  SUBCASE("deterministic in the seed") {
    ParamMatrix a = init_params(20, 0.05, 3);
    ParamMatrix b = init_params(20, 0.05, 3);
    bool same = true;
    for (std::size_t i = 0; i < a.entry_count(); ++i) {
      if (a.values()[i] != b.values()[i]) same = false;
    }
    CHECK(same);
  }
  SUBCASE("invariants hold after projection") {
    ParamMatrix p = init_params(30, 0.1, 5);
    for (int u = 0; u < 30; ++u) {
      CHECK(p.at(u, u) == 0.0);
      for (int v = 0; v < 30; ++v) CHECK(p.at(u, v) >= 0.0);
    }
  }
}

TEST_CASE("train validates its inputs") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train({}, cfg), ValidationError);

  std::vector<Cascade> mixed{Cascade(2, 10.0, {{0, 0.0}}), Cascade(3, 10.0, {{0, 0.0}})};
  CHECK_THROWS_AS(train(mixed, cfg), ValidationError);

  std::vector<Cascade> ok{Cascade(2, 10.0, {{0, 0.0}})};
  cfg.eps = 11.0;
  CHECK_THROWS_AS(train(ok, cfg), ValidationError);
  cfg.eps = 1.0;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(ok, cfg), ValidationError);
}

TEST_CASE("single-edge rate recovery against the calibration optimum") {
  const double rate = 0.5;
  const double horizon = 10.0;
  const double eps = 1.0;
  auto cascades = single_edge_cascades(rate, horizon, 5000, 1000);

  TrainConfig cfg;
  cfg.eps = eps;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  cfg.passes = 300;
  cfg.rng_seed = 1;
  cfg.storage = TrainConfig::Storage::kCandidates;
  TrainedModel model = train(cascades, cfg);

  const double optimum = single_edge_optimum(rate, eps);  // 0.39347
  CHECK(std::abs(model.params.at(0, 1) - optimum) <= 0.1);
  // entries that never co-occur in activation order stay structurally absent
  CHECK(model.params.at(1, 0) == 0.0);
  CHECK(model.params.slot(1, 0) == ParamMatrix::npos);
  // thresholding keeps only the true edge
  auto edges = infer_edges(model.params, cfg.threshold);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == std::pair<int, int>{0, 1});

  // least-squares slope of the loss history is nonpositive
  const auto& h = model.loss_history;
  REQUIRE(h.size() > 10);
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    xm += static_cast<double>(i);
    ym += h[i];
  }
  xm /= static_cast<double>(h.size());
  ym /= static_cast<double>(h.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    num += (static_cast<double>(i) - xm) * (h[i] - ym);
    den += (static_cast<double>(i) - xm) * (static_cast<double>(i) - xm);
  }
  CHECK(num / den <= 0.0);
}

TEST_CASE("edge recovery beats a degree-matched random predictor") {
  KroneckerSpec spec;
  spec.seed = {0.9, 0.1, 0.1, 0.9};
  spec.power = 4;
  spec.target_edges = 64;
  spec.rate_low = 0.2;
  spec.rate_high = 0.5;
  Graph g = kronecker_generate(spec, 31);
  const std::vector<int> sources = g.nodes_with_outgoing();
  std::vector<Cascade> cascades;
  Rng pick(777);
  for (int i = 0; i < 2000; ++i) {
    const std::array<int, 1> seeds{sources[static_cast<std::size_t>(pick.index(sources.size()))]};
    cascades.push_back(simulate_cascade(g, seeds, 10.0, 3100000 + static_cast<std::uint64_t>(i)));
  }
  TrainConfig cfg;
  cfg.eps = 0.5;
  cfg.batch_size = 256;
  cfg.learning_rate = 0.01;
  cfg.passes = 250;
  cfg.rng_seed = 1;
  cfg.optimizer = TrainConfig::Optimizer::kAdam;
  TrainedModel model = train(cascades, cfg);
  const F1Result r = f1_score(infer_edges(model.params, cfg.threshold), edge_set(g));
  // a random predictor guessing m of the n(n-1) ordered pairs has
  // precision = recall = m / (n^2 - n)
  const double random_f1 = static_cast<double>(g.edge_count()) / (16.0 * 15.0);
  CHECK(r.f1 > random_f1);
  CHECK(r.recall > 0.8);
}

TEST_CASE("multi-seed cascades train") {
  // two sources active from time zero
  Graph g(4, {{0, 2, 0.6}, {1, 3, 0.6}});
  const std::array<int, 2> seeds{0, 1};
  std::vector<Cascade> cascades;
  for (int i = 0; i < 500; ++i) {
    cascades.push_back(simulate_cascade(g, seeds, 10.0, 300 + static_cast<std::uint64_t>(i)));
  }
  TrainConfig cfg;
  cfg.eps = 1.0;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  cfg.passes = 200;
  cfg.rng_seed = 1;
  cfg.storage = TrainConfig::Storage::kCandidates;
  TrainedModel model = train(cascades, cfg);
  CHECK(model.params.at(0, 2) > 0.1);
  CHECK(model.params.at(1, 3) > 0.1);
  CHECK(std::isfinite(model.loss_history.back()));
}

TEST_CASE("training is reproducible") {
  auto cascades = single_edge_cascades(0.4, 5.0, 200, 50);
  TrainConfig cfg;
  cfg.eps = 1.0;
  cfg.batch_size = 16;
  cfg.rng_seed = 3;
  TrainedModel a = train(cascades, cfg);
  TrainedModel b = train(cascades, cfg);
  REQUIRE(a.loss_history.size() == b.loss_history.size());
  bool same = true;
  for (std::size_t i = 0; i < a.loss_history.size(); ++i) {
    if (a.loss_history[i] != b.loss_history[i]) same = false;
  }
  for (std::size_t i = 0; i < a.params.entry_count(); ++i) {
    if (a.params.values()[i] != b.params.values()[i]) same = false;
  }
  CHECK(same);
}

TEST_CASE("worker count only reassociates floating-point sums") {
  auto cascades = single_edge_cascades(0.5, 10.0, 400, 70);
  TrainConfig cfg;
  cfg.eps = 1.0;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  cfg.passes = 50;
  cfg.rng_seed = 1;
  cfg.workers = 1;
  TrainedModel one = train(cascades, cfg);
  cfg.workers = 3;
  TrainedModel three = train(cascades, cfg);
  REQUIRE(one.params.entry_count() == three.params.entry_count());
  for (std::size_t i = 0; i < one.params.entry_count(); ++i) {
    CHECK(one.params.values()[i] == doctest::Approx(three.params.values()[i]).epsilon(1e-9));
  }
  CHECK(eval_bce(one.params, cascades, 1.0, kDefaultClampLo, 1) ==
        doctest::Approx(eval_bce(one.params, cascades, 1.0, kDefaultClampLo, 4)).epsilon(1e-12));
}

TEST_CASE("projection invariant holds after training") {
  auto cascades = single_edge_cascades(0.8, 5.0, 300, 90);
  TrainConfig cfg;
  cfg.eps = 0.5;
  cfg.batch_size = 32;
  cfg.rng_seed = 5;
  TrainedModel model = train(cascades, cfg);
  for (int u = 0; u < 2; ++u) {
    CHECK(model.params.at(u, u) == 0.0);
    for (int v = 0; v < 2; ++v) CHECK(model.params.at(u, v) >= 0.0);
  }
}

TEST_CASE("candidate pairs are exactly the strictly-ordered co-occurrences") {
  // 0 seeds, 1 activates later, 2 never: learnable pairs are
  // (0,1), (0,2), (1,2); the reverse orders never occur
  std::vector<Cascade> cs{Cascade(3, 10.0, {{0, 0.0}, {1, 2.0}})};
  auto pairs = candidate_pairs(cs);
  std::sort(pairs.begin(), pairs.end());
  const std::vector<std::pair<int, int>> expected{{0, 1}, {0, 2}, {1, 2}};
  CHECK(pairs == expected);

  ParamMatrix p = ParamMatrix::with_candidates(3, pairs);
  CHECK(p.entry_count() == 3);
  CHECK(p.slot(1, 0) == ParamMatrix::npos);
  CHECK(p.slot(2, 0) == ParamMatrix::npos);
  CHECK(p.slot(0, 1) != ParamMatrix::npos);
}

TEST_CASE("infer_edges") {
  ParamMatrix p = ParamMatrix::dense(2);
  p.set(0, 1, 0.009);
  p.set(1, 0, 0.011);

  SUBCASE("threshold selects entries at or above it") {
    auto edges = infer_edges(p, 0.01);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == std::pair<int, int>{1, 0});
  }
  SUBCASE("threshold zero keeps all structurally nonzero entries") {
    auto edges = infer_edges(p, 0.0);
    CHECK(edges.size() == 2);
  }
  SUBCASE("raising the threshold never adds edges") {
    for (double lo : {0.0, 0.005, 0.01, 0.0109}) {
      auto base = infer_edges(p, lo);
      auto higher = infer_edges(p, lo + 0.001);
      for (const auto& e : higher) {
        CHECK(std::find(base.begin(), base.end(), e) != base.end());
      }
      CHECK(higher.size() <= base.size());
    }
  }
  SUBCASE("negative threshold is rejected") {
    CHECK_THROWS_AS(infer_edges(p, -0.1), ValidationError);
  }
}

TEST_CASE("f1_score") {
  using Edges = std::vector<std::pair<int, int>>;
  SUBCASE("perfect prediction") {
    Edges e{{0, 1}, {2, 3}};
    F1Result r = f1_score(e, e);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
  }
  SUBCASE("disjoint nonempty sets") {
    F1Result r = f1_score({{0, 1}}, {{1, 0}});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SUBCASE("half overlap") {
    F1Result r = f1_score({{0, 1}, {0, 2}, {0, 3}, {0, 4}},
                          {{0, 1}, {0, 2}, {1, 0}, {2, 0}});
    CHECK(r.precision == doctest::Approx(0.5));
    CHECK(r.recall == doctest::Approx(0.5));
    CHECK(r.f1 == doctest::Approx(0.5));
  }
  SUBCASE("both empty") {
    F1Result r = f1_score({}, {});
    CHECK(r.f1 == 1.0);
  }
  SUBCASE("one empty") {
    CHECK(f1_score({}, {{0, 1}}).f1 == 0.0);
    CHECK(f1_score({{0, 1}}, {}).f1 == 0.0);
  }
}

TEST_CASE("eval_bce") {
  SUBCASE("zero parameters and seed-only cascades give near-zero loss") {
    std::vector<Cascade> cs{Cascade(4, 10.0, {{0, 0.0}}), Cascade(4, 10.0, {{2, 0.0}})};
    ParamMatrix p = ParamMatrix::dense(4);
    CHECK(eval_bce(p, cs, 1.0) < 1e-4);
    CHECK(eval_bce(p, cs, 1.0) > 0.0);
  }
  SUBCASE("deterministic across repeated evaluation") {
    auto cascades = single_edge_cascades(0.6, 8.0, 100, 7);
    ParamMatrix p = init_params(2, 0.5, 1);
    CHECK(eval_bce(p, cascades, 0.5) == eval_bce(p, cascades, 0.5));
  }
  SUBCASE("empty list is rejected") {
    ParamMatrix p = ParamMatrix::dense(2);
    CHECK_THROWS_AS(eval_bce(p, {}, 1.0), ValidationError);
  }
}

TEST_CASE("model save restricted by the export floor") {
  ParamMatrix p = ParamMatrix::dense(3);
  p.set(0, 1, 0.2);
  p.set(1, 2, 0.004);
  TrainedModel model{std::move(p), {1.0, 0.5}, TrainConfig{}};

  const std::string path = "/tmp/diffnet_train_model.txt";
  SUBCASE("floor 0 keeps all positive entries") {
    save_model(model, path, 0.0);
    Graph g = graph_load(path);
    CHECK(g.edge_count() == 2);
  }
  SUBCASE("floor drops small entries") {
    save_model(model, path, 0.01);
    Graph g = graph_load(path);
    REQUIRE(g.edge_count() == 1);
    CHECK(g.edges_by_source()[0].src == 0);
    CHECK(g.edges_by_source()[0].dst == 1);
    CHECK(g.edges_by_source()[0].rate == doctest::Approx(0.2));
  }
}

TEST_CASE("loss history CSV") {
  const std::string path = "/tmp/diffnet_train_loss.csv";
  save_loss_history(std::vector<double>{2.5, 1.25}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "batch,loss");
  std::getline(in, line);
  CHECK(line == "0,2.5");
  std::getline(in, line);
  CHECK(line == "1,1.25");
}
