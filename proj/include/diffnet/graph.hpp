#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace diffnet {

// A directed edge carrying the transmission rate of its exponential delay
// distribution. Rates are strictly positive; a missing edge encodes rate 0.
struct Edge {
  int src = 0;
  int dst = 0;
  double rate = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Immutable directed graph with per-edge rates. Edges are indexed both by
// destination (incoming lists, the primary layout: the forward propagation
// and the gradient scan incoming neighbors) and by source (outgoing lists,
// used by the simulator and shortest-path traversals). Safe to share
// read-only across threads.
class Graph {
 public:
  Graph(int node_count, std::vector<Edge> edges);

  int node_count() const { return n_; }
  std::size_t edge_count() const { return by_dst_.size(); }

  // Edges with dst == v, sorted by src.
  std::span<const Edge> incoming(int v) const;
  // Edges with src == u, sorted by dst.
  std::span<const Edge> outgoing(int u) const;

  // Flat edge array sorted by (src, dst); positions in this array serve as
  // edge ids for per-instance delay vectors.
  std::span<const Edge> edges_by_source() const { return by_src_; }
  std::size_t outgoing_base(int u) const;

  std::vector<int> nodes_with_outgoing() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.by_src_ == b.by_src_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> by_dst_;
  std::vector<std::size_t> dst_offsets_;
  std::vector<Edge> by_src_;
  std::vector<std::size_t> src_offsets_;
};

// Parameters of a stochastic-Kronecker synthetic network: the k-th Kronecker
// power of a 2x2 seed gives per-cell inclusion weights, globally rescaled so
// the expected number of (off-diagonal) edges equals target_edges, and each
// included edge draws its rate uniformly from (rate_low, rate_high).
struct KroneckerSpec {
  std::array<double, 4> seed{0.9, 0.1, 0.1, 0.9};  // row-major 2x2
  int power = 1;
  std::int64_t target_edges = 0;
  double rate_low = 0.0;
  double rate_high = 0.1;
};

Graph kronecker_generate(const KroneckerSpec& spec, std::uint64_t rng_seed);

// Incoming neighbors of v as (source, rate) pairs.
std::vector<std::pair<int, double>> incoming_neighbors(const Graph& g, int v);

// Text format: "n <count>" header, then "<src> <dst> <rate>" per line.
// '#' starts a comment. Save/load round-trips exactly.
Graph graph_load(const std::string& path);
void graph_save(const Graph& g, const std::string& path,
                std::span<const std::string> header_comments = {});

}  // namespace diffnet
