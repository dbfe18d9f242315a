#include "diffnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/textio.hpp"

namespace diffnet {

namespace {

std::vector<std::size_t> build_offsets(const std::vector<Edge>& edges, int n,
                                       bool by_dst) {
  std::vector<std::size_t> offsets(static_cast<std::size_t>(n) + 1, 0);
  for (const Edge& e : edges) offsets[static_cast<std::size_t>(by_dst ? e.dst : e.src) + 1]++;
  for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
  return offsets;
}

}  // namespace

Graph::Graph(int node_count, std::vector<Edge> edges) : n_(node_count) {
  if (n_ < 1) throw ValidationError("graph: node count must be >= 1");
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= n_ || e.dst < 0 || e.dst >= n_) {
      throw ValidationError("graph: edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) + ") out of range for n=" +
                            std::to_string(n_));
    }
    if (e.src == e.dst) {
      throw ValidationError("graph: self-loop at node " + std::to_string(e.src));
    }
    if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
      throw ValidationError("graph: edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) + ") has invalid rate " +
                            format_double(e.rate));
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].src == edges[i - 1].src && edges[i].dst == edges[i - 1].dst) {
      throw ValidationError("graph: duplicate edge (" + std::to_string(edges[i].src) +
                            "," + std::to_string(edges[i].dst) + ")");
    }
  }
  by_src_ = std::move(edges);
  src_offsets_ = build_offsets(by_src_, n_, /*by_dst=*/false);
  by_dst_ = by_src_;
  std::sort(by_dst_.begin(), by_dst_.end(), [](const Edge& a, const Edge& b) {
    return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
  });
  dst_offsets_ = build_offsets(by_dst_, n_, /*by_dst=*/true);
}

std::span<const Edge> Graph::incoming(int v) const {
  if (v < 0 || v >= n_) throw ValidationError("graph: node " + std::to_string(v) + " out of range");
  return {by_dst_.data() + dst_offsets_[static_cast<std::size_t>(v)],
          by_dst_.data() + dst_offsets_[static_cast<std::size_t>(v) + 1]};
}

std::span<const Edge> Graph::outgoing(int u) const {
  if (u < 0 || u >= n_) throw ValidationError("graph: node " + std::to_string(u) + " out of range");
  return {by_src_.data() + src_offsets_[static_cast<std::size_t>(u)],
          by_src_.data() + src_offsets_[static_cast<std::size_t>(u) + 1]};
}

std::size_t Graph::outgoing_base(int u) const {
  return src_offsets_[static_cast<std::size_t>(u)];
}

std::vector<int> Graph::nodes_with_outgoing() const {
  std::vector<int> nodes;
  for (int u = 0; u < n_; ++u) {
    if (src_offsets_[static_cast<std::size_t>(u) + 1] > src_offsets_[static_cast<std::size_t>(u)]) {
      nodes.push_back(u);
    }
  }
  return nodes;
}

std::vector<std::pair<int, double>> incoming_neighbors(const Graph& g, int v) {
  std::vector<std::pair<int, double>> result;
  for (const Edge& e : g.incoming(v)) result.emplace_back(e.src, e.rate);
  return result;
}

namespace {

void validate_kronecker(const KroneckerSpec& spec) {
  for (double s : spec.seed) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ValidationError("kronecker: seed entries must lie in [0,1]");
    }
  }
  if (spec.power < 1 || spec.power > 30) {
    throw ValidationError("kronecker: power must be in [1,30] to fit the index type");
  }
  const std::int64_t n = std::int64_t{1} << spec.power;
  const std::int64_t cells = n * (n - 1);
  if (spec.target_edges < 0 || spec.target_edges > cells) {
    throw ValidationError("kronecker: target_edges " + std::to_string(spec.target_edges) +
                          " exceeds off-diagonal cell count " + std::to_string(cells));
  }
  if (!(spec.rate_low >= 0.0) || !(spec.rate_low < spec.rate_high)) {
    throw ValidationError("kronecker: need 0 <= rate_low < rate_high");
  }
}

}  // namespace

Graph kronecker_generate(const KroneckerSpec& spec, std::uint64_t rng_seed) {
  validate_kronecker(spec);
  const int k = spec.power;
  const std::int64_t n = std::int64_t{1} << k;
  const double total = std::pow(spec.seed[0] + spec.seed[1] + spec.seed[2] + spec.seed[3], k);
  const double diagonal = std::pow(spec.seed[0] + spec.seed[3], k);
  const double off_diag_sum = total - diagonal;
  if (!(off_diag_sum > 0.0) && spec.target_edges > 0) {
    throw ValidationError("kronecker: seed assigns zero probability to all off-diagonal cells");
  }
  const double scale =
      spec.target_edges > 0 ? static_cast<double>(spec.target_edges) / off_diag_sum : 0.0;

  Rng rng(rng_seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(spec.target_edges + 16));
  for (std::int64_t u = 0; u < n; ++u) {
    for (std::int64_t v = 0; v < n; ++v) {
      if (u == v) continue;
      double cell = 1.0;
      for (int bit = 0; bit < k; ++bit) {
        const int ub = static_cast<int>((u >> bit) & 1);
        const int vb = static_cast<int>((v >> bit) & 1);
        cell *= spec.seed[static_cast<std::size_t>(ub * 2 + vb)];
      }
      const double p = std::min(1.0, cell * scale);
      if (rng.uniform01() < p) {
        edges.push_back({static_cast<int>(u), static_cast<int>(v),
                         rng.uniform(spec.rate_low, spec.rate_high)});
      }
    }
  }
  return Graph(static_cast<int>(n), std::move(edges));
}

Graph graph_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file '" + path + "'");
  std::string line;
  int line_no = 0;
  int n = -1;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (n < 0) {
      if (sv.substr(0, 2) != "n " && sv.substr(0, 2) != "n\t") {
        throw ValidationError(ctx + ": expected header 'n <node_count>'");
      }
      n = static_cast<int>(parse_int(sv.substr(2), ctx));
      if (n < 1) throw ValidationError(ctx + ": node count must be >= 1");
      continue;
    }
    std::istringstream fields{std::string(sv)};
    std::string a, b, c, extra;
    fields >> a >> b >> c;
    if (fields.fail() || (fields >> extra)) {
      throw ValidationError(ctx + ": expected '<src> <dst> <rate>'");
    }
    edges.push_back({static_cast<int>(parse_int(a, ctx)), static_cast<int>(parse_int(b, ctx)),
                     parse_double(c, ctx)});
    const Edge& e = edges.back();
    if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
      throw ValidationError(ctx + ": rate must be finite and > 0");
    }
  }
  if (n < 0) throw ValidationError(path + ": missing 'n <node_count>' header");
  try {
    return Graph(n, std::move(edges));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void graph_save(const Graph& g, const std::string& path,
                std::span<const std::string> header_comments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph file '" + path + "'");
  for (const std::string& c : header_comments) out << "# " << c << "\n";
  out << "n " << g.node_count() << "\n";
  for (const Edge& e : g.edges_by_source()) {
    out << e.src << " " << e.dst << " " << format_double(e.rate) << "\n";
  }
  if (!out) throw IoError("failed while writing graph file '" + path + "'");
}

}  // namespace diffnet
