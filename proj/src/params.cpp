#include "diffnet/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffnet/errors.hpp"

namespace diffnet {

ParamMatrix ParamMatrix::dense(int n) {
  if (n < 1) throw ValidationError("params: node count must be >= 1");
  ParamMatrix m;
  m.n_ = n;
  m.values_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  return m;
}

ParamMatrix ParamMatrix::with_candidates(int n, std::vector<std::pair<int, int>> pairs) {
  if (n < 1) throw ValidationError("params: node count must be >= 1");
  for (const auto& [u, v] : pairs) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ValidationError("params: candidate (" + std::to_string(u) + "," +
                            std::to_string(v) + ") out of range");
    }
  }
  std::erase_if(pairs, [](const std::pair<int, int>& p) { return p.first == p.second; });
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  ParamMatrix m;
  m.n_ = n;
  m.values_.assign(pairs.size(), 0.0);
  m.cols_.resize(pairs.size());
  m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : pairs) m.row_ptr_[static_cast<std::size_t>(u) + 1]++;
  for (std::size_t i = 1; i < m.row_ptr_.size(); ++i) m.row_ptr_[i] += m.row_ptr_[i - 1];
  for (std::size_t i = 0; i < pairs.size(); ++i) m.cols_[i] = pairs[i].second;
  return m;
}

ParamMatrix ParamMatrix::from_graph(const Graph& g) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(g.edge_count());
  for (const Edge& e : g.edges_by_source()) pairs.emplace_back(e.src, e.dst);
  ParamMatrix m = with_candidates(g.node_count(), std::move(pairs));
  for (const Edge& e : g.edges_by_source()) m.set(e.src, e.dst, e.rate);
  return m;
}

std::size_t ParamMatrix::slot(int u, int v) const {
  if (u < 0 || u >= n_ || v < 0 || v >= n_) return npos;
  if (dense_storage()) {
    return static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v);
  }
  const std::size_t lo = row_ptr_[static_cast<std::size_t>(u)];
  const std::size_t hi = row_ptr_[static_cast<std::size_t>(u) + 1];
  const auto* begin = cols_.data() + lo;
  const auto* end = cols_.data() + hi;
  const auto* it = std::lower_bound(begin, end, v);
  if (it == end || *it != v) return npos;
  return lo + static_cast<std::size_t>(it - begin);
}

double ParamMatrix::at(int u, int v) const {
  const std::size_t s = slot(u, v);
  return s == npos ? 0.0 : values_[s];
}

bool ParamMatrix::set(int u, int v, double value) {
  if (u == v) return false;
  const std::size_t s = slot(u, v);
  if (s == npos) return false;
  values_[s] = value;
  return true;
}

void ParamMatrix::project_nonnegative() {
  for (double& v : values_) {
    if (v < 0.0) v = 0.0;
  }
  if (dense_storage()) {
    for (int u = 0; u < n_; ++u) {
      values_[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(u)] = 0.0;
    }
  }
}

Graph ParamMatrix::to_graph(double threshold) const {
  std::vector<Edge> edges;
  for (int u = 0; u < n_; ++u) {
    for_row(u, [&](int v, std::size_t, double value) {
      if (u == v) return;
      const bool keep = threshold > 0.0 ? value >= threshold : value > 0.0;
      if (keep) edges.push_back({u, v, value});
    });
  }
  return Graph(n_, std::move(edges));
}

std::vector<std::pair<int, int>> candidate_pairs(std::span<const Cascade> cascades) {
  if (cascades.empty()) return {};
  const int n = cascades.front().node_count();
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  // Bitmap row per source; sources that never activate never allocate one.
  std::vector<std::vector<std::uint64_t>> rows(static_cast<std::size_t>(n));
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> times(static_cast<std::size_t>(n), inf);
  for (const Cascade& c : cascades) {
    if (c.node_count() != n) throw ValidationError("candidates: cascades disagree on n");
    for (const Activation& e : c.events()) times[static_cast<std::size_t>(e.node)] = e.time;
    for (const Activation& e : c.events()) {
      auto& row = rows[static_cast<std::size_t>(e.node)];
      if (row.empty()) row.assign(words, 0);
      // v qualifies if it activates strictly after e.node or never does.
      for (int v = 0; v < n; ++v) {
        if (v != e.node && times[static_cast<std::size_t>(v)] > e.time) {
          row[static_cast<std::size_t>(v) / 64] |= std::uint64_t{1} << (static_cast<std::size_t>(v) % 64);
        }
      }
    }
    for (const Activation& e : c.events()) times[static_cast<std::size_t>(e.node)] = inf;
  }
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u) {
    const auto& row = rows[static_cast<std::size_t>(u)];
    if (row.empty()) continue;
    for (int v = 0; v < n; ++v) {
      if (row[static_cast<std::size_t>(v) / 64] >> (static_cast<std::size_t>(v) % 64) & 1) {
        pairs.emplace_back(u, v);
      }
    }
  }
  return pairs;
}

}  // namespace diffnet
