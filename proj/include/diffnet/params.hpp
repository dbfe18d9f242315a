#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "diffnet/cascade.hpp"
#include "diffnet/graph.hpp"

namespace diffnet {

// Learnable estimate of the rate matrix: nonnegative entries, zero diagonal.
// Two storage modes share one interface:
//  - dense: all n*n slots (diagonal pinned to 0), for moderate n;
//  - candidates: a fixed CSR sparsity pattern of learnable (src, dst) slots,
//    for large n where only pairs that can ever receive gradient are kept.
// Gradient buffers are flat vectors aligned with values(), so slot indices
// address both the parameter and its gradient.
class ParamMatrix {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  static ParamMatrix dense(int n);
  static ParamMatrix with_candidates(int n, std::vector<std::pair<int, int>> pairs);
  // Candidate slots from a graph's edges, initialized with the edge rates.
  static ParamMatrix from_graph(const Graph& g);

  int node_count() const { return n_; }
  bool dense_storage() const { return row_ptr_.empty(); }
  std::size_t entry_count() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  // Slot index of (u, v), or npos when the pair is not learnable.
  std::size_t slot(int u, int v) const;
  double at(int u, int v) const;
  // Returns false when (u, v) has no slot (candidate mode) or is diagonal.
  bool set(int u, int v, double value);

  // f(dst, slot_index, value) over the stored row of source u.
  template <class F>
  void for_row(int u, F&& f) const {
    if (dense_storage()) {
      const std::size_t base = static_cast<std::size_t>(u) * static_cast<std::size_t>(n_);
      for (int v = 0; v < n_; ++v) f(v, base + static_cast<std::size_t>(v), values_[base + static_cast<std::size_t>(v)]);
    } else {
      for (std::size_t i = row_ptr_[static_cast<std::size_t>(u)]; i < row_ptr_[static_cast<std::size_t>(u) + 1]; ++i) {
        f(cols_[i], i, values_[i]);
      }
    }
  }

  std::size_t row_length(int u) const {
    if (dense_storage()) return static_cast<std::size_t>(n_);
    return row_ptr_[static_cast<std::size_t>(u) + 1] - row_ptr_[static_cast<std::size_t>(u)];
  }

  // Clamps negative entries to 0 and re-zeroes the diagonal.
  void project_nonnegative();

  // Entries >= threshold as a graph (used for exporting learned models and
  // for influence estimation on inferred networks). With threshold <= 0,
  // keeps all strictly positive entries.
  Graph to_graph(double threshold = 0.0) const;

 private:
  int n_ = 0;
  std::vector<double> values_;
  std::vector<std::int32_t> cols_;      // candidate mode only
  std::vector<std::size_t> row_ptr_;    // candidate mode only, size n+1
};

// Learnable pairs observed in the data: (u, v) such that some cascade
// activates u strictly before v (v possibly never). Exactly the pairs that
// can receive a nonzero gradient.
std::vector<std::pair<int, int>> candidate_pairs(std::span<const Cascade> cascades);

}  // namespace diffnet
