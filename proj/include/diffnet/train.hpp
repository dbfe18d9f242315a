#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffnet/cascade.hpp"
#include "diffnet/params.hpp"
#include "diffnet/propagation.hpp"

namespace diffnet {

struct TrainConfig {
  double eps = 1.0;
  double horizon = 0.0;        // 0: adopt the cascades' horizon; else re-window to this T
  int batch_size = 128;
  double learning_rate = 0.1;
  int passes = 0;              // sampled batches; 0: ceil(|C| / batch_size)
  double init_sigma = 0.0;     // 0: 1/n
  std::uint64_t rng_seed = 1;
  double threshold = 0.01;     // edge-inference cutoff
  double clamp_lo = kDefaultClampLo;
  double momentum = 0.0;       // plain SGD by default
  // kAdam bounds per-entry steps by the learning rate, which tames the 1/q
  // gradient spikes of near-clamped predictions on small dense problems.
  enum class Optimizer { kSgd, kAdam } optimizer = Optimizer::kSgd;
  enum class Storage { kAuto, kDense, kCandidates } storage = Storage::kAuto;
  int workers = 0;

  // Dense n*n storage is kept up to this many nodes; past it, auto mode
  // restricts learnable slots to pairs observed in the cascades.
  static constexpr int kDenseLimit = 4096;
};

struct TrainedModel {
  ParamMatrix params;
  std::vector<double> loss_history;  // mean batch loss per sampled batch
  TrainConfig config;
};

// Gaussian init followed by projection (negatives and the diagonal to 0).
ParamMatrix init_params(int n, double init_sigma, std::uint64_t rng_seed);

// Mini-batch SGD over cascades sampled uniformly with replacement, with
// nonnegativity projection after every update.
TrainedModel train(std::span<const Cascade> cascades, const TrainConfig& config);

// Entries >= threshold (diagonal excluded), sorted.
std::vector<std::pair<int, int>> infer_edges(const ParamMatrix& params, double threshold);

std::vector<std::pair<int, int>> edge_set(const Graph& g);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
F1Result f1_score(std::vector<std::pair<int, int>> predicted,
                  std::vector<std::pair<int, int>> truth);

// Mean forward loss over a cascade list, no gradient.
double eval_bce(const ParamMatrix& params, std::span<const Cascade> cascades, double eps,
                double clamp_lo = kDefaultClampLo, int workers = 0);

// Model file: the graph edge-list format restricted to entries >= floor
// (all positive entries when floor <= 0), preceded by '#' comments recording
// the training config. Loadable with graph_load.
void save_model(const TrainedModel& model, const std::string& path, double floor = 0.0);

// Loss history as CSV "batch,loss".
void save_loss_history(std::span<const double> history, const std::string& path);

}  // namespace diffnet
