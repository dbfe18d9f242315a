#include "diffnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "diffnet/errors.hpp"
#include "diffnet/parallel.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/textio.hpp"

namespace diffnet {

namespace {

void init_values(ParamMatrix& params, double sigma, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  if (params.dense_storage()) {
    const int n = params.node_count();
    auto values = params.values();
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        values[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) +
               static_cast<std::size_t>(v)] = rng.normal(0.0, sigma);
      }
    }
  } else {
    for (double& v : params.values()) v = rng.normal(0.0, sigma);
  }
  params.project_nonnegative();
}

void validate_config(const TrainConfig& config, double horizon) {
  if (!(config.eps > 0.0) || config.eps > horizon) {
    throw ValidationError("train: eps must lie in (0, T]");
  }
  if (config.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
  if (config.threshold < 0.0) throw ValidationError("train: threshold must be >= 0");
  if (config.passes < 0) throw ValidationError("train: passes must be >= 0");
  if (!(config.init_sigma >= 0.0)) throw ValidationError("train: init_sigma must be >= 0");
}

}  // namespace

ParamMatrix init_params(int n, double init_sigma, std::uint64_t rng_seed) {
  if (n < 1) throw ValidationError("init_params: n must be >= 1");
  ParamMatrix params = ParamMatrix::dense(n);
  init_values(params, init_sigma, rng_seed);
  return params;
}

TrainedModel train(std::span<const Cascade> cascades, const TrainConfig& config) {
  if (cascades.empty()) throw ValidationError("train: no training cascades");
  const int n = cascades.front().node_count();
  double horizon = cascades.front().horizon();
  for (const Cascade& c : cascades) {
    if (c.node_count() != n || c.horizon() != horizon) {
      throw ValidationError("train: cascades disagree on (n, T)");
    }
  }

  std::vector<Cascade> rewindowed;
  if (config.horizon > 0.0 && config.horizon != horizon) {
    rewindowed.reserve(cascades.size());
    for (const Cascade& c : cascades) rewindowed.push_back(c.with_horizon(config.horizon));
    cascades = rewindowed;
    horizon = config.horizon;
  }
  validate_config(config, horizon);

  const bool use_candidates =
      config.storage == TrainConfig::Storage::kCandidates ||
      (config.storage == TrainConfig::Storage::kAuto && n > TrainConfig::kDenseLimit);
  ParamMatrix params =
      use_candidates ? ParamMatrix::with_candidates(n, candidate_pairs(cascades))
                     : ParamMatrix::dense(n);
  const double sigma = config.init_sigma > 0.0 ? config.init_sigma : 1.0 / static_cast<double>(n);
  init_values(params, sigma, config.rng_seed);

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const int passes =
      config.passes > 0
          ? config.passes
          : static_cast<int>((cascades.size() + batch - 1) / batch);

  const int workers = resolve_workers(config.workers);
  const std::size_t slots = params.entry_count();
  std::vector<std::vector<double>> worker_grads(
      static_cast<std::size_t>(workers), std::vector<double>(slots, 0.0));
  std::vector<double> worker_losses(static_cast<std::size_t>(workers), 0.0);
  std::vector<double> grad(slots, 0.0);
  std::vector<double> velocity;
  if (config.momentum > 0.0) velocity.assign(slots, 0.0);
  std::vector<double> adam_m, adam_v;
  if (config.optimizer == TrainConfig::Optimizer::kAdam) {
    adam_m.assign(slots, 0.0);
    adam_v.assign(slots, 0.0);
  }

  Rng batch_rng(config.rng_seed + 1);
  std::vector<std::size_t> batch_indices(batch);
  TrainedModel model{std::move(params), {}, config};

  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t i = 0; i < batch; ++i) {
      batch_indices[i] = static_cast<std::size_t>(batch_rng.index(cascades.size()));
    }
    parallel_chunks(batch, workers, [&](int w, std::size_t lo, std::size_t hi) {
      auto& local = worker_grads[static_cast<std::size_t>(w)];
      std::fill(local.begin(), local.end(), 0.0);
      double loss = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        loss += grad_cascade(model.params, cascades[batch_indices[i]], config.eps, local,
                             config.clamp_lo);
      }
      worker_losses[static_cast<std::size_t>(w)] = loss;
    });

    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    const int used = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), batch));
    for (int w = 0; w < used; ++w) {
      batch_loss += worker_losses[static_cast<std::size_t>(w)];
      const auto& local = worker_grads[static_cast<std::size_t>(w)];
      for (std::size_t s = 0; s < slots; ++s) grad[s] += local[s];
    }
    batch_loss /= static_cast<double>(batch);
    if (!std::isfinite(batch_loss)) {
      throw ValidationError("train: non-finite loss at batch " + std::to_string(pass));
    }

    auto values = model.params.values();
    if (config.optimizer == TrainConfig::Optimizer::kAdam) {
      const double b1 = 0.9, b2 = 0.999, tiny = 1e-8;
      const double t = static_cast<double>(pass + 1);
      const double correction = std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t));
      for (std::size_t s = 0; s < slots; ++s) {
        const double gmean = grad[s] / static_cast<double>(batch);
        adam_m[s] = b1 * adam_m[s] + (1.0 - b1) * gmean;
        adam_v[s] = b2 * adam_v[s] + (1.0 - b2) * gmean * gmean;
        values[s] -= config.learning_rate * correction * adam_m[s] /
                     (std::sqrt(adam_v[s]) + tiny);
      }
    } else if (config.momentum > 0.0) {
      const double scale = config.learning_rate / static_cast<double>(batch);
      for (std::size_t s = 0; s < slots; ++s) {
        velocity[s] = config.momentum * velocity[s] - scale * grad[s];
        values[s] += velocity[s];
      }
    } else {
      const double scale = config.learning_rate / static_cast<double>(batch);
      for (std::size_t s = 0; s < slots; ++s) values[s] -= scale * grad[s];
    }
    model.params.project_nonnegative();
    model.loss_history.push_back(batch_loss);
  }
  return model;
}

std::vector<std::pair<int, int>> infer_edges(const ParamMatrix& params, double threshold) {
  if (threshold < 0.0) throw ValidationError("infer_edges: threshold must be >= 0");
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < params.node_count(); ++u) {
    params.for_row(u, [&](int v, std::size_t, double value) {
      if (u != v && value >= threshold && value > 0.0) edges.emplace_back(u, v);
    });
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<std::pair<int, int>> edge_set(const Graph& g) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(g.edge_count());
  for (const Edge& e : g.edges_by_source()) edges.emplace_back(e.src, e.dst);
  return edges;
}

F1Result f1_score(std::vector<std::pair<int, int>> predicted,
                  std::vector<std::pair<int, int>> truth) {
  std::sort(predicted.begin(), predicted.end());
  predicted.erase(std::unique(predicted.begin(), predicted.end()), predicted.end());
  std::sort(truth.begin(), truth.end());
  truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
  if (predicted.empty() && truth.empty()) return {1.0, 1.0, 1.0};

  std::vector<std::pair<int, int>> hits;
  std::set_intersection(predicted.begin(), predicted.end(), truth.begin(), truth.end(),
                        std::back_inserter(hits));
  const double tp = static_cast<double>(hits.size());
  F1Result r;
  r.precision = predicted.empty() ? 0.0 : tp / static_cast<double>(predicted.size());
  r.recall = truth.empty() ? 0.0 : tp / static_cast<double>(truth.size());
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

double eval_bce(const ParamMatrix& params, std::span<const Cascade> cascades, double eps,
                double clamp_lo, int workers) {
  if (cascades.empty()) throw ValidationError("eval_bce: empty cascade list");
  const int w = resolve_workers(workers);
  std::vector<double> partial(static_cast<std::size_t>(w), 0.0);
  parallel_chunks(cascades.size(), w, [&](int worker, std::size_t lo, std::size_t hi) {
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sum += cascade_loss(params, cascades[i], eps, clamp_lo);
    }
    partial[static_cast<std::size_t>(worker)] = sum;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(cascades.size());
}

void save_model(const TrainedModel& model, const std::string& path, double floor) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  const TrainConfig& c = model.config;
  out << "# trained rate matrix\n";
  out << "# eps=" << format_double(c.eps) << " batch=" << c.batch_size
      << " lr=" << format_double(c.learning_rate)
      << " passes=" << model.loss_history.size() << " seed=" << c.rng_seed
      << " sigma=" << format_double(c.init_sigma)
      << " momentum=" << format_double(c.momentum)
      << " threshold=" << format_double(c.threshold)
      << " floor=" << format_double(floor) << "\n";
  out << "n " << model.params.node_count() << "\n";
  for (int u = 0; u < model.params.node_count(); ++u) {
    model.params.for_row(u, [&](int v, std::size_t, double value) {
      const bool keep = floor > 0.0 ? value >= floor : value > 0.0;
      if (u != v && keep) {
        out << u << " " << v << " " << format_double(value) << "\n";
      }
    });
  }
  if (!out) throw IoError("failed while writing model file '" + path + "'");
}

void save_loss_history(std::span<const double> history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss history '" + path + "'");
  out << "batch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << i << "," << format_double(history[i]) << "\n";
  }
  if (!out) throw IoError("failed while writing loss history '" + path + "'");
}

}  // namespace diffnet
