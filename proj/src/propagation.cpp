#include "diffnet/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "diffnet/errors.hpp"
#include "diffnet/textio.hpp"

namespace diffnet {

namespace {

struct StepGrid {
  int full_steps = 0;
  double eps = 0.0;
  double tail = 0.0;  // 0 when T is a multiple of eps

  int total_steps() const { return full_steps + (tail > 0.0 ? 1 : 0); }
};

StepGrid make_grid(double horizon, double eps) {
  if (!(eps > 0.0)) throw ValidationError("propagation: eps must be > 0");
  if (eps > horizon) {
    throw ValidationError("propagation: eps " + format_double(eps) +
                          " exceeds horizon " + format_double(horizon));
  }
  StepGrid grid;
  grid.eps = eps;
  grid.full_steps = static_cast<int>(std::floor(horizon / eps + 1e-9));
  grid.tail = horizon - static_cast<double>(grid.full_steps) * eps;
  if (grid.tail <= horizon * 1e-12) grid.tail = 0.0;
  return grid;
}

// Incremental replay of a cascade on the step grid. At each step exposes the
// active-at-start mask, the unmasked accumulated rate vector (A^T * active),
// and the nodes activating within the step. Rows are added to the rate
// vector once, when their source activates.
class Walker {
 public:
  Walker(const ParamMatrix& params, const Cascade& cascade, WalkStats* stats)
      : params_(params),
        n_(params.node_count()),
        events_(cascade.events()),
        stats_(stats),
        active_(static_cast<std::size_t>(n_), 0),
        pending_(static_cast<std::size_t>(n_), 0),
        rate_raw_(static_cast<std::size_t>(n_), 0.0) {
    if (cascade.node_count() != n_) {
      throw ValidationError("propagation: cascade has " + std::to_string(cascade.node_count()) +
                            " nodes but params have " + std::to_string(n_));
    }
    commit_until(0.0);
  }

  // Marks nodes with activation time in (current, t_end] as pending targets.
  void stage_targets(double t_end) {
    pending_list_.clear();
    for (std::size_t i = next_event_; i < events_.size(); ++i) {
      if (events_[i].time > t_end) break;
      pending_[static_cast<std::size_t>(events_[i].node)] = 1;
      pending_list_.push_back(events_[i].node);
    }
  }

  // Folds the staged activations into the active set and the rate vector.
  void commit_staged() {
    for (int node : pending_list_) {
      pending_[static_cast<std::size_t>(node)] = 0;
      activate(node);
    }
    next_event_ += pending_list_.size();
    pending_list_.clear();
  }

  bool active(int v) const { return active_[static_cast<std::size_t>(v)] != 0; }
  bool target(int v) const { return pending_[static_cast<std::size_t>(v)] != 0; }
  double rate_raw(int v) const { return rate_raw_[static_cast<std::size_t>(v)]; }
  int node_count() const { return n_; }
  std::span<const int> active_nodes() const { return active_list_; }

  void count_node_scan() {
    if (stats_) stats_->node_scans += static_cast<std::uint64_t>(n_);
  }

  StateVector target_state(double t_end) const {
    StateVector s;
    s.t = t_end;
    s.bits = active_;
    for (int node : pending_list_) s.bits[static_cast<std::size_t>(node)] = 1;
    return s;
  }

 private:
  void activate(int node) {
    active_[static_cast<std::size_t>(node)] = 1;
    active_list_.push_back(node);
    params_.for_row(node, [&](int v, std::size_t, double value) {
      rate_raw_[static_cast<std::size_t>(v)] += value;
    });
    if (stats_) stats_->edge_scans += params_.row_length(node);
  }

  void commit_until(double t) {
    while (next_event_ < events_.size() && events_[next_event_].time <= t) {
      activate(events_[next_event_].node);
      ++next_event_;
    }
  }

  const ParamMatrix& params_;
  int n_;
  std::span<const Activation> events_;
  WalkStats* stats_;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint8_t> pending_;
  std::vector<double> rate_raw_;
  std::vector<int> active_list_;
  std::vector<int> pending_list_;
  std::size_t next_event_ = 0;
};

double clamp_prob(double q, double clamp_lo) {
  return std::min(std::max(q, clamp_lo), 1.0 - clamp_lo);
}

// Loss of one step over nodes inactive at its start; iteration order (node
// ascending) is shared by every path so losses agree bit-for-bit.
double walk_step_loss(const Walker& w, double width, double clamp_lo) {
  double loss = 0.0;
  for (int v = 0; v < w.node_count(); ++v) {
    if (w.active(v)) continue;
    const double q = clamp_prob(width * w.rate_raw(v), clamp_lo);
    loss += w.target(v) ? -std::log(q) : -std::log1p(-q);
  }
  return loss;
}

template <class PerStep>
double walk_cascade(const ParamMatrix& params, const Cascade& cascade, double eps,
                    double clamp_lo, WalkStats* stats, PerStep&& per_step) {
  const StepGrid grid = make_grid(cascade.horizon(), eps);
  Walker walker(params, cascade, stats);
  double total = 0.0;
  for (int k = 1; k <= grid.total_steps(); ++k) {
    const bool tail = k > grid.full_steps;
    const double width = tail ? grid.tail : grid.eps;
    const double t_start = static_cast<double>(k - 1) * grid.eps;
    const double t_end = tail ? cascade.horizon() : static_cast<double>(k) * grid.eps;
    walker.stage_targets(t_end);
    walker.count_node_scan();
    const double step_loss = walk_step_loss(walker, width, clamp_lo);
    total += step_loss;
    per_step(walker, k, width, t_start, t_end, step_loss);
    walker.commit_staged();
  }
  return total;
}

}  // namespace

std::vector<double> conditional_rate(const ParamMatrix& params, const StateVector& state) {
  const int n = params.node_count();
  if (state.bits.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("conditional_rate: state length " + std::to_string(state.bits.size()) +
                          " does not match n=" + std::to_string(n));
  }
  std::vector<double> rates(static_cast<std::size_t>(n), 0.0);
  for (int u = 0; u < n; ++u) {
    if (!state.active(u)) continue;
    params.for_row(u, [&](int v, std::size_t, double value) {
      if (!state.active(v)) rates[static_cast<std::size_t>(v)] += value;
    });
  }
  return rates;
}

std::vector<double> euler_step(const StateVector& state, std::span<const double> rates,
                               double eps, double clamp_lo) {
  if (!(eps > 0.0)) throw ValidationError("euler_step: eps must be > 0");
  if (rates.size() != state.bits.size()) {
    throw ValidationError("euler_step: rate vector length mismatch");
  }
  std::vector<double> predicted(rates.size());
  for (std::size_t v = 0; v < rates.size(); ++v) {
    if (!std::isfinite(rates[v])) throw ValidationError("euler_step: non-finite rate");
    const double phi = state.bits[v] ? 1.0 : 0.0;
    predicted[v] = clamp_prob(phi + eps * rates[v], clamp_lo);
  }
  return predicted;
}

double bce_step_loss(std::span<const double> predicted, const StateVector& target,
                     const StateVector& start) {
  if (predicted.size() != target.bits.size() || predicted.size() != start.bits.size()) {
    throw ValidationError("bce_step_loss: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t v = 0; v < predicted.size(); ++v) {
    if (start.bits[v]) continue;
    const double q = predicted[v];
    if (!(q > 0.0) || !(q < 1.0)) {
      throw ValidationError("bce_step_loss: prediction " + format_double(q) +
                            " outside (0,1); clamping invariant violated");
    }
    loss += target.bits[v] ? -std::log(q) : -std::log1p(-q);
  }
  return loss;
}

ForwardResult forward_cascade(const ParamMatrix& params, const Cascade& cascade, double eps,
                              double clamp_lo, WalkStats* stats) {
  ForwardResult result;
  result.loss = walk_cascade(
      params, cascade, eps, clamp_lo, stats,
      [&](const Walker& w, int k, double width, double /*t_start*/, double t_end, double step_loss) {
        StepRecord rec;
        rec.k = k;
        rec.width = width;
        rec.loss = step_loss;
        rec.target = w.target_state(t_end);
        rec.rates.resize(static_cast<std::size_t>(w.node_count()));
        rec.predicted.resize(static_cast<std::size_t>(w.node_count()));
        for (int v = 0; v < w.node_count(); ++v) {
          if (w.active(v)) {
            rec.rates[static_cast<std::size_t>(v)] = 0.0;
            rec.predicted[static_cast<std::size_t>(v)] = 1.0 - clamp_lo;
          } else {
            rec.rates[static_cast<std::size_t>(v)] = w.rate_raw(v);
            rec.predicted[static_cast<std::size_t>(v)] =
                clamp_prob(width * w.rate_raw(v), clamp_lo);
          }
        }
        result.steps.push_back(std::move(rec));
      });
  return result;
}

double cascade_loss(const ParamMatrix& params, const Cascade& cascade, double eps,
                    double clamp_lo, WalkStats* stats) {
  return walk_cascade(params, cascade, eps, clamp_lo, stats,
                      [](const Walker&, int, double, double, double, double) {});
}

double grad_cascade(const ParamMatrix& params, const Cascade& cascade, double eps,
                    std::span<double> grad, double clamp_lo) {
  if (grad.size() != params.entry_count()) {
    throw ValidationError("grad_cascade: gradient buffer size mismatch");
  }
  // coef[v] = d(step loss)/d(q_v) * width for inactive v with an unclamped
  // prediction; kept zero for active nodes so stale values never leak.
  std::vector<double> coef(static_cast<std::size_t>(params.node_count()), 0.0);
  return walk_cascade(
      params, cascade, eps, clamp_lo, nullptr,
      [&](const Walker& w, int, double width, double, double, double) {
        for (int v = 0; v < w.node_count(); ++v) {
          if (w.active(v)) continue;
          const double q_raw = width * w.rate_raw(v);
          if (q_raw > clamp_lo && q_raw < 1.0 - clamp_lo) {
            coef[static_cast<std::size_t>(v)] =
                width * (w.target(v) ? -1.0 / q_raw : 1.0 / (1.0 - q_raw));
          } else {
            coef[static_cast<std::size_t>(v)] = 0.0;
          }
        }
        for (int u : w.active_nodes()) {
          params.for_row(u, [&](int v, std::size_t slot, double) {
            const double c = coef[static_cast<std::size_t>(v)];
            if (c != 0.0) grad[slot] += c;
          });
        }
        // Nodes activating this step become active; zero their coefficients
        // so the next step's scan cannot pick them up.
        for (int v = 0; v < w.node_count(); ++v) {
          if (w.target(v)) coef[static_cast<std::size_t>(v)] = 0.0;
        }
      });
}

double local_error(double rate, double eps) {
  if (rate < 0.0 || eps < 0.0) throw ValidationError("local_error: inputs must be >= 0");
  const double x = eps * rate;
  return x + std::expm1(-x);
}

std::vector<double> local_error(std::span<const double> rates, double eps) {
  std::vector<double> out(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) out[i] = local_error(rates[i], eps);
  return out;
}

}  // namespace diffnet
