#include "diffnet/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/textio.hpp"

namespace diffnet {

Cascade::Cascade(int node_count, double horizon, std::vector<Activation> events)
    : n_(node_count), horizon_(horizon), events_(std::move(events)) {
  if (n_ < 1) throw ValidationError("cascade: node count must be >= 1");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ValidationError("cascade: horizon must be positive and finite");
  }
  std::sort(events_.begin(), events_.end(), [](const Activation& a, const Activation& b) {
    return a.time != b.time ? a.time < b.time : a.node < b.node;
  });
  bool has_seed = false;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Activation& e = events_[i];
    if (e.node < 0 || e.node >= n_) {
      throw ValidationError("cascade: node " + std::to_string(e.node) + " out of range");
    }
    if (!(e.time >= 0.0) || e.time > horizon_) {
      throw ValidationError("cascade: activation time " + format_double(e.time) +
                            " outside [0, " + format_double(horizon_) + "]");
    }
    if (e.time == 0.0) has_seed = true;
  }
  std::vector<Activation> by_node(events_);
  std::sort(by_node.begin(), by_node.end(),
            [](const Activation& a, const Activation& b) { return a.node < b.node; });
  for (std::size_t i = 1; i < by_node.size(); ++i) {
    if (by_node[i].node == by_node[i - 1].node) {
      throw ValidationError("cascade: node " + std::to_string(by_node[i].node) +
                            " activated twice");
    }
  }
  if (!has_seed) throw ValidationError("cascade: no seed (no node with time 0)");
}

std::vector<int> Cascade::seeds() const {
  std::vector<int> result;
  for (const Activation& e : events_) {
    if (e.time == 0.0) result.push_back(e.node);
    else break;  // events sorted by time
  }
  std::sort(result.begin(), result.end());
  return result;
}

double Cascade::time_of(int v) const {
  for (const Activation& e : events_) {
    if (e.node == v) return e.time;
  }
  return std::numeric_limits<double>::infinity();
}

Cascade Cascade::with_horizon(double new_horizon) const {
  std::vector<Activation> kept;
  kept.reserve(events_.size());
  for (const Activation& e : events_) {
    if (e.time <= new_horizon) kept.push_back(e);
  }
  return Cascade(n_, new_horizon, std::move(kept));
}

namespace {

struct Proposal {
  double time;
  int src;
  int dst;
};

struct ProposalAfter {
  bool operator()(const Proposal& a, const Proposal& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.src != b.src) return a.src > b.src;
    return a.dst > b.dst;
  }
};

}  // namespace

Cascade simulate_cascade(const Graph& g, std::span<const int> seeds, double horizon,
                         std::uint64_t rng_seed) {
  if (seeds.empty()) throw ValidationError("simulate: seed set is empty");
  if (!(horizon > 0.0)) throw ValidationError("simulate: horizon must be > 0");
  std::vector<int> seed_list(seeds.begin(), seeds.end());
  std::sort(seed_list.begin(), seed_list.end());
  seed_list.erase(std::unique(seed_list.begin(), seed_list.end()), seed_list.end());
  for (int s : seed_list) {
    if (s < 0 || s >= g.node_count()) {
      throw ValidationError("simulate: seed " + std::to_string(s) + " out of range");
    }
  }

  Rng rng(rng_seed);
  std::vector<std::uint8_t> activated(static_cast<std::size_t>(g.node_count()), 0);
  std::vector<Activation> events;
  std::priority_queue<Proposal, std::vector<Proposal>, ProposalAfter> queue;

  auto activate = [&](int node, double time) {
    activated[static_cast<std::size_t>(node)] = 1;
    events.push_back({node, time});
    for (const Edge& e : g.outgoing(node)) {
      const double proposal = time + rng.exponential(e.rate);
      if (proposal <= horizon && !activated[static_cast<std::size_t>(e.dst)]) {
        queue.push({proposal, e.src, e.dst});
      }
    }
  };

  for (int s : seed_list) activate(s, 0.0);
  while (!queue.empty()) {
    const Proposal p = queue.top();
    queue.pop();
    if (activated[static_cast<std::size_t>(p.dst)]) continue;
    activate(p.dst, p.time);
  }
  return Cascade(g.node_count(), horizon, std::move(events));
}

StateVector state_at(const Cascade& c, double t) {
  if (!(t >= 0.0) || t > c.horizon()) {
    throw ValidationError("state_at: time " + format_double(t) + " outside [0, " +
                          format_double(c.horizon()) + "]");
  }
  StateVector state;
  state.t = t;
  state.bits.assign(static_cast<std::size_t>(c.node_count()), 0);
  for (const Activation& e : c.events()) {
    if (e.time > t) break;
    state.bits[static_cast<std::size_t>(e.node)] = 1;
  }
  return state;
}

std::vector<Cascade> cascades_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cascade file '" + path + "'");
  std::string line;
  int line_no = 0;
  int n = -1;
  double horizon = 0.0;
  std::vector<Cascade> cascades;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (n < 0) {
      if (sv.substr(0, 5) != "meta ") {
        throw ValidationError(ctx + ": expected header 'meta n=<nodes> T=<horizon>'");
      }
      for (std::string_view field : split(sv.substr(5), ' ')) {
        field = trim(field);
        if (field.empty()) continue;
        if (field.substr(0, 2) == "n=") {
          n = static_cast<int>(parse_int(field.substr(2), ctx));
        } else if (field.substr(0, 2) == "T=") {
          horizon = parse_double(field.substr(2), ctx);
        } else {
          throw ValidationError(ctx + ": unknown meta field '" + std::string(field) + "'");
        }
      }
      if (n < 1 || !(horizon > 0.0)) {
        throw ValidationError(ctx + ": meta must define n >= 1 and T > 0");
      }
      continue;
    }
    std::vector<Activation> events;
    for (std::string_view pair : split(sv, ',')) {
      pair = trim(pair);
      const std::size_t colon = pair.find(':');
      if (colon == std::string_view::npos) {
        throw ValidationError(ctx + ": expected 'node:time', got '" + std::string(pair) + "'");
      }
      events.push_back({static_cast<int>(parse_int(pair.substr(0, colon), ctx)),
                        parse_double(pair.substr(colon + 1), ctx)});
    }
    try {
      cascades.emplace_back(n, horizon, std::move(events));
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }
  if (n < 0) throw ValidationError(path + ": missing 'meta' header");
  return cascades;
}

void cascades_save(std::span<const Cascade> cascades, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cascade file '" + path + "'");
  if (cascades.empty()) throw ValidationError("cascades_save: empty cascade list");
  const int n = cascades.front().node_count();
  const double horizon = cascades.front().horizon();
  for (const Cascade& c : cascades) {
    if (c.node_count() != n || c.horizon() != horizon) {
      throw ValidationError("cascades_save: cascades disagree on (n, horizon)");
    }
  }
  out << "meta n=" << n << " T=" << format_double(horizon) << "\n";
  for (const Cascade& c : cascades) {
    bool first = true;
    for (const Activation& e : c.events()) {
      if (!first) out << ",";
      out << e.node << ":" << format_double(e.time);
      first = false;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed while writing cascade file '" + path + "'");
}

CascadeSplit split_cascades(std::span<const Cascade> cascades,
                            std::array<double, 3> fractions, std::uint64_t rng_seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) throw ValidationError("split: fractions must be positive");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split: fractions must sum to 1");
  if (cascades.size() < 3) throw ValidationError("split: need at least 3 cascades");

  std::vector<std::size_t> order(cascades.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(rng_seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.index(i + 1)]);
  }

  const auto count = static_cast<double>(cascades.size());
  std::size_t n_train = static_cast<std::size_t>(std::llround(fractions[0] * count));
  std::size_t n_val = static_cast<std::size_t>(std::llround(fractions[1] * count));
  n_train = std::min(n_train, cascades.size());
  n_val = std::min(n_val, cascades.size() - n_train);

  CascadeSplit result;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Cascade& c = cascades[order[i]];
    if (i < n_train) result.train.push_back(c);
    else if (i < n_train + n_val) result.validation.push_back(c);
    else result.test.push_back(c);
  }
  return result;
}

}  // namespace diffnet
