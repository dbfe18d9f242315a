#include "diffnet/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>

#include "diffnet/cascade.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/influence.hpp"
#include "diffnet/parallel.hpp"
#include "diffnet/propagation.hpp"
#include "diffnet/textio.hpp"

namespace diffnet {

namespace {

std::vector<double> parse_double_list(std::string_view value, const std::string& ctx) {
  std::vector<double> out;
  for (std::string_view part : split(value, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(parse_double(part, ctx));
  }
  return out;
}

void apply_key(ExperimentConfig& cfg, std::string_view key, std::string_view value,
               const std::string& ctx) {
  const std::string v(trim(value));
  if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(v, ctx));
  else if (key == "workers") cfg.workers = static_cast<int>(parse_int(v, ctx));
  else if (key == "out") cfg.out_dir = v;
  else if (key == "graph") cfg.graph_path = v;
  else if (key == "cascades") cfg.cascades_path = v;
  else if (key == "model") cfg.model_path = v;
  else if (key == "truth") cfg.truth_path = v;
  else if (key == "queries") cfg.queries_path = v;
  else if (key == "gt_cascades") cfg.gt_cascades_path = v;
  else if (key == "gen.matrix") {
    const std::vector<double> m = parse_double_list(v, ctx);
    if (m.size() != 4) throw ValidationError(ctx + ": gen.matrix needs 4 comma-separated values");
    std::copy(m.begin(), m.end(), cfg.kron.seed.begin());
    cfg.has_generation = true;
  } else if (key == "gen.power") {
    cfg.kron.power = static_cast<int>(parse_int(v, ctx));
    cfg.has_generation = true;
  } else if (key == "gen.edges") {
    cfg.kron.target_edges = parse_int(v, ctx);
    cfg.has_generation = true;
  } else if (key == "gen.rate_low") cfg.kron.rate_low = parse_double(v, ctx);
  else if (key == "gen.rate_high") cfg.kron.rate_high = parse_double(v, ctx);
  else if (key == "gen.cascades") cfg.gen_cascades = parse_int(v, ctx);
  else if (key == "gen.horizon") cfg.gen_horizon = parse_double(v, ctx);
  else if (key == "train.eps") cfg.train.eps = parse_double(v, ctx);
  else if (key == "train.horizon") cfg.train.horizon = parse_double(v, ctx);
  else if (key == "train.batch") cfg.train.batch_size = static_cast<int>(parse_int(v, ctx));
  else if (key == "train.lr") cfg.train.learning_rate = parse_double(v, ctx);
  else if (key == "train.passes") cfg.train.passes = static_cast<int>(parse_int(v, ctx));
  else if (key == "train.sigma") cfg.train.init_sigma = parse_double(v, ctx);
  else if (key == "train.momentum") cfg.train.momentum = parse_double(v, ctx);
  else if (key == "train.clamp") cfg.train.clamp_lo = parse_double(v, ctx);
  else if (key == "train.threshold") cfg.train.threshold = parse_double(v, ctx);
  else if (key == "train.storage") {
    if (v == "auto") cfg.train.storage = TrainConfig::Storage::kAuto;
    else if (v == "dense") cfg.train.storage = TrainConfig::Storage::kDense;
    else if (v == "candidates") cfg.train.storage = TrainConfig::Storage::kCandidates;
    else throw ValidationError(ctx + ": train.storage must be auto|dense|candidates");
  } else if (key == "train.optimizer") {
    if (v == "sgd") cfg.train.optimizer = TrainConfig::Optimizer::kSgd;
    else if (v == "adam") cfg.train.optimizer = TrainConfig::Optimizer::kAdam;
    else throw ValidationError(ctx + ": train.optimizer must be sgd|adam");
  } else if (key == "train.split") {
    const std::vector<double> f = parse_double_list(v, ctx);
    if (f.size() != 3) throw ValidationError(ctx + ": train.split needs 3 fractions");
    std::copy(f.begin(), f.end(), cfg.split.begin());
  } else if (key == "model.floor") cfg.model_floor = parse_double(v, ctx);
  else if (key == "infer.threshold") cfg.infer_threshold = parse_double(v, ctx);
  else if (key == "infer.sweep") cfg.sweep = parse_double_list(v, ctx);
  else if (key == "est.threshold") cfg.estimate_threshold = parse_double(v, ctx);
  else if (key == "est.all") {
    if (v == "true" || v == "1") cfg.estimate_all_entries = true;
    else if (v == "false" || v == "0") cfg.estimate_all_entries = false;
    else throw ValidationError(ctx + ": est.all must be true|false");
  } else if (key == "eval.eps") cfg.eval_eps = parse_double(v, ctx);
  else if (key == "eval.horizon") cfg.eval_horizon = parse_double(v, ctx);
  else throw ValidationError(ctx + ": unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string ExperimentConfig::resolve(const std::string& explicit_path,
                                      const std::string& default_name) const {
  if (!explicit_path.empty()) return explicit_path;
  return (std::filesystem::path(out_dir) / default_name).string();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(ctx + ": expected 'key=value'");
    }
    apply_key(cfg, trim(sv.substr(0, eq)), sv.substr(eq + 1), ctx);
  }
  return cfg;
}

namespace {

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "'");
}

int cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.has_generation) {
    throw ValidationError("generate: config has no gen.* block");
  }
  ensure_out_dir(cfg);
  const Graph graph = kronecker_generate(cfg.kron, cfg.seed);
  const std::string graph_path = cfg.resolve(cfg.graph_path, "graph.txt");
  graph_save(graph, graph_path);
  out << "graph: n=" << graph.node_count() << " m=" << graph.edge_count() << " -> "
      << graph_path << "\n";

  if (cfg.gen_cascades > 0) {
    const std::vector<int> sources = graph.nodes_with_outgoing();
    if (sources.empty()) {
      throw ValidationError("generate: graph has no node with outgoing edges");
    }
    std::vector<Cascade> cascades;
    cascades.reserve(static_cast<std::size_t>(cfg.gen_cascades));
    for (std::int64_t i = 0; i < cfg.gen_cascades; ++i) {
      cascades.push_back(Cascade(1, 1.0, {{0, 0.0}}));  // placeholder slot
    }
    parallel_chunks(static_cast<std::size_t>(cfg.gen_cascades), cfg.workers,
                    [&](int, std::size_t lo, std::size_t hi) {
                      for (std::size_t i = lo; i < hi; ++i) {
                        // Seed i derives from the global seed + cascade index;
                        // the first draw picks the source.
                        const std::uint64_t s = cfg.seed + 1 + static_cast<std::uint64_t>(i);
                        Rng pick(s);
                        const int source =
                            sources[static_cast<std::size_t>(pick.index(sources.size()))];
                        const std::array<int, 1> seed_set{source};
                        cascades[i] = simulate_cascade(graph, seed_set, cfg.gen_horizon,
                                                       pick.next_bits());
                      }
                    });
    const std::string cascades_path = cfg.resolve(cfg.cascades_path, "cascades.txt");
    cascades_save(cascades, cascades_path);
    out << "cascades: " << cfg.gen_cascades << " T=" << format_double(cfg.gen_horizon)
        << " -> " << cascades_path << "\n";
  }
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_out_dir(cfg);
  const std::string cascades_path = cfg.resolve(cfg.cascades_path, "cascades.txt");
  const std::vector<Cascade> all = cascades_load(cascades_path);
  const CascadeSplit splits = split_cascades(all, cfg.split, cfg.seed);

  TrainConfig tc = cfg.train;
  tc.rng_seed = cfg.seed + 1;
  tc.workers = cfg.workers;
  const TrainedModel model = train(splits.train, tc);

  const double bce_train = eval_bce(model.params, splits.train, tc.eps, tc.clamp_lo, cfg.workers);
  const double bce_val = eval_bce(model.params, splits.validation, tc.eps, tc.clamp_lo, cfg.workers);
  const double bce_test = eval_bce(model.params, splits.test, tc.eps, tc.clamp_lo, cfg.workers);

  const std::string model_path = cfg.resolve(cfg.model_path, "model.txt");
  save_model(model, model_path, cfg.model_floor);
  const std::string loss_path = cfg.resolve("", "loss.csv");
  save_loss_history(model.loss_history, loss_path);

  std::string report;
  report += "cascades=" + std::to_string(all.size());
  report += " split=" + std::to_string(splits.train.size()) + "/" +
            std::to_string(splits.validation.size()) + "/" + std::to_string(splits.test.size());
  report += "\nbce_train=" + format_double(bce_train);
  report += "\nbce_val=" + format_double(bce_val);
  report += "\nbce_test=" + format_double(bce_test);
  report += "\nmodel=" + model_path + "\nloss_csv=" + loss_path + "\n";
  out << report;
  const std::string report_path = cfg.resolve("", "report.txt");
  std::ofstream rf(report_path);
  if (!rf) throw IoError("cannot write report '" + report_path + "'");
  rf << report;
  return 0;
}

int cmd_infer(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_out_dir(cfg);
  const std::string model_path = cfg.resolve(cfg.model_path, "model.txt");
  const Graph model_graph = graph_load(model_path);
  const ParamMatrix params = ParamMatrix::from_graph(model_graph);

  const std::vector<std::pair<int, int>> predicted = infer_edges(params, cfg.infer_threshold);
  const std::string edges_path = cfg.resolve("", "edges.txt");
  {
    std::vector<Edge> kept;
    kept.reserve(predicted.size());
    for (const auto& [u, v] : predicted) kept.push_back({u, v, params.at(u, v)});
    graph_save(Graph(params.node_count(), std::move(kept)), edges_path);
  }
  out << "edges: " << predicted.size() << " at threshold "
      << format_double(cfg.infer_threshold) << " -> " << edges_path << "\n";

  if (!cfg.truth_path.empty()) {
    const Graph truth = graph_load(cfg.truth_path);
    const F1Result r = f1_score(predicted, edge_set(truth));
    out << "precision=" << format_double(r.precision) << " recall=" << format_double(r.recall)
        << " f1=" << format_double(r.f1) << "\n";
    if (!cfg.sweep.empty()) {
      const std::string sweep_path = cfg.resolve("", "sweep.csv");
      std::ofstream sf(sweep_path);
      if (!sf) throw IoError("cannot write sweep '" + sweep_path + "'");
      sf << "threshold,precision,recall,f1\n";
      for (double t : cfg.sweep) {
        const F1Result s = f1_score(infer_edges(params, t), edge_set(truth));
        sf << format_double(t) << "," << format_double(s.precision) << ","
           << format_double(s.recall) << "," << format_double(s.f1) << "\n";
      }
      out << "sweep: " << cfg.sweep.size() << " thresholds -> " << sweep_path << "\n";
    }
  } else if (!cfg.sweep.empty()) {
    throw ValidationError("infer: sweep requires a truth graph (truth=...)");
  }
  return 0;
}

std::vector<InfluenceQuery> load_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query file '" + path + "'");
  std::vector<InfluenceQuery> queries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    InfluenceQuery q;
    bool has_seeds = false, has_horizon = false, has_eta = false, has_delta = false;
    for (std::string_view field : split(sv, ' ')) {
      field = trim(field);
      if (field.empty()) continue;
      if (field.substr(0, 2) == "S=") {
        for (std::string_view id : split(field.substr(2), ',')) {
          q.seeds.push_back(static_cast<int>(parse_int(id, ctx)));
        }
        has_seeds = true;
      } else if (field.substr(0, 2) == "T=") {
        q.horizon = parse_double(field.substr(2), ctx);
        has_horizon = true;
      } else if (field.substr(0, 4) == "eta=") {
        q.eta = parse_double(field.substr(4), ctx);
        has_eta = true;
      } else if (field.substr(0, 6) == "delta=") {
        q.delta = parse_double(field.substr(6), ctx);
        has_delta = true;
      } else {
        throw ValidationError(ctx + ": unknown query field '" + std::string(field) + "'");
      }
    }
    if (!has_seeds || !has_horizon || !has_eta || !has_delta) {
      throw ValidationError(ctx + ": query needs S=, T=, eta=, delta=");
    }
    queries.push_back(std::move(q));
  }
  if (queries.empty()) throw ValidationError(path + ": no queries");
  return queries;
}

int cmd_estimate(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_out_dir(cfg);
  // Rates come from the trained model when one is given, else from the graph
  // file; learned entries are thresholded unless est.all is set.
  std::string source_path;
  Graph rates = [&] {
    if (!cfg.model_path.empty()) {
      source_path = cfg.model_path;
      Graph loaded = graph_load(cfg.model_path);
      if (cfg.estimate_all_entries) return loaded;
      return ParamMatrix::from_graph(loaded).to_graph(cfg.estimate_threshold);
    }
    source_path = cfg.resolve(cfg.graph_path, "graph.txt");
    return graph_load(source_path);
  }();

  const std::vector<InfluenceQuery> queries =
      load_queries(cfg.resolve(cfg.queries_path, "queries.txt"));

  std::vector<Cascade> gt_cascades;
  const bool with_gt = !cfg.gt_cascades_path.empty();
  if (with_gt) gt_cascades = cascades_load(cfg.gt_cascades_path);

  const std::string csv_path = cfg.resolve("", "spread.csv");
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write spread CSV '" + csv_path + "'");
  csv << (with_gt ? "query_index,theta,mean_spread,ground_truth,abs_error\n"
                  : "query_index,theta,mean_spread\n");

  std::vector<double> estimates, truths;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    InfluenceQuery q = queries[i];
    q.rng_seed = Rng::mix(cfg.seed, i);
    const InfluenceEstimate est = estimate_influence(rates, q, cfg.workers);
    csv << i << "," << est.theta << "," << format_double(est.mean_spread);
    if (with_gt) {
      const SpreadGroundTruth gt =
          ground_truth_spread(gt_cascades, q.seeds, 1000, Rng::mix(cfg.seed, i + queries.size()));
      estimates.push_back(est.mean_spread);
      truths.push_back(gt.mean_spread);
      csv << "," << format_double(gt.mean_spread) << ","
          << format_double(std::abs(est.mean_spread - gt.mean_spread));
    }
    csv << "\n";
  }
  out << "spread: " << queries.size() << " queries on " << source_path << " -> " << csv_path
      << "\n";
  if (with_gt) out << "mae=" << format_double(ie_mae(estimates, truths)) << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& out) {
  const std::string model_path = cfg.resolve(cfg.model_path, "model.txt");
  const ParamMatrix params = ParamMatrix::from_graph(graph_load(model_path));
  std::vector<Cascade> cascades = cascades_load(cfg.resolve(cfg.cascades_path, "cascades.txt"));
  if (cfg.eval_horizon > 0.0) {
    for (Cascade& c : cascades) c = c.with_horizon(cfg.eval_horizon);
  }
  const double bce = eval_bce(params, cascades, cfg.eval_eps, kDefaultClampLo, cfg.workers);
  out << "bce=" << format_double(bce) << "\n";
  return 0;
}

struct ErrorBoundArgs {
  double eps = -1.0;
  double gamma = -1.0;
  double eps_err = -1.0;
  double c = -1.0;
  double t_star = -1.0;
};

int cmd_errorbound(const ErrorBoundArgs& args, std::ostream& out) {
  const bool local_mode = args.gamma >= 0.0;
  const bool window_mode = args.t_star >= 0.0;
  if (local_mode == window_mode) {
    throw ValidationError(
        "errorbound: use either --eps with --gamma, or --eps-err --c --t-star");
  }
  if (local_mode) {
    if (args.eps < 0.0) throw ValidationError("errorbound: --eps required with --gamma");
    out << "xi=" << format_double(local_error(args.gamma, args.eps)) << "\n";
  } else {
    if (args.eps_err < 0.0 || args.c < 0.0) {
      throw ValidationError("errorbound: --eps-err and --c required with --t-star");
    }
    const auto [lower, upper] = time_window_bound(args.eps_err, args.c, args.t_star);
    out << "lower=" << format_double(lower) << " upper=" << format_double(upper) << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"continuous-time diffusion toolkit: simulation, network inference, influence estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::int64_t seed_override = -1;
  int workers_override = -1;
  std::string out_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file (key=value lines)");
    sub->add_option("--seed", seed_override, "override the global seed");
    sub->add_option("--workers", workers_override, "cap worker threads (0 = all cores)");
    sub->add_option("--out", out_override, "override the output directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "generate a synthetic network and cascades");
  add_common(generate);
  CLI::App* train_cmd = app.add_subcommand("train", "fit the rate matrix to cascades");
  add_common(train_cmd);
  CLI::App* infer = app.add_subcommand("infer", "threshold a model into an edge list");
  add_common(infer);
  CLI::App* estimate = app.add_subcommand("estimate", "estimate seed-set spread");
  add_common(estimate);
  CLI::App* eval_cmd = app.add_subcommand("eval", "mean BCE of a model on cascades");
  add_common(eval_cmd);

  ErrorBoundArgs eb;
  CLI::App* errorbound = app.add_subcommand("errorbound", "closed-form error formulas");
  errorbound->add_option("--eps", eb.eps, "step width for the local error");
  errorbound->add_option("--gamma", eb.gamma, "conditional rate for the local error");
  errorbound->add_option("--eps-err", eb.eps_err, "rate-estimation error bound");
  errorbound->add_option("--c", eb.c, "min true rate as a multiple of --eps-err");
  errorbound->add_option("--t-star", eb.t_star, "reference time window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (errorbound->parsed()) return cmd_errorbound(eb, out);

    if (config_path.empty()) throw ValidationError("--config is required");
    ExperimentConfig cfg = load_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (workers_override >= 0) cfg.workers = workers_override;
    if (!out_override.empty()) cfg.out_dir = out_override;

    if (generate->parsed()) return cmd_generate(cfg, out);
    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (infer->parsed()) return cmd_infer(cfg, out);
    if (estimate->parsed()) return cmd_estimate(cfg, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out);
    throw ValidationError("no subcommand given");
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace diffnet
