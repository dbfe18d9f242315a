#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "diffnet/graph.hpp"
#include "diffnet/train.hpp"

namespace diffnet {

// Flat key=value experiment description; every command reads the subset of
// fields it needs. All randomness derives from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out_dir = "out";

  // Paths; empty entries fall back to defaults under out_dir.
  std::string graph_path;
  std::string cascades_path;
  std::string model_path;
  std::string truth_path;
  std::string queries_path;
  std::string gt_cascades_path;

  // generate
  KroneckerSpec kron;
  bool has_generation = false;
  std::int64_t gen_cascades = 0;
  double gen_horizon = 10.0;

  // train
  TrainConfig train;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  double model_floor = 0.0;

  // infer
  double infer_threshold = 0.01;
  std::vector<double> sweep;

  // estimate
  bool estimate_all_entries = false;
  double estimate_threshold = 0.01;

  // eval
  double eval_eps = 1.0;
  double eval_horizon = 0.0;

  std::string resolve(const std::string& explicit_path, const std::string& default_name) const;
};

ExperimentConfig load_config(const std::string& path);

// Exit codes: 0 success, 1 validation error, 2 I/O error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffnet
