// config.hpp — experiment configuration
//
// Flat `section.key = value` text files.  Loading fills documented defaults,
// rejects unknown keys, and reports the offending key and line on errors.
// Serialization is canonical: load -> save -> load is the identity.

#pragma once

#include "rodlearn/chain.hpp"
#include "rodlearn/flow.hpp"
#include "rodlearn/recon.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace rodlearn {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, std::string key_in = "", int line_in = 0)
      : std::runtime_error(msg), key(std::move(key_in)), line(line_in) {}
  std::string key;
  int line;
};

enum class MeanPolicy { Interpolate, Zeros, Explicit };

struct ExperimentConfig {
  // model
  int d = 10;
  double horizon = 1.0;
  PotentialKind potential_kind = PotentialKind::Quadratic;
  std::vector<double> potential_params = {1.0};
  BoundaryProfile f1 = BoundaryProfile::constant(0.0);
  BoundaryProfile f2 = BoundaryProfile::ramp(1.0, 1.0);
  // flow
  double epsilon = 1e-3;
  double step = 0.0;  // 0 = epsilon/5
  StepMethod method = StepMethod::ImplicitEuler;
  double newton_tol = 1e-11;
  int newton_max_iter = 50;
  // ensemble
  int experiments = 30;        // N
  int measurements = 200;      // N_e
  std::uint64_t seed = 1;
  double sigma = 0.1;
  MeanPolicy mean_policy = MeanPolicy::Interpolate;
  std::vector<double> mean_values;  // MeanPolicy::Explicit
  // recon
  int grid_nodes = 80;       // K; ignored when nodes_per_experiment > 0
  int nodes_per_experiment = 0;  // D(N) = nodes_per_experiment * N
  double m1 = 1000.0;
  double m2 = 1000.0;
  double rho = 1.0;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  int max_iter = 50000;
  DataMode data_mode = DataMode::Paper;
  double spacing_floor_rel = 1e-3;  // fraction of the sample range
  double band_lo = 0.1;
  double band_hi = 0.9;
  bool export_system = false;
  // replay
  bool replay_enabled = true;
  int replay_count = 1;      // replays started from the training law
  int replay_ood_count = 0;  // out-of-distribution replays
  double replay_ood_shift = 4.0;  // OOD mean shift, in units of sigma
  std::uint64_t replay_seed = 1234;
  // output
  std::string output_dir = "run-out";

  ChainModel chain_model() const;
  FlowParams flow_params() const;
  SolveConfig solve_config() const;
  Vector initial_mean() const;
  int resolved_grid_nodes() const;  // K or nodes_per_experiment * N
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace rodlearn
