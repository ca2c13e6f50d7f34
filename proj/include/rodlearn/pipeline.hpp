// pipeline.hpp — end-to-end orchestration and artifact export
//
// sample -> integrate -> extract -> grid -> assemble -> solve -> (replay)
// -> export.  Every stage is timed; any stage error aborts the run with the
// stage name and leaves a `.failed` marker next to the partial artifacts.

#pragma once

#include "rodlearn/config.hpp"
#include "rodlearn/presets.hpp"
#include "rodlearn/replay.hpp"

#include <filesystem>

namespace rodlearn {

extern const char* const kVersion;

struct StageError : std::runtime_error {
  StageError(std::string stage_in, const std::string& msg)
      : std::runtime_error("stage '" + stage_in + "': " + msg), stage(std::move(stage_in)) {}
  std::string stage;
};

struct ReplayRecord {
  std::string kind;  // "train" | "ood"
  int index = 0;
  double max_sup = 0.0;
  double l1_time = 0.0;
  double support_dist = 0.0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  std::filesystem::path out_dir;

  int grid_size = 0;
  double window_halfwidth = 0.0;  // run-time R
  double sample_weight_total = 0.0;
  long system_rows = 0;
  int max_row_nnz = 0;
  int clamp_count = 0;

  SolveReport solve;
  ReconError recon;
  double mean_criticality_defect = 0.0;  // (1/N) sum_i sum_m Delta_m |grad E - u0|^2

  std::vector<ReplayRecord> replays;
  std::vector<StageTiming> timings;
};

// In-memory products of one pipeline run, for tests and diagnostics.
struct PipelineResult {
  RunReport report;
  ChainModel model;
  FlowParams flow;
  std::vector<std::pair<Vector, Vector>> initials;
  std::vector<Trajectory> trajectories;
  MeasurementSet measurements;
  StrainSamples samples;
  Grid grid;
  SparseLsq system;
  PwLinearFn aprime_hat;
  PwQuadratic a_hat;
  std::vector<Trajectory> replay_true;
  std::vector<Trajectory> replay_learned;
};

// Run the whole pipeline; artifacts are written into cfg.output_dir when
// export_artifacts is set.  Throws StageError; on export failures the
// partial artifacts stay behind with a `.failed` marker.
PipelineResult run_pipeline(const ExperimentConfig& cfg, bool export_artifacts = true);

// Resolve a preset by name and run each member into
// <out_root>/<preset>/<member>.  Returns one report per member.
std::vector<RunReport> run_preset(const std::string& name,
                                  const std::filesystem::path& out_root);

// Rebuild the learned model stored in a run directory and replay it against
// the true model from the given start; writes a paired-trajectory CSV into
// <run_dir>/replay/ and returns its path.
std::filesystem::path replay_from_run_dir(const std::filesystem::path& run_dir,
                                          const Vector& x0, ReplayRecord* record = nullptr);

// Collect the plot-ready CSV artifacts of a run into <run_dir>/plots/.
std::vector<std::filesystem::path> export_plots(const std::filesystem::path& run_dir);

}  // namespace rodlearn
