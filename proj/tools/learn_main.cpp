// learn — CLI for the potential-learning pipeline.
//
//   learn run <config>            run one experiment configuration
//   learn preset <name>           run a preset (sweeps expand into members)
//   learn replay <run-dir> --x0   replay a stored reconstruction from a start
//   learn export-plots <run-dir>  collect plot-ready CSVs
//
// LEARN_OUTPUT_ROOT prefixes relative output directories.
// Exit codes: 0 ok, 2 config error, 3 solver non-convergence, 1 otherwise.

#include "rodlearn/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace rodlearn;

std::filesystem::path with_output_root(const std::string& dir) {
  std::filesystem::path p(dir);
  const char* root = std::getenv("LEARN_OUTPUT_ROOT");
  if (root && *root && p.is_relative()) return std::filesystem::path(root) / p;
  return p;
}

void print_report(const RunReport& r) {
  std::cout << "run: " << r.out_dir.string() << "\n"
            << "  grid nodes:        " << r.grid_size << "\n"
            << "  system rows:       " << r.system_rows << " (max " << r.max_row_nnz
            << " nonzeros/row, " << r.clamp_count << " clamped strains)\n"
            << "  solver:            " << r.solve.iterations << " iterations, primal "
            << r.solve.primal_residual << ", dual " << r.solve.dual_residual
            << ", objective " << r.solve.objective << "\n"
            << "  recon sup error:   " << r.recon.sup << "  (band [" << r.recon.band_lo
            << ", " << r.recon.band_hi << "])\n"
            << "  recon wL2 error:   " << r.recon.weighted_l2 << "\n"
            << "  criticality defect " << r.mean_criticality_defect << "\n";
  for (const auto& rep : r.replays)
    std::cout << "  replay " << rep.kind << " #" << rep.index << ": max|xhat-x| = "
              << rep.max_sup << ", support distance = " << rep.support_dist << "\n";
}

int dispatch(int argc, char** argv) {
  CLI::App app{"learn elastic chain potentials from quasi-static evolutions"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run a configuration file");
  run_cmd->add_option("config", config_path, "experiment config file")->required();

  std::string preset_name;
  auto* preset_cmd = app.add_subcommand("preset", "run a named preset");
  preset_cmd->add_option("name", preset_name, "preset name")->required();

  std::string replay_dir;
  std::vector<double> x0_values;
  auto* replay_cmd = app.add_subcommand("replay", "replay a stored run from a start");
  replay_cmd->add_option("run-dir", replay_dir, "run directory")->required();
  replay_cmd->add_option("--x0", x0_values, "initial state (d values)")
      ->required()
      ->delimiter(',');

  std::string plots_dir;
  auto* plots_cmd = app.add_subcommand("export-plots", "collect plot-ready CSVs");
  plots_cmd->add_option("run-dir", plots_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) {
    ExperimentConfig cfg = load_config(config_path);
    cfg.output_dir = with_output_root(cfg.output_dir).string();
    const auto res = run_pipeline(cfg, true);
    print_report(res.report);
  } else if (*preset_cmd) {
    (void)resolve_preset(preset_name);  // fail fast before creating directories
    const auto reports = run_preset(preset_name, with_output_root("."));
    for (const auto& r : reports) print_report(r);
  } else if (*replay_cmd) {
    Vector x0(static_cast<Eigen::Index>(x0_values.size()));
    for (std::size_t i = 0; i < x0_values.size(); ++i) x0(i) = x0_values[i];
    ReplayRecord rec;
    const auto path = replay_from_run_dir(replay_dir, x0, &rec);
    std::cout << "replay written to " << path.string() << "\n"
              << "  max|xhat-x| = " << rec.max_sup << ", L1-in-time = " << rec.l1_time
              << "\n";
  } else if (*plots_cmd) {
    const auto copied = export_plots(plots_dir);
    for (const auto& p : copied) std::cout << p.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const StageError& e) {
    // non-convergence inside the pipeline keeps its dedicated exit code
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.find("ADMM did not converge") != std::string::npos ? 3
           : e.stage == "config"                                   ? 2
                                                                    : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
