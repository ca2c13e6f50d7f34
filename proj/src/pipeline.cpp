#include "rodlearn/pipeline.hpp"

#include "rodlearn/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>

namespace rodlearn {

const char* const kVersion = "rodlearn 0.1.0";

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

  template <typename F>
  auto run(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record(stage, t0);
      } else {
        auto out = f();
        record(stage, t0);
        return out;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    const auto t1 = std::chrono::steady_clock::now();
    sink_.push_back({stage, std::chrono::duration<double>(t1 - t0).count()});
  }

  std::vector<StageTiming>& sink_;
};

std::string index_name(const char* prefix, int i, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, i, suffix);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void export_trajectory_csv(const fs::path& path, const Trajectory& traj,
                           const std::vector<double>& times) {
  std::string csv = "t";
  const int d = static_cast<int>(traj.states.front().size());
  for (int i = 1; i <= d; ++i) csv += ",x_" + std::to_string(i);
  csv += "\n";
  for (double t : times) {
    const Vector x = traj.state_at(t);
    csv += fmt_double(t);
    for (int i = 0; i < d; ++i) csv += "," + fmt_double(x(i));
    csv += "\n";
  }
  write_text(path, csv);
}

void export_paired_csv(const fs::path& path, const Trajectory& truth,
                       const Trajectory& learned) {
  const int d = static_cast<int>(truth.states.front().size());
  std::string csv = "t";
  for (int i = 1; i <= d; ++i) csv += ",x_" + std::to_string(i);
  for (int i = 1; i <= d; ++i) csv += ",xhat_" + std::to_string(i);
  csv += "\n";
  for (std::size_t k = 0; k < truth.times.size(); ++k) {
    const double t = truth.times[k];
    const Vector& x = truth.states[k];
    const Vector xh = learned.state_at(t);
    csv += fmt_double(t);
    for (int i = 0; i < d; ++i) csv += "," + fmt_double(x(i));
    for (int i = 0; i < d; ++i) csv += "," + fmt_double(xh(i));
    csv += "\n";
  }
  write_text(path, csv);
}

json config_json(const ExperimentConfig& cfg) {
  // the canonical echo plus the parameter table the figures publish
  json j;
  j["echo"] = serialize_config(cfg);
  j["table"] = {{"d", cfg.d},
                {"T", cfg.horizon},
                {"M1", cfg.m1},
                {"M2", cfg.m2},
                {"Ne", cfg.measurements},
                {"N", cfg.experiments},
                {"D(N)", cfg.resolved_grid_nodes()}};
  j["epsilon"] = cfg.epsilon;
  j["seed"] = cfg.seed;
  j["replay_seed"] = cfg.replay_seed;
  return j;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, bool export_artifacts) {
  PipelineResult res;
  res.report.config = cfg;
  res.report.out_dir = fs::path(cfg.output_dir);
  StageClock clock(res.report.timings);

  const fs::path out = res.report.out_dir;
  auto guard_export = [&](const std::string& stage, auto&& fn) {
    if (!export_artifacts) return;
    try {
      fn();
    } catch (const std::exception& e) {
      try {
        write_text(out / ".failed", stage + ": " + e.what() + "\n");
      } catch (...) {
      }
      throw StageError(stage, e.what());
    }
  };

  try {
    res.model = cfg.chain_model();
    res.flow = cfg.flow_params();

    if (export_artifacts) {
      fs::create_directories(out);
      fs::create_directories(out / "trajectories");
      if (cfg.replay_enabled) fs::create_directories(out / "replay");
      save_config(cfg, out / "config.ini");
    }

    // sample -------------------------------------------------------------
    InitialLaw law{cfg.initial_mean(), cfg.sigma, cfg.seed};
    res.initials = clock.run("sample", [&] {
      return sample_initial(res.model, law, cfg.experiments);
    });

    // integrate ----------------------------------------------------------
    res.trajectories = clock.run("integrate", [&] {
      return run_experiments(res.model, res.flow, res.initials);
    });

    // extract ------------------------------------------------------------
    clock.run("extract", [&] {
      const auto times = measurement_times(res.trajectories.front(), cfg.measurements);
      auto [ms, pool] = extract_strains(res.model, res.trajectories, times);
      res.measurements = std::move(ms);
      res.samples = std::move(pool);
    });
    res.report.window_halfwidth = res.samples.window_halfwidth();
    res.report.sample_weight_total = res.samples.total_weight();
    res.model.strain_halfwidth = res.report.window_halfwidth;
    {
      // criticality defect at the measurement times
      double defect = 0.0;
      const int n = static_cast<int>(res.measurements.strains.size());
      for (int i = 0; i < n; ++i)
        for (std::size_t m = 0; m < res.measurements.times.size(); ++m) {
          Vector ap(res.model.d + 1);
          const Vector& z = res.measurements.strains[i][m];
          for (int j = 0; j <= res.model.d; ++j) ap(j) = res.model.potential.slope(z(j));
          defect += res.measurements.weights[m] *
                    (dbar_transpose(ap) - res.measurements.controls[i]).squaredNorm();
        }
      res.report.mean_criticality_defect = defect / n;
    }

    // grid ---------------------------------------------------------------
    res.grid = clock.run("grid", [&] {
      const double floor =
          cfg.spacing_floor_rel * (res.samples.max_value() - res.samples.min_value());
      return adaptive_grid(res.samples, cfg.resolved_grid_nodes(), floor);
    });
    res.report.grid_size = res.grid.size();

    // assemble -----------------------------------------------------------
    res.system = clock.run("assemble", [&] {
      return assemble(res.model, res.measurements, res.grid, cfg.data_mode);
    });
    res.report.system_rows = res.system.rows;
    res.report.max_row_nnz = res.system.max_row_nnz();
    res.report.clamp_count = res.system.clamp_count;

    // solve --------------------------------------------------------------
    res.aprime_hat = clock.run("solve", [&] {
      SolveConfig scfg = cfg.solve_config();
      return solve_constrained_ls(res.system, res.grid, scfg, &res.report.solve);
    });
    res.a_hat = integrate_aprime(res.aprime_hat);
    res.report.recon = reconstruction_error(res.aprime_hat, res.model.potential,
                                            res.samples, cfg.band_lo, cfg.band_hi);

    // replay ---------------------------------------------------------------
    if (cfg.replay_enabled && (cfg.replay_count > 0 || cfg.replay_ood_count > 0)) {
      clock.run("replay", [&] {
        const ChainModel learned = learned_model(res.model, res.aprime_hat);
        // out-of-distribution starts come from a fresh seeded stream
        InitialLaw rlaw{cfg.initial_mean(), cfg.sigma, cfg.replay_seed};
        const auto ood_starts =
            sample_initial(res.model, rlaw, std::max(1, cfg.replay_ood_count));
        for (int j = 0; j < cfg.replay_count + cfg.replay_ood_count; ++j) {
          const bool ood = j >= cfg.replay_count;
          Vector x0;
          if (!ood) {
            // replay observed experiments: their whole trajectories lie in
            // the sampled support, so the learned flow should track them
            x0 = res.initials[j % res.initials.size()].first;
          } else {
            // push the start away from the training law: alternating kick
            // growing with the replay index
            const int k = j - cfg.replay_count;
            x0 = ood_starts[k].first;
            const double kick = cfg.replay_ood_shift * std::max(cfg.sigma, 1e-3) * (1 + k);
            for (int i = 0; i < res.model.d; ++i) x0(i) += (i % 2 == 0 ? kick : -kick);
          }
          const Vector u0 = grad_x_energy(res.model, 0.0, x0);
          Trajectory truth = integrate(res.model, res.flow, x0, u0);
          Trajectory fit = replay(learned, res.flow, x0, u0);
          const TrajectoryError err = trajectory_error(truth, fit);
          ReplayRecord rec;
          rec.kind = ood ? "ood" : "train";
          rec.index = ood ? j - cfg.replay_count : j;
          rec.max_sup = err.max_sup;
          rec.l1_time = err.l1_time;
          rec.support_dist = support_distance(res.model, truth, res.samples);
          res.report.replays.push_back(rec);
          res.replay_true.push_back(std::move(truth));
          res.replay_learned.push_back(std::move(fit));
        }
      });
    }

    // export ---------------------------------------------------------------
    guard_export("export", [&] {
      const auto t0 = std::chrono::steady_clock::now();
      // trajectories at the measurement times, one sidecar each
      for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
        const auto stem = index_name("traj_", static_cast<int>(i), "");
        export_trajectory_csv(out / "trajectories" / (stem + ".csv"),
                              res.trajectories[i], res.measurements.times);
        json side;
        side["epsilon"] = res.trajectories[i].epsilon;
        side["seed"] = cfg.seed;
        side["u0"] = std::vector<double>(
            res.trajectories[i].control.data(),
            res.trajectories[i].control.data() + res.trajectories[i].control.size());
        write_text(out / "trajectories" / (stem + ".json"), side.dump(2) + "\n");
      }

      std::string samples_csv = "value,weight\n";
      for (std::size_t i = 0; i < res.samples.values.size(); ++i)
        samples_csv += fmt_double(res.samples.values[i]) + "," +
                       fmt_double(res.samples.weights[i]) + "\n";
      write_text(out / "strain_samples.csv", samples_csv);

      std::string grid_csv = "node\n";
      for (double p : res.grid.nodes) grid_csv += fmt_double(p) + "\n";
      write_text(out / "grid.csv", grid_csv);

      const StrainHistogram hist = strain_histogram(res.samples);
      std::string hist_csv = "bin_lo,bin_hi,mass\n";
      for (int b = 0; b < StrainHistogram::bins; ++b)
        hist_csv += fmt_double(hist.lo + b * hist.bin_width()) + "," +
                    fmt_double(hist.lo + (b + 1) * hist.bin_width()) + "," +
                    fmt_double(hist.mass[b]) + "\n";
      write_text(out / "strain_hist.csv", hist_csv);

      if (cfg.export_system) {
        std::string sys_csv = "row,col,value\n";
        for (int r = 0; r < res.system.rows; ++r)
          for (int k = res.system.row_ptr[r]; k < res.system.row_ptr[r + 1]; ++k)
            sys_csv += std::to_string(r) + "," + std::to_string(res.system.col[k]) +
                       "," + fmt_double(res.system.val[k]) + "\n";
        write_text(out / "system.csv", sys_csv);
        std::string y_csv = "y\n";
        for (int r = 0; r < res.system.rows; ++r)
          y_csv += fmt_double(res.system.rhs(r)) + "\n";
        write_text(out / "Y.csv", y_csv);
      }

      // reconstruction result on the grid nodes
      {
        const PwQuadratic& ah = res.a_hat;
        std::string csv = "node,aprime_hat,aprime_true,a_hat,a_true\n";
        for (int k = 0; k < res.grid.size(); ++k) {
          const double p = res.grid.nodes[k];
          csv += fmt_double(p) + "," + fmt_double(res.aprime_hat.coeffs(k)) + "," +
                 fmt_double(res.model.potential.slope(p)) + "," + fmt_double(ah(p)) +
                 "," + fmt_double(res.model.potential.value(p) -
                                  res.model.potential.value(0.0)) +
                 "\n";
        }
        write_text(out / "result.csv", csv);
      }

      for (std::size_t j = 0; j < res.replay_true.size(); ++j) {
        const auto& rec = res.report.replays[j];
        const auto name = rec.kind + "_" + std::to_string(rec.index) + ".csv";
        export_paired_csv(out / "replay" / name, res.replay_true[j], res.replay_learned[j]);
      }

      // manifest
      json man;
      man["version"] = kVersion;
      man["config"] = config_json(cfg);
      man["grid_size"] = res.report.grid_size;
      man["window_halfwidth"] = res.report.window_halfwidth;
      man["sample_weight_total"] = res.report.sample_weight_total;
      man["system"] = {{"rows", res.report.system_rows},
                       {"max_row_nnz", res.report.max_row_nnz},
                       {"clamp_count", res.report.clamp_count}};
      man["solver"] = {{"iterations", res.report.solve.iterations},
                       {"converged", res.report.solve.converged},
                       {"primal_residual", res.report.solve.primal_residual},
                       {"dual_residual", res.report.solve.dual_residual},
                       {"objective", res.report.solve.objective}};
      man["reconstruction"] = {{"sup_error", res.report.recon.sup},
                               {"weighted_l2_error", res.report.recon.weighted_l2},
                               {"band_lo", res.report.recon.band_lo},
                               {"band_hi", res.report.recon.band_hi}};
      man["mean_criticality_defect"] = res.report.mean_criticality_defect;
      man["replays"] = json::array();
      for (const auto& rec : res.report.replays)
        man["replays"].push_back({{"kind", rec.kind},
                                  {"index", rec.index},
                                  {"max_sup", rec.max_sup},
                                  {"l1_time", rec.l1_time},
                                  {"support_distance", rec.support_dist}});
      man["timings"] = json::array();
      for (const auto& t : res.report.timings)
        man["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
      write_text(out / "manifest.json", man.dump(2) + "\n");
      const auto t1 = std::chrono::steady_clock::now();
      res.report.timings.push_back(
          {"export", std::chrono::duration<double>(t1 - t0).count()});
    });
  } catch (const StageError& e) {
    if (export_artifacts) {
      try {
        fs::create_directories(out);
        write_text(out / ".failed", std::string(e.stage) + ": " + e.what() + "\n");
      } catch (...) {
      }
    }
    throw;
  }
  return res;
}

std::vector<RunReport> run_preset(const std::string& name, const fs::path& out_root) {
  const Preset preset = resolve_preset(name);
  std::vector<RunReport> reports;
  for (const auto& member : preset.members) {
    ExperimentConfig cfg = member.config;
    fs::path dir = out_root / preset.name;
    if (!member.name.empty()) dir /= member.name;
    cfg.output_dir = dir.string();
    reports.push_back(run_pipeline(cfg, true).report);
  }
  return reports;
}

std::filesystem::path replay_from_run_dir(const fs::path& run_dir, const Vector& x0,
                                          ReplayRecord* record) {
  const ExperimentConfig cfg = load_config(run_dir / "config.ini");
  const ChainModel model = cfg.chain_model();
  if (x0.size() != model.d)
    throw std::invalid_argument("replay start must have length d = " +
                                std::to_string(model.d));

  // rebuild the learned slope from the stored result table
  std::ifstream in(run_dir / "result.csv");
  if (!in) throw std::runtime_error("missing result.csv in " + run_dir.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> nodes, slopes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    nodes.push_back(std::stod(line.substr(0, c1)));
    slopes.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  Grid grid;
  grid.nodes = nodes;
  const auto it = std::find(grid.nodes.begin(), grid.nodes.end(), 0.0);
  grid.has_zero = it != grid.nodes.end();
  grid.zero_index = grid.has_zero ? static_cast<int>(it - grid.nodes.begin()) : -1;
  PwLinearFn fn;
  fn.grid = grid;
  fn.coeffs = Eigen::Map<const Vector>(slopes.data(), static_cast<Eigen::Index>(slopes.size()));

  const ChainModel learned = learned_model(model, fn);
  const FlowParams flow = cfg.flow_params();
  const Vector u0 = grad_x_energy(model, 0.0, x0);
  const Trajectory truth = integrate(model, flow, x0, u0);
  const Trajectory fit = replay(learned, flow, x0, u0);

  fs::create_directories(run_dir / "replay");
  int idx = 0;
  fs::path path;
  do {
    path = run_dir / "replay" / ("manual_" + std::to_string(idx++) + ".csv");
  } while (fs::exists(path));
  export_paired_csv(path, truth, fit);

  if (record) {
    const TrajectoryError err = trajectory_error(truth, fit);
    record->kind = "manual";
    record->index = idx - 1;
    record->max_sup = err.max_sup;
    record->l1_time = err.l1_time;
    record->support_dist = 0.0;
  }
  return path;
}

std::vector<std::filesystem::path> export_plots(const fs::path& run_dir) {
  const fs::path plots = run_dir / "plots";
  fs::create_directories(plots);
  std::vector<fs::path> copied;
  auto copy_if_present = [&](const fs::path& rel) {
    const fs::path src = run_dir / rel;
    if (fs::exists(src)) {
      const fs::path dst = plots / rel.filename();
      fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
      copied.push_back(dst);
    }
  };
  copy_if_present("result.csv");
  copy_if_present("strain_hist.csv");
  copy_if_present("grid.csv");
  if (fs::exists(run_dir / "replay"))
    for (const auto& entry : fs::directory_iterator(run_dir / "replay"))
      if (entry.path().extension() == ".csv") {
        const fs::path dst = plots / ("replay_" + entry.path().filename().string());
        fs::copy_file(entry.path(), dst, fs::copy_options::overwrite_existing);
        copied.push_back(dst);
      }
  if (copied.empty())
    throw std::runtime_error("no plot-ready artifacts found in " + run_dir.string());
  return copied;
}

}  // namespace rodlearn
