#include "rodlearn/presets.hpp"

#include "rodlearn/io.hpp"

namespace rodlearn {

namespace {

ExperimentConfig full_base() {
  ExperimentConfig cfg;
  cfg.d = 20;
  cfg.horizon = 1.0;
  cfg.epsilon = 1e-3;
  cfg.m1 = 1000.0;
  cfg.m2 = 1000.0;
  cfg.replay_enabled = false;
  return cfg;
}

ExperimentConfig desk_base() {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.horizon = 1.0;
  cfg.epsilon = 1e-3;
  cfg.experiments = 30;
  cfg.measurements = 200;
  cfg.grid_nodes = 80;
  cfg.m1 = 1000.0;
  cfg.m2 = 1000.0;
  cfg.replay_enabled = true;
  cfg.replay_count = 1;
  return cfg;
}

void set_double_well(ExperimentConfig& cfg) {
  cfg.potential_kind = PotentialKind::DoubleWell;
  cfg.potential_params = {1.0, 0.0};
}

Preset quadratic_fig1() {
  ExperimentConfig cfg = full_base();
  cfg.experiments = 60;
  cfg.measurements = 2000;
  cfg.nodes_per_experiment = 4;  // D(N) = 4N
  return {"quadratic-fig1", {{"", cfg}}};
}

Preset vary_measurements_fig2() {
  Preset p{"vary-measurements-fig2", {}};
  for (int ne : {2, 5, 10, 100}) {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = 30;
    cfg.measurements = ne;
    cfg.grid_nodes = 100;  // D(N) = 100 fixed
    p.members.push_back({"Ne=" + std::to_string(ne), cfg});
  }
  return p;
}

Preset vary_n_adaptive_fig3() {
  Preset p{"vary-N-adaptive-fig3", {}};
  for (int n : {1, 5, 20, 60}) {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = n;
    cfg.measurements = 55;
    cfg.nodes_per_experiment = 4;  // D(N) = 4N
    p.members.push_back({"N=" + std::to_string(n), cfg});
  }
  return p;
}

Preset vary_n_fixed_fig4() {
  Preset p{"vary-N-fixed-fig4", {}};
  for (int n : {1, 5, 20, 60}) {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = n;
    cfg.measurements = 55;
    cfg.grid_nodes = 300;  // D(N) = 300 fixed
    p.members.push_back({"N=" + std::to_string(n), cfg});
  }
  return p;
}

Preset constraint_m2_fig5() {
  Preset p{"constraint-M2-fig5", {}};
  for (double m2 : {2.0, 5.0, 20.0, 1000.0}) {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = 30;
    cfg.measurements = 1000;
    cfg.grid_nodes = 100;
    cfg.m1 = 1000.0;
    cfg.m2 = m2;
    p.members.push_back({"M2=" + fmt_double(m2), cfg});
  }
  return p;
}

Preset constraint_m1_fig6() {
  Preset p{"constraint-M1-fig6", {}};
  for (double m1 : {2.0, 5.0, 20.0, 100.0}) {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = 30;
    cfg.measurements = 1000;
    cfg.grid_nodes = 100;
    cfg.m1 = m1;
    cfg.m2 = 1000.0;
    p.members.push_back({"M1=" + fmt_double(m1), cfg});
  }
  return p;
}

Preset replay_fig7() {
  Preset p{"replay-fig7", {}};
  {
    ExperimentConfig cfg = full_base();
    cfg.experiments = 60;
    cfg.measurements = 2000;
    cfg.nodes_per_experiment = 4;
    cfg.replay_enabled = true;
    cfg.replay_count = 1;
    p.members.push_back({"quadratic", cfg});
  }
  {
    ExperimentConfig cfg = full_base();
    set_double_well(cfg);
    cfg.experiments = 60;
    cfg.measurements = 55;
    cfg.nodes_per_experiment = 4;
    cfg.replay_enabled = true;
    cfg.replay_count = 1;
    cfg.replay_ood_count = 2;
    p.members.push_back({"doublewell", cfg});
  }
  return p;
}

Preset desk_quadratic() {
  ExperimentConfig cfg = desk_base();
  return {"desk-quadratic", {{"", cfg}}};
}

Preset desk_doublewell() {
  ExperimentConfig cfg = desk_base();
  set_double_well(cfg);
  cfg.replay_ood_count = 5;
  return {"desk-doublewell", {{"", cfg}}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"quadratic-fig1",     "vary-measurements-fig2", "vary-N-adaptive-fig3",
          "vary-N-fixed-fig4",  "constraint-M2-fig5",     "constraint-M1-fig6",
          "replay-fig7",        "desk-quadratic",         "desk-doublewell"};
}

Preset resolve_preset(const std::string& name) {
  if (name == "quadratic-fig1") return quadratic_fig1();
  if (name == "vary-measurements-fig2") return vary_measurements_fig2();
  if (name == "vary-N-adaptive-fig3") return vary_n_adaptive_fig3();
  if (name == "vary-N-fixed-fig4") return vary_n_fixed_fig4();
  if (name == "constraint-M2-fig5") return constraint_m2_fig5();
  if (name == "constraint-M1-fig6") return constraint_m1_fig6();
  if (name == "replay-fig7") return replay_fig7();
  if (name == "desk-quadratic") return desk_quadratic();
  if (name == "desk-doublewell") return desk_doublewell();
  std::string alternatives;
  for (const auto& n : preset_names()) alternatives += "\n  " + n;
  throw ConfigError("unknown preset '" + name + "'; available presets:" + alternatives);
}

}  // namespace rodlearn
