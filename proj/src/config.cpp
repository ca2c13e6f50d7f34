#include "rodlearn/config.hpp"

#include "rodlearn/ensemble.hpp"
#include "rodlearn/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rodlearn {

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

using RawMap = std::map<std::string, RawEntry>;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

RawMap tokenize(const std::string& text, const std::string& origin) {
  RawMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": expected 'section.key = value'",
                        "", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key", "", lineno);
    if (out.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                            key + "'",
                        key, lineno);
    out[key] = {value, lineno, false};
  }
  return out;
}

class Reader {
 public:
  Reader(RawMap& raw, std::string origin) : raw_(raw), origin_(std::move(origin)) {}

  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
  }

  double real(const std::string& key, double fallback) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    it->second.used = true;
    return parse_double(it->second.value, key, it->second.line);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    it->second.used = true;
    const std::string& s = it->second.value;
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      fail(key, it->second.line, "expected an integer, got '" + s + "'");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    it->second.used = true;
    const std::string& s = it->second.value;
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    fail(key, it->second.line, "expected a boolean, got '" + s + "'");
    return fallback;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return fallback;
    it->second.used = true;
    return parse_list(it->second.value, key, it->second.line);
  }

  double parse_double(const std::string& s, const std::string& key, int line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      fail(key, line, "expected a number, got '" + s + "'");
    return v;
  }

  std::vector<double> parse_list(const std::string& s, const std::string& key, int line) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      const std::string item = trim(s.substr(pos, comma - pos));
      if (!item.empty()) out.push_back(parse_double(item, key, line));
      pos = comma + 1;
    }
    if (out.empty()) fail(key, line, "expected a comma-separated number list");
    return out;
  }

  [[noreturn]] void fail(const std::string& key, int line, const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": key '" + key + "': " + what,
                      key, line);
  }

  [[noreturn]] void fail_key(const std::string& key, const std::string& what) const {
    int line = 0;
    auto it = raw_.find(key);
    if (it != raw_.end()) line = it->second.line;
    throw ConfigError(origin_ + ": key '" + key + "': " + what, key, line);
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : raw_)
      if (!entry.used)
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                              ": unknown key '" + key + "'",
                          key, entry.line);
  }

 private:
  RawMap& raw_;
  std::string origin_;
};

BoundaryProfile parse_profile(Reader& r, const std::string& key, const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = colon == std::string::npos ? s : s.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos)
    args = r.parse_list(s.substr(colon + 1), key, 0);
  if (kind == "constant") {
    if (args.size() != 1) r.fail_key(key, "constant profile needs 1 coefficient");
    return BoundaryProfile::constant(args[0]);
  }
  if (kind == "ramp") {
    if (args.size() != 2) r.fail_key(key, "ramp profile needs 2 coefficients (c0, rate)");
    return BoundaryProfile::ramp(args[0], args[1]);
  }
  if (kind == "sin") {
    if (args.size() != 3)
      r.fail_key(key, "sin profile needs 3 coefficients (c0, amplitude, omega)");
    return BoundaryProfile::sinusoid(args[0], args[1], args[2]);
  }
  r.fail_key(key, "unknown profile kind '" + kind + "' (constant|ramp|sin)");
}

std::string profile_to_string(const BoundaryProfile& p) {
  switch (p.kind) {
    case BoundaryProfile::Kind::Constant:
      return "constant:" + fmt_double(p.c0);
    case BoundaryProfile::Kind::Ramp:
      return "ramp:" + fmt_double(p.c0) + "," + fmt_double(p.rate);
    case BoundaryProfile::Kind::Sinusoid:
      return "sin:" + fmt_double(p.c0) + "," + fmt_double(p.amplitude) + "," +
             fmt_double(p.omega);
  }
  return "constant:0";
}

std::string list_to_string(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  RawMap raw = tokenize(text, origin);
  Reader r(raw, origin);
  ExperimentConfig cfg;

  cfg.d = static_cast<int>(r.integer("model.d", cfg.d));
  if (cfg.d < 1) r.fail_key("model.d", "must be >= 1");
  cfg.horizon = r.real("model.T", cfg.horizon);
  if (cfg.horizon <= 0.0) r.fail_key("model.T", "must be > 0");

  const std::string pot = r.str("model.potential", "quadratic");
  if (pot == "quadratic") {
    cfg.potential_kind = PotentialKind::Quadratic;
    cfg.potential_params = r.reals("model.potential_params", {1.0});
  } else if (pot == "doublewell") {
    cfg.potential_kind = PotentialKind::DoubleWell;
    cfg.potential_params = r.reals("model.potential_params", {1.0, 0.0});
  } else if (pot == "table") {
    cfg.potential_kind = PotentialKind::Table;
    cfg.potential_params = r.reals("model.potential_params", {});
  } else {
    r.fail_key("model.potential", "unknown potential '" + pot +
                                      "' (quadratic|doublewell|table)");
  }
  try {
    (void)Potential::from_params(cfg.potential_kind, cfg.potential_params);
  } catch (const std::exception& e) {
    r.fail_key("model.potential_params", e.what());
  }

  if (r.has("model.f1")) cfg.f1 = parse_profile(r, "model.f1", r.str("model.f1", ""));
  if (r.has("model.f2")) cfg.f2 = parse_profile(r, "model.f2", r.str("model.f2", ""));

  cfg.epsilon = r.real("flow.epsilon", cfg.epsilon);
  if (cfg.epsilon <= 0.0) r.fail_key("flow.epsilon", "must be > 0");
  cfg.step = r.real("flow.step", cfg.step);
  if (cfg.step < 0.0) r.fail_key("flow.step", "must be >= 0 (0 = epsilon/5)");
  if (cfg.step > cfg.epsilon / 5.0 * (1.0 + 1e-12))
    r.fail_key("flow.step", "must satisfy h <= epsilon/5");
  const std::string method = r.str("flow.method", "implicit-euler");
  if (method == "implicit-euler")
    cfg.method = StepMethod::ImplicitEuler;
  else if (method == "semi-implicit")
    cfg.method = StepMethod::SemiImplicit;
  else
    r.fail_key("flow.method", "unknown method '" + method +
                                  "' (implicit-euler|semi-implicit)");
  cfg.newton_tol = r.real("flow.newton_tol", cfg.newton_tol);
  if (cfg.newton_tol <= 0.0) r.fail_key("flow.newton_tol", "must be > 0");
  cfg.newton_max_iter = static_cast<int>(r.integer("flow.newton_max_iter", cfg.newton_max_iter));
  if (cfg.newton_max_iter < 1) r.fail_key("flow.newton_max_iter", "must be >= 1");

  cfg.experiments = static_cast<int>(r.integer("ensemble.N", cfg.experiments));
  if (cfg.experiments < 1) r.fail_key("ensemble.N", "must be >= 1");
  cfg.measurements = static_cast<int>(r.integer("ensemble.Ne", cfg.measurements));
  if (cfg.measurements < 2) r.fail_key("ensemble.Ne", "must be >= 2");
  cfg.seed = static_cast<std::uint64_t>(r.integer("ensemble.seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.sigma = r.real("ensemble.sigma", cfg.sigma);
  if (cfg.sigma < 0.0) r.fail_key("ensemble.sigma", "must be >= 0");
  const std::string mean = r.str("ensemble.mean", "interpolate");
  if (mean == "interpolate") {
    cfg.mean_policy = MeanPolicy::Interpolate;
  } else if (mean == "zeros") {
    cfg.mean_policy = MeanPolicy::Zeros;
  } else if (mean.rfind("list:", 0) == 0) {
    cfg.mean_policy = MeanPolicy::Explicit;
    cfg.mean_values = r.parse_list(mean.substr(5), "ensemble.mean", 0);
    if (static_cast<int>(cfg.mean_values.size()) != cfg.d)
      r.fail_key("ensemble.mean", "explicit mean needs exactly d values");
  } else {
    r.fail_key("ensemble.mean", "expected interpolate|zeros|list:v1,v2,...");
  }

  cfg.grid_nodes = static_cast<int>(r.integer("recon.K", cfg.grid_nodes));
  cfg.nodes_per_experiment =
      static_cast<int>(r.integer("recon.K_per_N", cfg.nodes_per_experiment));
  if (cfg.nodes_per_experiment < 0) r.fail_key("recon.K_per_N", "must be >= 0");
  if (cfg.nodes_per_experiment == 0 && cfg.grid_nodes < 3)
    r.fail_key("recon.K", "must be >= 3");
  cfg.m1 = r.real("recon.M1", cfg.m1);
  if (cfg.m1 <= 0.0) r.fail_key("recon.M1", "must be > 0");
  cfg.m2 = r.real("recon.M2", cfg.m2);
  if (cfg.m2 <= 0.0) r.fail_key("recon.M2", "must be > 0");
  cfg.rho = r.real("recon.rho", cfg.rho);
  if (cfg.rho <= 0.0) r.fail_key("recon.rho", "must be > 0");
  cfg.tol_primal = r.real("recon.tol_primal", cfg.tol_primal);
  cfg.tol_dual = r.real("recon.tol_dual", cfg.tol_dual);
  if (cfg.tol_primal <= 0.0) r.fail_key("recon.tol_primal", "must be > 0");
  if (cfg.tol_dual <= 0.0) r.fail_key("recon.tol_dual", "must be > 0");
  cfg.max_iter = static_cast<int>(r.integer("recon.max_iter", cfg.max_iter));
  if (cfg.max_iter < 1) r.fail_key("recon.max_iter", "must be >= 1");
  const std::string mode = r.str("recon.mode", "paper");
  if (mode == "paper")
    cfg.data_mode = DataMode::Paper;
  else if (mode == "observational")
    cfg.data_mode = DataMode::Observational;
  else
    r.fail_key("recon.mode", "unknown mode '" + mode + "' (paper|observational)");
  cfg.spacing_floor_rel = r.real("recon.spacing_floor_rel", cfg.spacing_floor_rel);
  if (cfg.spacing_floor_rel <= 0.0) r.fail_key("recon.spacing_floor_rel", "must be > 0");
  cfg.band_lo = r.real("recon.band_lo", cfg.band_lo);
  cfg.band_hi = r.real("recon.band_hi", cfg.band_hi);
  if (!(cfg.band_lo >= 0.0 && cfg.band_hi <= 1.0 && cfg.band_lo < cfg.band_hi))
    r.fail_key("recon.band_lo", "band must satisfy 0 <= lo < hi <= 1");
  cfg.export_system = r.boolean("recon.export_system", cfg.export_system);

  cfg.replay_enabled = r.boolean("replay.enabled", cfg.replay_enabled);
  cfg.replay_count = static_cast<int>(r.integer("replay.count", cfg.replay_count));
  if (cfg.replay_count < 0) r.fail_key("replay.count", "must be >= 0");
  cfg.replay_ood_count = static_cast<int>(r.integer("replay.ood_count", cfg.replay_ood_count));
  if (cfg.replay_ood_count < 0) r.fail_key("replay.ood_count", "must be >= 0");
  cfg.replay_ood_shift = r.real("replay.ood_shift", cfg.replay_ood_shift);
  cfg.replay_seed = static_cast<std::uint64_t>(
      r.integer("replay.seed", static_cast<std::int64_t>(cfg.replay_seed)));

  cfg.output_dir = r.str("output.dir", cfg.output_dir);

  r.reject_unknown();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "model.d = " << cfg.d << "\n";
  out << "model.T = " << fmt_double(cfg.horizon) << "\n";
  switch (cfg.potential_kind) {
    case PotentialKind::Quadratic: out << "model.potential = quadratic\n"; break;
    case PotentialKind::DoubleWell: out << "model.potential = doublewell\n"; break;
    case PotentialKind::Table: out << "model.potential = table\n"; break;
  }
  out << "model.potential_params = " << list_to_string(cfg.potential_params) << "\n";
  out << "model.f1 = " << profile_to_string(cfg.f1) << "\n";
  out << "model.f2 = " << profile_to_string(cfg.f2) << "\n";
  out << "flow.epsilon = " << fmt_double(cfg.epsilon) << "\n";
  out << "flow.step = " << fmt_double(cfg.step) << "\n";
  out << "flow.method = "
      << (cfg.method == StepMethod::ImplicitEuler ? "implicit-euler" : "semi-implicit")
      << "\n";
  out << "flow.newton_tol = " << fmt_double(cfg.newton_tol) << "\n";
  out << "flow.newton_max_iter = " << cfg.newton_max_iter << "\n";
  out << "ensemble.N = " << cfg.experiments << "\n";
  out << "ensemble.Ne = " << cfg.measurements << "\n";
  out << "ensemble.seed = " << cfg.seed << "\n";
  out << "ensemble.sigma = " << fmt_double(cfg.sigma) << "\n";
  switch (cfg.mean_policy) {
    case MeanPolicy::Interpolate: out << "ensemble.mean = interpolate\n"; break;
    case MeanPolicy::Zeros: out << "ensemble.mean = zeros\n"; break;
    case MeanPolicy::Explicit:
      out << "ensemble.mean = list:" << list_to_string(cfg.mean_values) << "\n";
      break;
  }
  out << "recon.K = " << cfg.grid_nodes << "\n";
  out << "recon.K_per_N = " << cfg.nodes_per_experiment << "\n";
  out << "recon.M1 = " << fmt_double(cfg.m1) << "\n";
  out << "recon.M2 = " << fmt_double(cfg.m2) << "\n";
  out << "recon.rho = " << fmt_double(cfg.rho) << "\n";
  out << "recon.tol_primal = " << fmt_double(cfg.tol_primal) << "\n";
  out << "recon.tol_dual = " << fmt_double(cfg.tol_dual) << "\n";
  out << "recon.max_iter = " << cfg.max_iter << "\n";
  out << "recon.mode = " << (cfg.data_mode == DataMode::Paper ? "paper" : "observational")
      << "\n";
  out << "recon.spacing_floor_rel = " << fmt_double(cfg.spacing_floor_rel) << "\n";
  out << "recon.band_lo = " << fmt_double(cfg.band_lo) << "\n";
  out << "recon.band_hi = " << fmt_double(cfg.band_hi) << "\n";
  out << "recon.export_system = " << (cfg.export_system ? "true" : "false") << "\n";
  out << "replay.enabled = " << (cfg.replay_enabled ? "true" : "false") << "\n";
  out << "replay.count = " << cfg.replay_count << "\n";
  out << "replay.ood_count = " << cfg.replay_ood_count << "\n";
  out << "replay.ood_shift = " << fmt_double(cfg.replay_ood_shift) << "\n";
  out << "replay.seed = " << cfg.replay_seed << "\n";
  out << "output.dir = " << cfg.output_dir << "\n";
  return out.str();
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << serialize_config(cfg);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

ChainModel ExperimentConfig::chain_model() const {
  ChainModel m;
  m.d = d;
  m.f1 = f1;
  m.f2 = f2;
  m.potential = Potential::from_params(potential_kind, potential_params);
  m.bound_m1 = m1;
  m.bound_m2 = m2;
  return m;
}

FlowParams ExperimentConfig::flow_params() const {
  FlowParams p;
  p.epsilon = epsilon;
  p.horizon = horizon;
  p.step = step;
  p.method = method;
  p.newton_tol = newton_tol;
  p.newton_max_iter = newton_max_iter;
  return p;
}

SolveConfig ExperimentConfig::solve_config() const {
  SolveConfig s;
  s.m1 = m1;
  s.m2 = m2;
  s.rho = rho;
  s.tol_primal = tol_primal;
  s.tol_dual = tol_dual;
  s.max_iter = max_iter;
  return s;
}

Vector ExperimentConfig::initial_mean() const {
  switch (mean_policy) {
    case MeanPolicy::Interpolate:
      return uniform_strain_mean(chain_model());
    case MeanPolicy::Zeros:
      return Vector::Zero(d);
    case MeanPolicy::Explicit: {
      Vector m(d);
      for (int i = 0; i < d; ++i) m(i) = mean_values[i];
      return m;
    }
  }
  return Vector::Zero(d);
}

int ExperimentConfig::resolved_grid_nodes() const {
  return nodes_per_experiment > 0 ? nodes_per_experiment * experiments : grid_nodes;
}

}  // namespace rodlearn
