#include "rodlearn/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rodlearn {

Vector uniform_strain_mean(const ChainModel& model) {
  const double a = model.f1.value(0.0);
  const double b = model.f2.value(0.0);
  Vector mean(model.d);
  for (int i = 1; i <= model.d; ++i)
    mean(i - 1) = a + (b - a) * i / (model.d + 1);
  return mean;
}

namespace {

// Box-Muller on mt19937_64; std::normal_distribution is implementation
// defined, this keeps the sample stream identical across platforms.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform_open() {
    // (0, 1]: avoids log(0)
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
  }
  std::mt19937_64 gen_;
};

}  // namespace

std::vector<std::pair<Vector, Vector>> sample_initial(const ChainModel& model,
                                                      const InitialLaw& law, int n) {
  if (n < 1) throw std::invalid_argument("sample_initial: need n >= 1");
  if (law.mean.size() != model.d)
    throw DimensionError("initial law mean must have length d");
  GaussianStream g(law.seed);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector x0(model.d);
    for (int j = 0; j < model.d; ++j) x0(j) = law.mean(j) + law.sigma * g.next();
    Vector u0 = grad_x_energy(model, 0.0, x0);
    out.emplace_back(std::move(x0), std::move(u0));
  }
  return out;
}

std::vector<Trajectory> run_experiments(const ChainModel& model,
                                        const FlowParams& params,
                                        const std::vector<std::pair<Vector, Vector>>& initials) {
  if (initials.empty()) throw std::invalid_argument("run_experiments: no initial data");
  std::vector<Trajectory> out;
  out.reserve(initials.size());
  for (std::size_t i = 0; i < initials.size(); ++i) {
    try {
      out.push_back(integrate(model, params, initials[i].first, initials[i].second));
    } catch (const IntegrationError& e) {
      throw IntegrationError("experiment " + std::to_string(i) + ": " + e.what(),
                             e.time);
    }
  }
  return out;
}

std::vector<double> measurement_times(const Trajectory& reference, int count) {
  if (count < 2) throw std::invalid_argument("need at least 2 measurement times");
  const double T = reference.times.back();
  std::vector<double> out(count);
  for (int m = 0; m < count; ++m) {
    const double t = T * m / (count - 1);
    const auto it = std::lower_bound(reference.times.begin(), reference.times.end(), t);
    double snapped;
    if (it == reference.times.begin()) {
      snapped = reference.times.front();
    } else if (it == reference.times.end()) {
      snapped = reference.times.back();
    } else {
      const double hi = *it, lo = *(it - 1);
      snapped = (t - lo <= hi - t) ? lo : hi;
    }
    out[m] = snapped;
  }
  return out;
}

double StrainSamples::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double StrainSamples::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double StrainSamples::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

double StrainSamples::window_halfwidth() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return 1.5 * m;
}

std::pair<MeasurementSet, StrainSamples> extract_strains(
    const ChainModel& model, const std::vector<Trajectory>& trajectories,
    const std::vector<double>& times) {
  if (trajectories.empty())
    throw std::invalid_argument("extract_strains: no trajectories");
  if (times.size() < 2)
    throw std::invalid_argument("extract_strains: need at least 2 times");

  const double T = trajectories.front().times.back();
  const std::size_t nm = times.size();

  MeasurementSet ms;
  ms.times = times;
  ms.weights.resize(nm);
  // One-sided end weights so that the weights partition [0, T] exactly.
  for (std::size_t m = 0; m < nm; ++m) {
    double w = 0.0;
    if (m == 0)
      w = (times[0] - 0.0) + (nm > 1 ? 0.5 * (times[1] - times[0]) : T - times[0]);
    else if (m + 1 == nm)
      w = (T - times[m]) + 0.5 * (times[m] - times[m - 1]);
    else
      w = 0.5 * (times[m + 1] - times[m - 1]);
    ms.weights[m] = w;
  }

  const std::size_t n = trajectories.size();
  ms.controls.reserve(n);
  ms.states.resize(n);
  ms.strains.resize(n);

  StrainSamples pool;
  pool.values.reserve(n * nm * (model.d + 1));
  pool.weights.reserve(n * nm * (model.d + 1));

  for (std::size_t i = 0; i < n; ++i) {
    const Trajectory& traj = trajectories[i];
    ms.controls.push_back(traj.control);
    ms.states[i].reserve(nm);
    ms.strains[i].reserve(nm);
    for (std::size_t m = 0; m < nm; ++m) {
      const Vector x = traj.state_at(times[m]);
      Vector z = strains(model, times[m], x);
      ms.states[i].push_back(x);
      const double w = ms.weights[m] / static_cast<double>(n);
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        pool.values.push_back(z(j));
        pool.weights.push_back(w);
      }
      ms.strains[i].push_back(std::move(z));
    }
  }
  return {std::move(ms), std::move(pool)};
}

namespace {

// sorted (value, midpoint cumulative position) pairs; quantiles interpolate
// linearly between order statistics
struct SortedPool {
  std::vector<double> values;
  std::vector<double> positions;

  explicit SortedPool(const StrainSamples& samples) {
    const std::size_t n = samples.values.size();
    if (n == 0) throw std::invalid_argument("weighted_quantile: empty sample set");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return samples.values[a] < samples.values[b];
    });
    const double W = samples.total_weight();
    values.resize(n);
    positions.resize(n);
    double cum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = samples.weights[order[k]];
      values[k] = samples.values[order[k]];
      positions[k] = (cum + 0.5 * w) / W;
      cum += w;
    }
  }

  double quantile(double q) const {
    if (q <= positions.front()) return values.front();
    if (q >= positions.back()) return values.back();
    const auto it = std::lower_bound(positions.begin(), positions.end(), q);
    const std::size_t k = static_cast<std::size_t>(it - positions.begin());
    const double c0 = positions[k - 1], c1 = positions[k];
    if (c1 == c0) return values[k];
    const double s = (q - c0) / (c1 - c0);
    return values[k - 1] + s * (values[k] - values[k - 1]);
  }
};

}  // namespace

double weighted_quantile(const StrainSamples& samples, double q) {
  return SortedPool(samples).quantile(q);
}

Grid adaptive_grid(const StrainSamples& samples, int node_count, double spacing_floor) {
  if (node_count < 3) throw std::invalid_argument("adaptive_grid: need K >= 3");
  if (samples.values.empty()) throw std::invalid_argument("adaptive_grid: empty samples");
  const double lo = samples.min_value();
  const double hi = samples.max_value();
  if (!(hi - lo > 0.0))
    throw std::runtime_error("adaptive_grid: degenerate sample support (all samples equal)");
  if (spacing_floor <= 0.0) spacing_floor = 1e-3 * (hi - lo);

  const SortedPool pool(samples);
  std::vector<double> candidates;
  candidates.reserve(node_count);
  for (int k = 0; k < node_count; ++k)
    candidates.push_back(pool.quantile(static_cast<double>(k) / (node_count - 1)));
  candidates.front() = lo;
  candidates.back() = hi;
  std::sort(candidates.begin(), candidates.end());

  // dedup to the floor, always keeping the extremes
  std::vector<double> nodes;
  for (double c : candidates) {
    if (nodes.empty() || c - nodes.back() >= spacing_floor)
      nodes.push_back(c);
  }
  if (nodes.back() < hi) {
    if (hi - nodes.back() >= spacing_floor || nodes.size() < 2)
      nodes.push_back(hi);
    else
      nodes.back() = hi;
  }

  // force the node 0 in (the pin needs it): snap the nearest node when it is
  // within the floor, insert otherwise
  auto nearest = std::min_element(nodes.begin(), nodes.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  if (std::abs(*nearest) <= spacing_floor) {
    *nearest = 0.0;
  } else {
    nodes.insert(std::upper_bound(nodes.begin(), nodes.end(), 0.0), 0.0);
  }
  // snapping may have shrunk a neighbor gap below the floor; drop violators
  std::vector<double> final_nodes;
  for (double c : nodes) {
    if (final_nodes.empty() || c - final_nodes.back() >= spacing_floor * (1.0 - 1e-12) ||
        c == 0.0)
      final_nodes.push_back(c);
    else if (final_nodes.back() == 0.0)
      continue;  // keep the zero node over a too-close neighbor
    else
      final_nodes.back() = c;
  }

  Grid grid;
  grid.nodes = std::move(final_nodes);
  grid.spacing_floor = spacing_floor;
  const auto it = std::find(grid.nodes.begin(), grid.nodes.end(), 0.0);
  grid.has_zero = it != grid.nodes.end();
  grid.zero_index = grid.has_zero ? static_cast<int>(it - grid.nodes.begin()) : -1;
  if (grid.size() < 2)
    throw std::runtime_error("adaptive_grid: fewer than 2 nodes after deduplication");
  return grid;
}

double w1_1d(const StrainSamples& a, const StrainSamples& b) {
  if (a.values.empty() || b.values.empty())
    throw std::invalid_argument("w1_1d: empty sample set");
  const std::size_t n = std::max(a.values.size(), b.values.size());
  // inverse-CDF pairing at midpoints (k - 1/2)/n; for equal-size equal-weight
  // sets this reduces to sorting and pairing order statistics
  std::vector<double> qa(n), qb(n);
  {
    auto sorted_of = [](const StrainSamples& s) {
      std::vector<std::pair<double, double>> vw(s.values.size());
      for (std::size_t i = 0; i < s.values.size(); ++i)
        vw[i] = {s.values[i], s.weights[i]};
      std::sort(vw.begin(), vw.end());
      return vw;
    };
    auto fill = [&](const StrainSamples& s, std::vector<double>& out) {
      const auto vw = sorted_of(s);
      double W = 0.0;
      for (const auto& p : vw) W += p.second;
      std::size_t k = 0;
      double cum = vw[0].second;
      for (std::size_t i = 0; i < n; ++i) {
        const double target = (static_cast<double>(i) + 0.5) / n * W;
        while (cum < target && k + 1 < vw.size()) cum += vw[++k].second;
        out[i] = vw[k].first;
      }
    };
    fill(a, qa);
    fill(b, qb);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::abs(qa[i] - qb[i]);
  return total / static_cast<double>(n);
}

int StrainHistogram::bin_of(double s) const {
  if (s < lo || s > hi) return -1;
  int b = static_cast<int>((s - lo) / bin_width());
  return std::min(b, bins - 1);
}

StrainHistogram strain_histogram(const StrainSamples& samples) {
  StrainHistogram h;
  const double R = samples.window_halfwidth();
  h.lo = -R;
  h.hi = R;
  if (R <= 0.0) return h;
  for (std::size_t i = 0; i < samples.values.size(); ++i) {
    const int b = h.bin_of(samples.values[i]);
    if (b >= 0) h.mass[b] += samples.weights[i];
  }
  return h;
}

}  // namespace rodlearn
