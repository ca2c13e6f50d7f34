#include "rodlearn/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rodlearn {

ChainModel learned_model(const ChainModel& base, const PwLinearFn& aprime_hat) {
  ChainModel out = base;
  std::vector<double> slopes(aprime_hat.coeffs.data(),
                             aprime_hat.coeffs.data() + aprime_hat.coeffs.size());
  out.potential = Potential::table(aprime_hat.grid.nodes, std::move(slopes));
  return out;
}

Trajectory replay(const ChainModel& learned, const FlowParams& params,
                  const Vector& x0, const Vector& u0) {
  return integrate(learned, params, x0, u0);
}

TrajectoryError trajectory_error(const Trajectory& a, const Trajectory& b) {
  if (a.times.empty() || b.times.empty())
    throw std::invalid_argument("trajectory_error: empty trajectory");
  const double lo = std::max(a.times.front(), b.times.front());
  const double hi = std::min(a.times.back(), b.times.back());
  if (!(hi >= lo)) throw std::invalid_argument("trajectory_error: disjoint time ranges");

  // evaluate on the union of both grids restricted to the overlap
  std::vector<double> grid;
  grid.reserve(a.times.size() + b.times.size());
  for (double t : a.times)
    if (t >= lo && t <= hi) grid.push_back(t);
  for (double t : b.times)
    if (t >= lo && t <= hi) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  TrajectoryError err;
  double prev_t = grid.front(), prev_d = 0.0;
  bool first = true;
  for (double t : grid) {
    const double dist = (a.state_at(t) - b.state_at(t)).lpNorm<Eigen::Infinity>();
    err.max_sup = std::max(err.max_sup, dist);
    if (!first) err.l1_time += 0.5 * (dist + prev_d) * (t - prev_t);
    prev_t = t;
    prev_d = dist;
    first = false;
  }
  return err;
}

double support_distance(const ChainModel& model, const Trajectory& traj,
                        const StrainSamples& samples) {
  if (samples.values.empty())
    throw std::invalid_argument("support_distance: empty sample set");
  const StrainHistogram hist = strain_histogram(samples);
  const double smin = samples.min_value();
  const double smax = samples.max_value();

  // occupied bins clipped to [smin, smax], merged into disjoint intervals
  std::vector<std::pair<double, double>> covered;
  const double w = hist.bin_width();
  for (int b = 0; b < StrainHistogram::bins; ++b) {
    if (hist.mass[b] <= 0.0) continue;
    const double lo = std::max(hist.lo + b * w, smin);
    const double hi = std::min(hist.lo + (b + 1) * w, smax);
    if (hi < lo) continue;
    if (!covered.empty() && lo <= covered.back().second + 1e-15)
      covered.back().second = std::max(covered.back().second, hi);
    else
      covered.emplace_back(lo, hi);
  }
  if (covered.empty()) covered.emplace_back(smin, smax);

  auto dist_to_covered = [&](double s) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lo, hi] : covered) {
      if (s < lo)
        best = std::min(best, lo - s);
      else if (s > hi)
        best = std::min(best, s - hi);
      else
        return 0.0;
    }
    return best;
  };

  // L1 in time of the worst per-spring distance, trapezoid on the step grid
  const std::size_t n = traj.size();
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector z = strains(model, traj.times[k], traj.states[k]);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      worst = std::max(worst, dist_to_covered(z(j)));
    f[k] = worst;
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    total += 0.5 * (f[k] + f[k + 1]) * (traj.times[k + 1] - traj.times[k]);
  return total;
}

double replay_error_bound(double sup_slope_error, double lipschitz, double horizon,
                          double epsilon) {
  const double expo = lipschitz * horizon / epsilon;
  if (expo > 700.0) return std::numeric_limits<double>::infinity();
  return (sup_slope_error * horizon / epsilon) * std::exp(expo);
}

}  // namespace rodlearn
