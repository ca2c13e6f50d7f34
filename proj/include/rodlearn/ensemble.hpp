// ensemble.hpp — experiment batches and the empirical strain measure
//
// Samples random initial equilibria, runs one flow per sample, measures
// states at a fixed set of times and pools all observed spring strains into
// the weighted 1D sample set that drives grid adaptation and the least
// squares assembly.

#pragma once

#include "rodlearn/flow.hpp"

#include <array>
#include <cstdint>
#include <utility>

namespace rodlearn {

// Deterministic Gaussian initial law: same seed, same samples, bitwise.
struct InitialLaw {
  Vector mean;
  double sigma = 0.1;
  std::uint64_t seed = 1;
};

// Interior states interpolating the boundary values at t = 0 linearly
// (the uniform-strain configuration).
Vector uniform_strain_mean(const ChainModel& model);

// N i.i.d. draws x0 ~ N(mean, sigma^2 I) with the exact matching control
// u0 = grad_x E(0, x0).
std::vector<std::pair<Vector, Vector>> sample_initial(const ChainModel& model,
                                                      const InitialLaw& law, int n);

// One flow per initial pair, order preserved.  Integration failures are
// rethrown tagged with the experiment index.
std::vector<Trajectory> run_experiments(const ChainModel& model,
                                        const FlowParams& params,
                                        const std::vector<std::pair<Vector, Vector>>& initials);

// Uniform measurement times spanning [0, T] (both endpoints included),
// snapped to the trajectory step grid.
std::vector<double> measurement_times(const Trajectory& reference, int count);

// States, strains and controls observed at the measurement times.
// weights[m] are the quadrature steps Delta_m; they partition [0, T].
struct MeasurementSet {
  std::vector<double> times;
  std::vector<double> weights;
  std::vector<Vector> controls;              // per experiment
  std::vector<std::vector<Vector>> states;   // [experiment][time], length d
  std::vector<std::vector<Vector>> strains;  // [experiment][time], length d+1
};

// Pooled scalar strain samples with matching weights Delta_m / N;
// the discrete empirical strain measure.
struct StrainSamples {
  std::vector<double> values;
  std::vector<double> weights;

  double total_weight() const;
  double min_value() const;
  double max_value() const;
  // Strain window half-width R = 1.5 * max |value|; the support of the
  // empirical measure is contained in [-R, R] by construction.
  double window_halfwidth() const;
};

// Pool strains over (experiment, time, spring) in lexicographic order.
std::pair<MeasurementSet, StrainSamples> extract_strains(
    const ChainModel& model, const std::vector<Trajectory>& trajectories,
    const std::vector<double>& times);

// Weighted quantile of a sample set (midpoint convention with linear
// interpolation between order statistics).
double weighted_quantile(const StrainSamples& samples, double q);

struct Grid {
  std::vector<double> nodes;  // strictly increasing, contains 0
  bool has_zero = false;
  int zero_index = -1;
  double spacing_floor = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
};

// Grid with nodes at the K weighted quantiles q = 0, 1/(K-1), ..., 1 of the
// pooled samples, deduplicated to the spacing floor, with 0 inserted if
// absent.  Throws if the sample support is degenerate.
Grid adaptive_grid(const StrainSamples& samples, int node_count, double spacing_floor);

// 1-Wasserstein distance between the two empirical laws (sorted pairing of
// equal-weight resamples at the larger of the two sizes).
double w1_1d(const StrainSamples& a, const StrainSamples& b);

// Fixed 100-bin histogram layout over the strain window [-R, R].
struct StrainHistogram {
  static constexpr int bins = 100;
  double lo = 0.0, hi = 0.0;
  std::array<double, bins> mass{};

  double bin_width() const { return (hi - lo) / bins; }
  int bin_of(double s) const;  // -1 outside [lo, hi]
};

StrainHistogram strain_histogram(const StrainSamples& samples);

}  // namespace rodlearn
