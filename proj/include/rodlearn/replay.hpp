// replay.hpp — data-driven evolutions with the learned potential
//
// The reconstructed slope a'hat is wrapped into a table potential (constant
// extrapolation outside the grid) so that the same stiff integrator runs the
// learned dynamics.  Deviation diagnostics compare learned and true
// trajectories and measure how far a trajectory strays from the strains the
// training data actually visited.

#pragma once

#include "rodlearn/recon.hpp"

namespace rodlearn {

// Chain model driven by the learned slope; boundary profiles and dimensions
// are copied from the base model.  Newton uses the piecewise-constant slope
// of a'hat (left value at nodes, zero outside the grid).
ChainModel learned_model(const ChainModel& base, const PwLinearFn& aprime_hat);

// Trajectory of  eps xdot = -grad Ehat(t, x) + u0  (same contract as
// integrate; replay itself uses no randomness).
Trajectory replay(const ChainModel& learned, const FlowParams& params,
                  const Vector& x0, const Vector& u0);

struct TrajectoryError {
  double max_sup = 0.0;  // max_t |a(t) - b(t)|_inf
  double l1_time = 0.0;  // int_0^T |a(t) - b(t)|_inf dt
};

// Error norms on the common time range; the second trajectory is resampled
// by linear interpolation when the grids differ.  Throws when the time
// ranges are disjoint.
TrajectoryError trajectory_error(const Trajectory& a, const Trajectory& b);

// Strain-space informativeness proxy: L1-in-time of the largest distance of
// any visited strain to the occupied histogram bins of the sample pool
// (clipped to the sample range).  Zero iff every visited strain lies in an
// occupied bin.
double support_distance(const ChainModel& model, const Trajectory& traj,
                        const StrainSamples& samples);

// Gronwall-shaped consistency bound (delta T / eps) exp(M T / eps) on the
// replay deviation; saturates to +infinity when the exponent overflows.
// Loose by construction; replay errors must never exceed it.
double replay_error_bound(double sup_slope_error, double lipschitz, double horizon,
                          double epsilon);

}  // namespace rodlearn
