// flow.hpp — singularly perturbed controlled gradient flow
//
//   eps * xdot(t) = -grad_x E(t, x(t)) + u0,   x(0) = x0,
//
// integrated by implicit Euler with damped Newton (the flow is stiff with
// time scale eps), plus the energy-balance and dissipation diagnostics
// evaluated along discrete trajectories.

#pragma once

#include "rodlearn/chain.hpp"

namespace rodlearn {

enum class StepMethod { ImplicitEuler, SemiImplicit };

struct FlowParams {
  double epsilon = 1e-3;
  double horizon = 1.0;  // T
  double step = 0.0;     // base time step h; 0 = epsilon/5
  StepMethod method = StepMethod::ImplicitEuler;
  double newton_tol = 1e-11;
  int newton_max_iter = 50;

  double effective_step() const { return step > 0.0 ? step : epsilon / 5.0; }
  // h <= epsilon/5 stability margin, positive tolerances
  void validate() const;
};

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, double t)
      : std::runtime_error(msg), time(t) {}
  double time;
};

struct Trajectory {
  std::vector<double> times;   // strictly increasing, t0 = 0
  std::vector<Vector> states;  // one state per time
  Vector control;              // u0, constant in time
  double epsilon = 0.0;

  std::size_t size() const { return times.size(); }
  // linear interpolation in time; clamps outside [t_front, t_back]
  Vector state_at(double t) const;
};

// Discrete solution of the controlled flow on the uniform step grid.
// Each implicit step satisfies
//   | eps*(x_{k+1}-x_k)/h + grad_x E(t_{k+1}, x_{k+1}) - u0 |_inf <= newton_tol.
// Throws IntegrationError with the failing time if Newton stalls.
Trajectory integrate(const ChainModel& model, const FlowParams& params,
                     const Vector& x0, const Vector& u0);

// Max over step intervals, normalized per unit time, of the defect in the
// energy balance
//   Ebar(t) - Ebar(s) = int ds Ebar_t - eps/2 int |xdot|^2 - 1/(2 eps) int |grad Ebar|^2
// with trapezoidal quadrature and one-sided finite-difference velocities.
double energy_balance_residual(const ChainModel& model, const Trajectory& traj);

// Energy dissipated along the trajectory,
//   int_0^T eps/2 |xdot|^2 + 1/(2 eps) |grad Ebar|^2 dt,
// by trapezoidal quadrature with one-sided finite-difference velocities.
// Stays O(eps) on smooth loading and stays bounded across jumps.
double dissipation(const ChainModel& model, const Trajectory& traj);

// Criticality defect int_0^T |grad_x E(t, x(t)) - u0|^2 dt (trapezoid);
// bounded by Cbar * eps along eps-flows.
double criticality_defect(const ChainModel& model, const Trajectory& traj);

// A-priori sup bound for |x_i(t)| along the flow, derived by a Gronwall
// estimate on the corrected energy plus spring-wise coercivity.  Loose by
// construction; used as a safety invariant on integrated states.
double gronwall_state_bound(const ChainModel& model, const FlowParams& params,
                            const Vector& x0, const Vector& u0);

}  // namespace rodlearn
