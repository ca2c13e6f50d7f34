// recon.hpp — constrained least-squares reconstruction of the potential slope
//
// The competitor a'hat is piecewise linear on the adaptive grid.  Every
// measurement block contributes d sparse rows (at most 4 nonzeros each) to
// the system  min ||M c - Y||^2  subject to  |c|_inf <= M1,
// |D_Lambda c|_inf <= M2  and the pin  a'hat(0) = 0.  The solver is ADMM
// with one auxiliary block per norm constraint, each projected onto its
// infinity-ball.

#pragma once

#include "rodlearn/ensemble.hpp"

namespace rodlearn {

// Continuous piecewise-linear function on the grid; constant extrapolation
// by the boundary nodal value outside [p_1, p_K].
struct PwLinearFn {
  Grid grid;
  Vector coeffs;  // nodal values, length K

  double operator()(double r) const;
  // derivative; piecewise constant, left value at nodes, zero outside
  double derivative(double r) const;
};

// Hat basis function of node k (0-based) evaluated at clamp(r, p_1, p_K).
// The hats form a partition of unity.
double hat_eval(const Grid& grid, int k, double r);

// Grid gradient (K-1) x K: row k = (1/delta_k, -1/delta_k) at columns
// (k, k+1) with delta_k = p_{k+1} - p_k.  Applied to nodal values of a'hat
// it gives the piecewise-constant coefficients bounding a''hat.
Eigen::MatrixXd grid_gradient_operator(const Grid& grid);

// Row-sparse least-squares system; at most 4 nonzeros per row.
struct SparseLsq {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // CSR, size rows+1
  std::vector<int> col;
  std::vector<double> val;
  Vector rhs;
  int clamp_count = 0;  // strain evaluations clamped to [p_1, p_K]

  int max_row_nnz() const;
  Vector multiply(const Vector& c) const;             // M c
  Eigen::MatrixXd normal_matrix() const;              // M^T M (dense)
  Vector normal_rhs() const;                          // M^T Y
  double rhs_sq() const { return rhs.squaredNorm(); }
  double objective(const Vector& c) const;            // ||M c - Y||^2
};

// Which data vector the rows carry: the true slope at the measured strains
// (the quadratic objective as written) or the observed control (what the
// discrepancy functional actually evaluates; differs by O(sqrt(eps))).
enum class DataMode { Paper, Observational };

// Block row (i,m) = sqrt(Delta_m/N) * DbarT * [phi_k(z_j)]_{j,k}; the rhs in
// Paper mode is sqrt(Delta_m/N) * DbarT * [a'(z_j)]_j, in Observational mode
// sqrt(Delta_m/N) * u0^i.  Strains outside the grid are clamped and counted.
SparseLsq assemble(const ChainModel& model, const MeasurementSet& measurements,
                   const Grid& grid, DataMode mode = DataMode::Paper);

struct SolveConfig {
  double m1 = 1000.0;  // sup bound on a'hat
  double m2 = 1000.0;  // sup bound on the grid gradient of a'hat
  double rho = 1.0;    // ADMM penalty
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  int max_iter = 50000;
  int pin_node = -1;  // index of the node 0 in the grid (-1 = locate it)

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  std::vector<double> primal_history;  // one entry per iteration
};

struct SolveError : std::runtime_error {
  SolveError(const std::string& msg, double primal, double dual)
      : std::runtime_error(msg), primal_residual(primal), dual_residual(dual) {}
  double primal_residual;
  double dual_residual;
};

// Minimize ||M c - Y||^2 over the box/slope-constrained class with the pin
// coefficient eliminated.  Deterministic given inputs; throws SolveError
// carrying the residuals when max_iter is exceeded.
PwLinearFn solve_constrained_ls(const SparseLsq& sys, const Grid& grid,
                                const SolveConfig& cfg, SolveReport* report = nullptr);

// Pinned unconstrained least-squares solution (normal equations with the pin
// coefficient eliminated); reference point for constraint-activity checks.
Vector pinned_least_squares(const SparseLsq& sys, const Grid& grid, int pin_node = -1);

// Piecewise-quadratic antiderivative  ahat(r) = int_0^r a'hat(s) ds.
struct PwQuadratic {
  std::vector<double> nodes;
  std::vector<double> values;  // ahat at nodes
  std::vector<double> slopes;  // a'hat at nodes

  double operator()(double r) const;
};

PwQuadratic integrate_aprime(const PwLinearFn& fn);

// Sup and weighted-L2 distance between a'hat and the true slope, restricted
// to the [q_lo, q_hi] weighted-quantile band of the samples.
struct ReconError {
  double sup = 0.0;
  double weighted_l2 = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
};

ReconError reconstruction_error(const PwLinearFn& fn, const Potential& truth,
                                const StrainSamples& samples, double q_lo = 0.1,
                                double q_hi = 0.9);

}  // namespace rodlearn
