// chain.hpp — discrete elastic chain: energy, gradient, Hessian, potentials.
//
// The chain has d free nodes x_1..x_d between two driven boundary values
// f1(t), f2(t).  Its energy is the sum of a scalar spring potential a()
// evaluated at the d+1 consecutive stretches ("strains").  Everything the
// forward solver and the reconstruction need — a, a', a'', the chain energy,
// its spatial gradient and its tridiagonal Hessian — lives here.

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace rodlearn {

using Vector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Spring potential catalogue
// ---------------------------------------------------------------------------

enum class PotentialKind { Quadratic, DoubleWell, Table };

// Scalar potential a : R -> R with evaluable first and second derivative.
//
//   Quadratic   a(s) = c s^2 / 2                         params = {c}
//   DoubleWell  a(s) = kappa (s^2-1)^2 / 4 + beta s^2/2  params = {kappa, beta}
//   Table       a' given as nodal values on a strictly increasing breakpoint
//               grid, piecewise linear in between, constant outside;
//               a is recovered by integration with a(0) = 0.
//               params = {s_1, a'_1, s_2, a'_2, ...}
class Potential {
public:
  Potential() : Potential(quadratic()) {}

  static Potential quadratic(double stiffness = 1.0);
  static Potential double_well(double kappa = 1.0, double beta = 0.0);
  // nodes strictly increasing; slopes = a' at nodes
  static Potential table(std::vector<double> nodes, std::vector<double> slopes);
  static Potential from_params(PotentialKind kind, const std::vector<double>& params);

  double value(double s) const;      // a(s)
  double slope(double s) const;      // a'(s)
  double curvature(double s) const;  // a''(s); table: left value at breakpoints

  PotentialKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

  // Validation checks for the admissible class on the window [-R, R]:
  //   * a >= 0 on the window
  //   * a' Lipschitz with constant <= m2 on the window
  //   * coercivity at the window ends: a(+-R) >= c1 R^p - c2
  //   * normalization a'(0) = 0
  // Returns one human-readable message per violated condition (empty = ok).
  std::vector<std::string> validate(double R, double m2, double c1 = 0.25,
                                    double c2 = 1.0, double p = 2.0) const;

private:
  Potential(PotentialKind k, std::vector<double> p) : kind_(k), params_(std::move(p)) {}
  void rebuild_table_cache();

  PotentialKind kind_;
  std::vector<double> params_;
  // Table cache: breakpoints, nodal slopes, and integrated values at nodes.
  std::vector<double> tnodes_, tslopes_, tvalues_;
};

// ---------------------------------------------------------------------------
// Boundary profiles
// ---------------------------------------------------------------------------

// Time profile for a driven boundary value: constant, linear ramp, or sinusoid.
struct BoundaryProfile {
  enum class Kind { Constant, Ramp, Sinusoid };

  Kind kind = Kind::Constant;
  double c0 = 0.0;         // offset
  double rate = 0.0;       // ramp: c0 + rate * t
  double amplitude = 0.0;  // sinusoid: c0 + amplitude * sin(omega * t)
  double omega = 0.0;

  static BoundaryProfile constant(double c);
  static BoundaryProfile ramp(double c0, double rate);
  static BoundaryProfile sinusoid(double c0, double amplitude, double omega);

  double value(double t) const;
  double derivative(double t) const;
};

// ---------------------------------------------------------------------------
// Chain model
// ---------------------------------------------------------------------------

struct ChainModel {
  int d = 10;                     // number of free nodes
  BoundaryProfile f1 = BoundaryProfile::constant(0.0);
  BoundaryProfile f2 = BoundaryProfile::ramp(1.0, 1.0);
  Potential potential = Potential::quadratic();

  // Admissible-class metadata: strain window half-width (0 = determined at
  // run time from the observed ensemble) and sup bounds for a', a''.
  double strain_halfwidth = 0.0;
  double bound_m1 = 1000.0;
  double bound_m2 = 1000.0;
};

// Forward difference of consecutive entries: y in R^(d+2) -> R^(d+1).
Vector discrete_gradient(const Vector& y);

// e_t(x) = (f1(t), x_1, ..., x_d, f2(t)) in R^(d+2).
Vector embed(const ChainModel& model, double t, const Vector& x);

// D e_t(x): the d+1 spring stretches at time t.
Vector strains(const ChainModel& model, double t, const Vector& x);

// w in R^(d+1) -> R^d with components w_i - w_{i+1}; kernel = constants.
Vector dbar_transpose(const Vector& w);

// E(t,x) = sum_j a((D e_t(x))_j)
double energy(const ChainModel& model, double t, const Vector& x);

// (grad E)_i = a'(strain_i) - a'(strain_{i+1})
Vector grad_x_energy(const ChainModel& model, double t, const Vector& x);

// Ebar(t,x,u) = E(t,x) - u.x
double corrected_energy(const ChainModel& model, double t, const Vector& x,
                        const Vector& u);

// d/dt E(t,x) = -f1'(t) a'(strain_1) + f2'(t) a'(strain_{d+1})
double partial_t_energy(const ChainModel& model, double t, const Vector& x);

// Symmetric tridiagonal Hessian of E(t,.):
//   diag_i = a''(strain_i) + a''(strain_{i+1}),  off_i = -a''(strain_{i+1}).
void hessian_tridiagonal(const ChainModel& model, double t, const Vector& x,
                         Vector& diag, Vector& off);

}  // namespace rodlearn
