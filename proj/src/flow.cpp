#include "rodlearn/flow.hpp"

#include <algorithm>
#include <cmath>

namespace rodlearn {

void FlowParams::validate() const {
  if (epsilon <= 0.0) throw std::invalid_argument("flow.epsilon must be > 0");
  if (horizon <= 0.0) throw std::invalid_argument("flow horizon must be > 0");
  if (newton_tol <= 0.0) throw std::invalid_argument("flow.newton_tol must be > 0");
  if (newton_max_iter < 1) throw std::invalid_argument("flow.newton_max_iter must be >= 1");
  if (step > epsilon / 5.0 * (1.0 + 1e-12))
    throw std::invalid_argument("flow.step must satisfy h <= epsilon/5");
}

Vector Trajectory::state_at(double t) const {
  if (times.empty()) throw std::invalid_argument("empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - w) * states[k] + w * states[k + 1];
}

namespace {

// Solve the tridiagonal system (diag, off symmetric) * x = rhs with partial
// pivoting; the Newton matrix can be indefinite for nonconvex potentials.
Vector solve_tridiagonal(Vector diag, Vector off, Vector rhs) {
  const int n = static_cast<int>(diag.size());
  if (n == 1) return Vector::Constant(1, rhs(0) / diag(0));
  // Rows carry up to three entries after pivoting: (d_i, e_i, f_i) at
  // columns (i, i+1, i+2).
  Vector lower = off;  // sub-diagonal (columns i on row i+1)
  Vector upper = off;  // super-diagonal
  Vector upper2 = Vector::Zero(n);
  for (int i = 0; i < n - 1; ++i) {
    if (std::abs(lower(i)) > std::abs(diag(i))) {
      std::swap(diag(i), lower(i));
      const double tu = upper(i);
      upper(i) = diag(i + 1);
      diag(i + 1) = tu;
      if (i + 2 < n) {
        upper2(i) = upper(i + 1);
        upper(i + 1) = 0.0;
      }
      std::swap(rhs(i), rhs(i + 1));
    }
    const double m = lower(i) / diag(i);
    diag(i + 1) -= m * upper(i);
    if (i + 2 < n) upper(i + 1) -= m * upper2(i);
    rhs(i + 1) -= m * rhs(i);
  }
  Vector x(n);
  x(n - 1) = rhs(n - 1) / diag(n - 1);
  if (n >= 2) x(n - 2) = (rhs(n - 2) - upper(n - 2) * x(n - 1)) / diag(n - 2);
  for (int i = n - 3; i >= 0; --i)
    x(i) = (rhs(i) - upper(i) * x(i + 1) - upper2(i) * x(i + 2)) / diag(i);
  return x;
}

Vector step_residual(const ChainModel& model, double eps, double h, double t1,
                     const Vector& xprev, const Vector& x, const Vector& u0) {
  return (eps / h) * (x - xprev) + grad_x_energy(model, t1, x) - u0;
}

}  // namespace

Trajectory integrate(const ChainModel& model, const FlowParams& params,
                     const Vector& x0, const Vector& u0) {
  params.validate();
  if (x0.size() != model.d || u0.size() != model.d)
    throw DimensionError("integrate: state/control must have length d");

  const double eps = params.epsilon;
  const double h = params.effective_step();
  const double T = params.horizon;
  const int nsteps = std::max(1, static_cast<int>(std::ceil(T / h - 1e-9)));

  Trajectory traj;
  traj.epsilon = eps;
  traj.control = u0;
  traj.times.reserve(nsteps + 1);
  traj.states.reserve(nsteps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Vector x = x0;
  Vector diag(model.d), off(std::max(model.d - 1, 0));
  for (int k = 0; k < nsteps; ++k) {
    const double t1 = std::min((k + 1) * h, T);
    const double hk = t1 - traj.times.back();
    const Vector xprev = x;

    if (params.method == StepMethod::SemiImplicit) {
      // one linearized solve about the previous state
      hessian_tridiagonal(model, t1, xprev, diag, off);
      diag.array() += eps / hk;
      const Vector r = grad_x_energy(model, t1, xprev) - u0;
      x = xprev - solve_tridiagonal(diag, off, r);
    } else {
      Vector r = step_residual(model, eps, hk, t1, xprev, x, u0);
      double rnorm = r.lpNorm<Eigen::Infinity>();
      int iter = 0;
      while (rnorm > params.newton_tol) {
        if (++iter > params.newton_max_iter)
          throw IntegrationError("Newton failed to reach tolerance (residual " +
                                     std::to_string(rnorm) + ") at t = " +
                                     std::to_string(t1),
                                 t1);
        hessian_tridiagonal(model, t1, x, diag, off);
        Vector jdiag = diag;
        jdiag.array() += eps / hk;
        const Vector dx = solve_tridiagonal(jdiag, off, -r);
        // backtracking on the residual norm; accept the smallest tried step
        // if no decrease is found (kinks of table potentials)
        double alpha = 1.0;
        Vector xtrial, rtrial;
        double rtnorm = rnorm;
        while (alpha >= 1.0 / 64.0) {
          xtrial = x + alpha * dx;
          rtrial = step_residual(model, eps, hk, t1, xprev, xtrial, u0);
          rtnorm = rtrial.lpNorm<Eigen::Infinity>();
          if (rtnorm < rnorm) break;
          alpha *= 0.5;
        }
        x = xtrial;
        r = rtrial;
        rnorm = rtnorm;
      }
    }
    traj.times.push_back(t1);
    traj.states.push_back(x);
  }
  return traj;
}

namespace {

// One-sided finite-difference velocities on the step grid: forward
// differences, with the last node reusing the final interval.
std::vector<Vector> fd_velocities(const Trajectory& traj) {
  const std::size_t n = traj.size();
  std::vector<Vector> v(n);
  for (std::size_t k = 0; k + 1 < n; ++k)
    v[k] = (traj.states[k + 1] - traj.states[k]) / (traj.times[k + 1] - traj.times[k]);
  v[n - 1] = v[n - 2];
  return v;
}

}  // namespace

double energy_balance_residual(const ChainModel& model, const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 2) return 0.0;
  const double eps = traj.epsilon;
  const auto v = fd_velocities(traj);

  std::vector<double> ebar(n), dte(n), gradsq(n), velsq(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = traj.times[k];
    const Vector& x = traj.states[k];
    ebar[k] = corrected_energy(model, t, x, traj.control);
    dte[k] = partial_t_energy(model, t, x);
    const Vector g = grad_x_energy(model, t, x) - traj.control;
    gradsq[k] = g.squaredNorm();
    velsq[k] = v[k].squaredNorm();
  }

  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    const double res = ebar[k + 1] - ebar[k] - 0.5 * h * (dte[k] + dte[k + 1]) +
                       0.25 * eps * h * (velsq[k] + velsq[k + 1]) +
                       0.25 / eps * h * (gradsq[k] + gradsq[k + 1]);
    worst = std::max(worst, std::abs(res) / h);
  }
  return worst;
}

double dissipation(const ChainModel& model, const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 2) return 0.0;
  const double eps = traj.epsilon;
  const auto v = fd_velocities(traj);
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector g = grad_x_energy(model, traj.times[k], traj.states[k]) - traj.control;
    f[k] = 0.5 * eps * v[k].squaredNorm() + 0.5 / eps * g.squaredNorm();
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    total += 0.5 * (f[k] + f[k + 1]) * (traj.times[k + 1] - traj.times[k]);
  return total;
}

double criticality_defect(const ChainModel& model, const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 2) return 0.0;
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector g = grad_x_energy(model, traj.times[k], traj.states[k]) - traj.control;
    f[k] = g.squaredNorm();
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    total += 0.5 * (f[k] + f[k + 1]) * (traj.times[k + 1] - traj.times[k]);
  return total;
}

double gronwall_state_bound(const ChainModel& model, const FlowParams& params,
                            const Vector& x0, const Vector& u0) {
  // Along the flow  d/dt Ebar <= dt_E <= cf * c_a * (E + 2)  and
  // E <= 2 Ebar + c_u, so Ebar(t) <= (Ebar(0) + b t) e^{g t} with
  // g = 2 cf c_a and b = cf c_a (c_u + 2).  From the energy bound each
  // spring satisfies a(s_j) <= Emax, which caps |s_j| and hence |x_i|.
  const double T = params.horizon;
  double cf = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = T * i / 200.0;
    cf = std::max(cf, std::abs(model.f1.derivative(t)) + std::abs(model.f2.derivative(t)));
  }
  // scan a wide strain window for the (a2)-style constant and coercivity
  const Vector s0 = strains(model, 0.0, x0);
  double swide = 10.0 * std::max(1.0, s0.lpNorm<Eigen::Infinity>());
  double ca = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double s = -swide + 2.0 * swide * i / 4000.0;
    ca = std::max(ca, std::abs(model.potential.slope(s)) /
                          (1.0 + std::abs(model.potential.value(s))));
  }
  const double ebar0 = corrected_energy(model, 0.0, x0, u0);
  // E <= 2 Ebar + c_u with c_u = |u|^2/2 + ... ; use c_u = |u|^2 + 1 (Young)
  const double cu = u0.squaredNorm() + 1.0;
  const double g = 2.0 * cf * ca + 1e-12;
  const double b = cf * ca * (cu + 2.0);
  const double ebar_max = (std::abs(ebar0) + b * T) * std::exp(g * T);
  const double e_max = 2.0 * ebar_max + cu;
  // invert a(s) <= e_max over the window (monotone scan outward from 0)
  double smax = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double s = 2.0 * swide * i / 4000.0;
    if (model.potential.value(s) <= e_max || model.potential.value(-s) <= e_max)
      smax = s;
  }
  double fmax = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = T * i / 200.0;
    fmax = std::max({fmax, std::abs(model.f1.value(t)), std::abs(model.f2.value(t))});
  }
  return fmax + model.d * smax;
}

}  // namespace rodlearn
