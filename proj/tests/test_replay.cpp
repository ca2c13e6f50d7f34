#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rodlearn/ensemble.hpp"
#include "rodlearn/replay.hpp"

using namespace rodlearn;

namespace {

Grid make_grid(std::vector<double> nodes) {
  Grid g;
  g.nodes = std::move(nodes);
  const auto it = std::find(g.nodes.begin(), g.nodes.end(), 0.0);
  g.has_zero = it != g.nodes.end();
  g.zero_index = g.has_zero ? static_cast<int>(it - g.nodes.begin()) : -1;
  return g;
}

ChainModel quadratic_ramp(int d) {
  ChainModel m;
  m.d = d;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::ramp(1.0, 1.0);
  m.potential = Potential::quadratic();
  return m;
}

PwLinearFn nodal_interpolation(const Potential& pot, const Grid& g) {
  PwLinearFn fn;
  fn.grid = g;
  fn.coeffs = Vector(g.size());
  for (int k = 0; k < g.size(); ++k) fn.coeffs(k) = pot.slope(g.nodes[k]);
  return fn;
}

Trajectory resample(const Trajectory& traj, const std::vector<double>& times) {
  Trajectory out;
  out.epsilon = traj.epsilon;
  out.control = traj.control;
  out.times = times;
  for (double t : times) out.states.push_back(traj.state_at(t));
  return out;
}

}  // namespace

TEST_CASE("replay with the exact nodal slope matches the true flow") {
  ChainModel m = quadratic_ramp(5);
  // nodes cover every strain the ramp visits
  std::vector<double> nodes;
  for (int k = 0; k <= 60; ++k) nodes.push_back(-1.5 + 3.0 * k / 60.0);
  ChainModel learned = learned_model(m, nodal_interpolation(m.potential, make_grid(nodes)));

  FlowParams p;
  p.epsilon = 1e-3;
  p.horizon = 1.0;
  p.step = 2e-4;
  InitialLaw law{uniform_strain_mean(m), 0.05, 42};
  const auto [x0, u0] = sample_initial(m, law, 1).front();
  const Trajectory truth = integrate(m, p, x0, u0);
  const Trajectory fit = replay(learned, p, x0, u0);
  const TrajectoryError err = trajectory_error(truth, fit);
  // identical right-hand sides up to interpolation error of a linear slope
  CHECK(err.max_sup < 2.0 * p.newton_tol * 1e3 + 1e-10);
}

TEST_CASE("zero learned slope gives the straight-line-in-control flow") {
  ChainModel m = quadratic_ramp(3);
  PwLinearFn zero;
  zero.grid = make_grid({-1.0, 0.0, 1.0});
  zero.coeffs = Vector::Zero(3);
  const ChainModel learned = learned_model(m, zero);

  FlowParams p;
  p.epsilon = 1e-3;
  p.horizon = 5e-3;  // short horizon: the uncorrected drift is fast
  p.step = 2e-4;
  const Vector x0 = uniform_strain_mean(m);
  Vector u0(3);
  u0 << 0.3, -0.2, 0.1;
  const Trajectory fit = replay(learned, p, x0, u0);
  for (std::size_t k = 0; k < fit.size(); ++k) {
    const Vector expect = x0 + u0 * fit.times[k] / p.epsilon;
    CHECK((fit.states[k] - expect).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("replay is deterministic") {
  ChainModel m = quadratic_ramp(4);
  std::vector<double> nodes;
  for (int k = 0; k <= 30; ++k) nodes.push_back(-1.0 + 2.0 * k / 30.0);
  const ChainModel learned = learned_model(m, nodal_interpolation(m.potential, make_grid(nodes)));
  FlowParams p;
  p.epsilon = 2e-3;
  p.horizon = 0.3;
  p.step = 4e-4;
  const Vector x0 = uniform_strain_mean(m);
  const Vector u0 = grad_x_energy(m, 0.0, x0);
  const Trajectory a = replay(learned, p, x0, u0);
  const Trajectory b = replay(learned, p, x0, u0);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k] == b.states[k]);
}

TEST_CASE("trajectory error of identical and offset trajectories") {
  ChainModel m = quadratic_ramp(3);
  FlowParams p;
  p.epsilon = 5e-3;
  p.horizon = 0.5;
  p.step = 1e-3;
  const Vector x0 = uniform_strain_mean(m);
  const Vector u0 = grad_x_energy(m, 0.0, x0);
  const Trajectory traj = integrate(m, p, x0, u0);

  const TrajectoryError self = trajectory_error(traj, traj);
  CHECK(self.max_sup == 0.0);
  CHECK(self.l1_time == 0.0);

  Trajectory shifted = traj;
  const double delta = 0.37;
  for (auto& x : shifted.states) x.array() += delta;
  const TrajectoryError off = trajectory_error(traj, shifted);
  CHECK(off.max_sup == doctest::Approx(delta));
  CHECK(off.l1_time == doctest::Approx(delta * 0.5).epsilon(1e-9));
}

TEST_CASE("trajectory error is stable under resampling") {
  ChainModel m = quadratic_ramp(3);
  FlowParams fine;
  fine.epsilon = 5e-3;
  fine.horizon = 0.5;
  fine.step = 2.5e-4;
  FlowParams coarse = fine;
  coarse.step = 1e-3;
  const Vector x0 = uniform_strain_mean(m);
  Vector u0 = grad_x_energy(m, 0.0, x0);
  u0(1) += 0.05;  // generic start so the error is nonzero
  const Trajectory a = integrate(m, fine, x0, u0);
  const Trajectory b = integrate(m, coarse, x0, u0);

  const TrajectoryError direct = trajectory_error(a, b);
  // coarse-node evaluation: a lower bound, since the union grid refines it
  const Trajectory ar = resample(a, b.times);
  const TrajectoryError coarse_eval = trajectory_error(ar, b);
  CHECK(direct.max_sup >= coarse_eval.max_sup - 1e-15);
  // ... and the refinement can add at most one interpolation increment,
  // h_coarse times the deviation's time-Lipschitz constant
  double lip = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double da = (a.states[k + 1] - b.state_at(a.times[k + 1]) -
                       (a.states[k] - b.state_at(a.times[k])))
                          .lpNorm<Eigen::Infinity>();
    lip = std::max(lip, da / (a.times[k + 1] - a.times[k]));
  }
  const double hcoarse = 1e-3;
  CHECK(direct.max_sup <= coarse_eval.max_sup + hcoarse * lip + 1e-15);
  CHECK(direct.l1_time == doctest::Approx(coarse_eval.l1_time).epsilon(0.2).scale(1e-5));

  // identical grids: refining the evaluation grid changes nothing, the
  // piecewise-linear deviation peaks at shared nodes
  std::vector<double> fine_nodes;
  for (std::size_t k = 0; k + 1 < b.times.size(); ++k) {
    fine_nodes.push_back(b.times[k]);
    fine_nodes.push_back(0.5 * (b.times[k] + b.times[k + 1]));
  }
  fine_nodes.push_back(b.times.back());
  const Trajectory ar2 = resample(ar, fine_nodes);
  const Trajectory br2 = resample(b, fine_nodes);
  CHECK(trajectory_error(ar2, br2).max_sup == doctest::Approx(coarse_eval.max_sup));
}

TEST_CASE("trajectory error rejects disjoint time ranges") {
  Trajectory a, b;
  a.times = {0.0, 0.1};
  a.states = {Vector::Zero(2), Vector::Zero(2)};
  b.times = {0.5, 0.6};
  b.states = {Vector::Zero(2), Vector::Zero(2)};
  CHECK_THROWS_AS(trajectory_error(a, b), std::invalid_argument);
}

TEST_CASE("support distance vanishes on the training data itself") {
  ChainModel m = quadratic_ramp(4);
  FlowParams p;
  p.epsilon = 5e-3;
  p.horizon = 0.5;
  p.step = 1e-3;
  InitialLaw law{uniform_strain_mean(m), 0.08, 7};
  const auto trajs = run_experiments(m, p, sample_initial(m, law, 4));
  const auto times = measurement_times(trajs.front(), 12);
  const auto [ms, pool] = extract_strains(m, trajs, times);
  for (const auto& traj : trajs)
    CHECK(support_distance(m, resample(traj, times), pool) == 0.0);
}

TEST_CASE("support distance of a strain shifted outside the range is delta * T") {
  // stationary trajectory with one strain at distance delta from the range
  ChainModel m;
  m.d = 1;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::constant(0.4);
  m.potential = Potential::quadratic();

  StrainSamples pool;
  for (int i = 0; i <= 100; ++i) {
    pool.values.push_back(0.1 + 0.1 * i / 100.0);
    pool.weights.push_back(1.0);
  }
  Trajectory traj;
  traj.epsilon = 1e-3;
  traj.control = Vector::Zero(1);
  const double T = 0.8;
  for (int k = 0; k <= 8; ++k) {
    traj.times.push_back(T * k / 8.0);
    traj.states.push_back(Vector::Constant(1, 0.3));  // strains (0.3, 0.1)
  }
  // dist(0.3, [0.1, 0.2]) = 0.1, dist(0.1, ...) = 0 -> max = 0.1
  CHECK(support_distance(m, traj, pool) == doctest::Approx(0.1 * T).epsilon(1e-9));
}

TEST_CASE("out-of-distribution starts score positive support distance") {
  ChainModel m;
  m.d = 4;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::ramp(1.0, 1.0);
  m.potential = Potential::double_well(1.0, 0.0);
  FlowParams p;
  p.epsilon = 2e-3;
  p.horizon = 0.5;
  p.step = 4e-4;
  InitialLaw law{uniform_strain_mean(m), 0.05, 3};
  const auto trajs = run_experiments(m, p, sample_initial(m, law, 5));
  const auto times = measurement_times(trajs.front(), 15);
  const auto [ms, pool] = extract_strains(m, trajs, times);

  Vector x0 = uniform_strain_mean(m);
  for (int i = 0; i < m.d; ++i) x0(i) += (i % 2 ? -1.0 : 1.0);  // zigzag kick
  const Vector u0 = grad_x_energy(m, 0.0, x0);
  const Trajectory ood = integrate(m, p, x0, u0);
  CHECK(support_distance(m, ood, pool) > 0.0);
}

TEST_CASE("stationary replay with the learned gradient stays put") {
  ChainModel m;
  m.d = 4;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::constant(1.2);
  m.potential = Potential::double_well(1.0, 0.0);
  std::vector<double> nodes;
  for (int k = 0; k <= 40; ++k) nodes.push_back(-2.0 + 4.0 * k / 40.0);
  const ChainModel learned = learned_model(m, nodal_interpolation(m.potential, make_grid(nodes)));
  FlowParams p;
  p.epsilon = 1e-3;
  p.horizon = 0.5;
  p.step = 2e-4;
  Vector x0 = uniform_strain_mean(m);
  x0(1) += 0.2;
  // equilibrium of the learned energy, not the true one
  const Vector u0 = grad_x_energy(learned, 0.0, x0);
  const Trajectory traj = replay(learned, p, x0, u0);
  for (const auto& x : traj.states)
    CHECK((x - x0).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("replay error bound saturates instead of overflowing and is respected") {
  CHECK(std::isinf(replay_error_bound(1e-3, 4.0, 1.0, 1e-3)));
  const double finite = replay_error_bound(1e-3, 0.5, 1.0, 0.2);
  CHECK(std::isfinite(finite));
  CHECK(finite > 0.0);

  // quadratic end-to-end style check: deviation under the Gronwall envelope
  ChainModel m = quadratic_ramp(4);
  std::vector<double> nodes;
  for (int k = 0; k <= 50; ++k) nodes.push_back(-1.0 + 2.5 * k / 50.0);
  PwLinearFn fn = nodal_interpolation(m.potential, make_grid(nodes));
  fn.coeffs.array() += 1e-4;  // a deliberate slope error of known size
  fn.coeffs(fn.grid.zero_index) = 0.0;
  const ChainModel learned = learned_model(m, fn);
  FlowParams p;
  p.epsilon = 2e-3;
  p.horizon = 0.4;
  p.step = 4e-4;
  const Vector x0 = uniform_strain_mean(m);
  const Vector u0 = grad_x_energy(m, 0.0, x0);
  const TrajectoryError err =
      trajectory_error(integrate(m, p, x0, u0), replay(learned, p, x0, u0));
  const double bound = replay_error_bound(2e-4, 4.0, p.horizon, p.epsilon);
  CHECK(err.max_sup <= bound);
}
