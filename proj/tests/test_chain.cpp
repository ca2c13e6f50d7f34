#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rodlearn/chain.hpp"

using namespace rodlearn;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ChainModel quadratic_model(int d, BoundaryProfile f1, BoundaryProfile f2) {
  ChainModel m;
  m.d = d;
  m.f1 = f1;
  m.f2 = f2;
  m.potential = Potential::quadratic();
  return m;
}

}  // namespace

TEST_CASE("discrete gradient takes consecutive differences") {
  CHECK(discrete_gradient(vec({0, 1, 3, 6})).isApprox(vec({1, 2, 3})));
  CHECK(discrete_gradient(vec({4, 4, 4, 4, 4})).isZero(0.0));
  CHECK(discrete_gradient(vec({0, 1, 0})).isApprox(vec({1, -1})));
  CHECK_THROWS_AS(discrete_gradient(vec({1})), DimensionError);
}

TEST_CASE("energy matches the hand-computed values") {
  auto m = quadratic_model(2, BoundaryProfile::constant(0.0), BoundaryProfile::constant(1.0));
  // uniform strain 1/3 through three springs
  CHECK(energy(m, 0.0, vec({1.0 / 3.0, 2.0 / 3.0})) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  // zero strain: every x_i at f1(0) = f2(0)
  auto z = quadratic_model(3, BoundaryProfile::constant(0.5), BoundaryProfile::constant(0.5));
  CHECK(energy(z, 0.0, vec({0.5, 0.5, 0.5})) == doctest::Approx(0.0));

  // double-well strains sitting at the well bottoms
  ChainModel dw;
  dw.d = 1;
  dw.f1 = BoundaryProfile::constant(0.0);
  dw.f2 = BoundaryProfile::constant(2.0);
  dw.potential = Potential::double_well(1.0, 0.0);
  CHECK(energy(dw, 0.0, vec({1.0})) == doctest::Approx(0.0));
}

TEST_CASE("gradient matches the componentwise differences of slopes") {
  auto m = quadratic_model(2, BoundaryProfile::constant(0.0), BoundaryProfile::constant(1.0));
  // strains (0.5, 0.1, 0.4) -> (0.4, -0.3)
  CHECK(grad_x_energy(m, 0.0, vec({0.5, 0.6})).isApprox(vec({0.4, -0.3}), 1e-14));
  // uniform strain: equal slopes cancel
  CHECK(grad_x_energy(m, 0.0, vec({1.0 / 3.0, 2.0 / 3.0})).lpNorm<Eigen::Infinity>() ==
        doctest::Approx(0.0));
}

TEST_CASE("gradient agrees with the finite-difference oracle across the catalogue") {
  std::vector<Potential> catalogue = {
      Potential::quadratic(1.0), Potential::quadratic(2.5),
      Potential::double_well(1.0, 0.0), Potential::double_well(2.0, 0.3),
      Potential::table({-2.0, -0.5, 0.0, 0.7, 2.0}, {-1.2, -0.4, 0.0, 0.9, 1.4})};
  oracles::TestRng rng(42);
  for (const auto& pot : catalogue) {
    ChainModel m;
    m.d = 5;
    m.f1 = BoundaryProfile::ramp(0.0, 0.5);
    m.f2 = BoundaryProfile::sinusoid(1.0, 0.3, 2.0);
    m.potential = pot;
    for (int trial = 0; trial < 3; ++trial) {
      Vector x(m.d);
      for (int i = 0; i < m.d; ++i) x(i) = rng.uniform(-0.8, 1.2);
      const double t = rng.uniform(0.0, 1.0);
      const Vector g = grad_x_energy(m, t, x);
      const Vector fd = oracles::fd_gradient(m, t, x);
      const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
      CHECK((g - fd).lpNorm<Eigen::Infinity>() / scale < 1e-6);
    }
  }
}

TEST_CASE("corrected energy subtracts the control action") {
  auto m = quadratic_model(2, BoundaryProfile::constant(0.0), BoundaryProfile::constant(1.0));
  const Vector x = vec({0.5, 0.6});
  const Vector u = vec({0.4, -0.3});
  // E = 0.125 + 0.005 + 0.08 = 0.21, u.x = 0.02
  CHECK(corrected_energy(m, 0.0, x, u) == doctest::Approx(0.19).epsilon(1e-12));
  CHECK(corrected_energy(m, 0.0, x, Vector::Zero(2)) == doctest::Approx(energy(m, 0.0, x)));
  CHECK(corrected_energy(m, 0.0, Vector::Zero(2), u) ==
        doctest::Approx(energy(m, 0.0, Vector::Zero(2))));
}

TEST_CASE("kernel of dbar_transpose is exactly the constants") {
  oracles::TestRng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(6);
    for (int i = 0; i < 6; ++i) w(i) = rng.uniform(-2.0, 2.0);
    const double c = rng.uniform(-5.0, 5.0);
    const Vector shifted = w.array() + c;
    CHECK((dbar_transpose(shifted) - dbar_transpose(w)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  CHECK(dbar_transpose(Vector::Constant(5, 3.7)).isZero(1e-15));
  // nonconstant vectors do not vanish
  CHECK(dbar_transpose(vec({1, 2, 1})).lpNorm<Eigen::Infinity>() > 0.5);
}

TEST_CASE("adding a constant to the potential shifts the energy by (d+1)c exactly") {
  ChainModel base;
  base.d = 4;
  base.f1 = BoundaryProfile::constant(0.0);
  base.f2 = BoundaryProfile::ramp(1.0, 1.0);
  base.potential = Potential::double_well(1.0, 0.2);
  const Vector x = vec({0.1, 0.3, 0.2, 0.6});
  const double t = 0.5;

  // shift a by c spring-wise and re-sum: the energy moves by exactly (d+1)c
  for (double c : {0.37, -2.0, 11.0}) {
    const Vector s = strains(base, t, x);
    double shifted = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j)
      shifted += base.potential.value(s(j)) + c;
    CHECK(shifted - energy(base, t, x) ==
          doctest::Approx((base.d + 1) * c).epsilon(1e-13));
  }

  // the gradient ignores the constant entirely: identical slope data gives
  // bitwise-identical gradients no matter how the values are anchored
  std::vector<double> nodes, slopes;
  for (int i = 0; i <= 200; ++i) {
    const double s = -3.0 + 6.0 * i / 200.0;
    nodes.push_back(s);
    slopes.push_back(base.potential.slope(s));
  }
  ChainModel tab = base;
  tab.potential = Potential::table(nodes, slopes);
  ChainModel tab2 = base;
  std::vector<double> shifted_slopes = slopes;  // same a', different history
  tab2.potential = Potential::table(nodes, shifted_slopes);
  CHECK(grad_x_energy(tab, t, x) == grad_x_energy(tab2, t, x));

  // and the table's value differs from the true a by the constant a(0),
  // up to the piecewise-linear interpolation error of a'
  const double gap = base.potential.value(0.0);
  const double e_gap = energy(base, t, x) - energy(tab, t, x);
  CHECK(e_gap == doctest::Approx((base.d + 1) * gap).epsilon(1e-3));
}

TEST_CASE("constant boundary profiles make the energy time independent") {
  auto m = quadratic_model(3, BoundaryProfile::constant(0.2), BoundaryProfile::constant(1.4));
  const Vector x = vec({0.4, 0.7, 1.1});
  for (double t : {0.0, 0.25, 0.9})
    CHECK(energy(m, t, x) == doctest::Approx(energy(m, 0.0, x)).epsilon(1e-15));
}

TEST_CASE("partial_t_energy matches a finite difference in time") {
  ChainModel m;
  m.d = 3;
  m.f1 = BoundaryProfile::ramp(0.0, 0.7);
  m.f2 = BoundaryProfile::sinusoid(1.0, 0.4, 3.0);
  m.potential = Potential::double_well(1.0, 0.1);
  const Vector x = vec({0.2, 0.5, 0.8});
  const double h = 1e-7;
  for (double t : {0.1, 0.5}) {
    const double fd = (energy(m, t + h, x) - energy(m, t - h, x)) / (2 * h);
    CHECK(partial_t_energy(m, t, x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("potential validation flags the admissibility violations") {
  // quadratic within generous bounds: clean
  CHECK(Potential::quadratic().validate(2.0, 10.0).empty());
  // Lipschitz bound on the slope can be exceeded
  CHECK(!Potential::quadratic(50.0).validate(2.0, 10.0).empty());
  // negativity: a table slope profile integrating to negative values
  auto dipped = Potential::table({-1.0, 0.0, 1.0}, {5.0, 0.0, -5.0});
  CHECK(!dipped.validate(1.0, 100.0).empty());
  // pin violation a'(0) != 0
  auto off = Potential::table({-1.0, 1.0}, {1.0, 1.0});
  CHECK(!off.validate(1.0, 100.0).empty());
}

TEST_CASE("table potentials reproduce their nodal data and extrapolate flat") {
  auto p = Potential::table({-1.0, 0.0, 2.0}, {-3.0, 0.0, 4.0});
  CHECK(p.slope(-1.0) == doctest::Approx(-3.0));
  CHECK(p.slope(1.0) == doctest::Approx(2.0));
  CHECK(p.slope(5.0) == doctest::Approx(4.0));   // constant extrapolation
  CHECK(p.slope(-9.0) == doctest::Approx(-3.0));
  CHECK(p.value(0.0) == doctest::Approx(0.0));
  // a'' is the segment slope, left value at breakpoints, zero outside
  CHECK(p.curvature(-0.5) == doctest::Approx(3.0));
  CHECK(p.curvature(1.0) == doctest::Approx(2.0));
  CHECK(p.curvature(2.0) == doctest::Approx(2.0));
  CHECK(p.curvature(2.5) == doctest::Approx(0.0));
}
