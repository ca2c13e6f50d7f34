#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rodlearn/ensemble.hpp"

using namespace rodlearn;

namespace {

ChainModel quadratic_ramp(int d) {
  ChainModel m;
  m.d = d;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::ramp(1.0, 1.0);
  m.potential = Potential::quadratic();
  return m;
}

FlowParams fast_params(double eps = 5e-3, double T = 0.5) {
  FlowParams p;
  p.epsilon = eps;
  p.horizon = T;
  p.step = eps / 5.0;
  return p;
}

StrainSamples make_samples(std::vector<double> values, double w = 1.0) {
  StrainSamples s;
  s.weights.assign(values.size(), w);
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST_CASE("degenerate law collapses to the mean and repeats bitwise") {
  ChainModel m = quadratic_ramp(4);
  InitialLaw law{uniform_strain_mean(m), 0.0, 99};
  const auto a = sample_initial(m, law, 5);
  for (const auto& [x0, u0] : a) {
    CHECK(x0 == law.mean);
    CHECK(u0 == a.front().second);
  }
  const auto b = sample_initial(m, law, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a[i].first == b[i].first);  // bitwise determinism
    CHECK(a[i].second == b[i].second);
  }
}

TEST_CASE("sampled controls are exactly the initial gradients") {
  ChainModel m = quadratic_ramp(5);
  InitialLaw law{uniform_strain_mean(m), 0.2, 7};
  for (const auto& [x0, u0] : sample_initial(m, law, 8))
    CHECK((u0 - grad_x_energy(m, 0.0, x0)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("empirical mean of many samples approaches the configured mean") {
  ChainModel m = quadratic_ramp(3);
  const double sigma = 0.5;
  InitialLaw law{uniform_strain_mean(m), sigma, 2024};
  const int n = 10000;
  Vector sum = Vector::Zero(m.d);
  for (const auto& [x0, u0] : sample_initial(m, law, n)) sum += x0;
  const Vector mean = sum / n;
  for (int i = 0; i < m.d; ++i)
    CHECK(std::abs(mean(i) - law.mean(i)) < 5.0 * sigma / 100.0);
}

TEST_CASE("run_experiments preserves order and tags failures") {
  ChainModel m = quadratic_ramp(3);
  InitialLaw law{uniform_strain_mean(m), 0.05, 5};
  const auto initials = sample_initial(m, law, 3);
  const auto trajs = run_experiments(m, fast_params(), initials);
  REQUIRE(trajs.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(trajs[i].states.front() == initials[i].first);

  FlowParams bad = fast_params();
  bad.newton_tol = 1e-18;
  bad.newton_max_iter = 1;
  ChainModel hard = m;
  hard.potential = Potential::double_well(4.0, 0.0);
  auto hard_initials = sample_initial(hard, InitialLaw{uniform_strain_mean(hard), 0.05, 5}, 2);
  try {
    run_experiments(hard, bad, hard_initials);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(std::string(e.what()).find("experiment") != std::string::npos);
  }
}

TEST_CASE("stationary ensemble pools a single strain value") {
  ChainModel m;
  m.d = 3;
  m.f1 = BoundaryProfile::constant(0.0);
  m.f2 = BoundaryProfile::constant(1.0);
  m.potential = Potential::quadratic();
  InitialLaw law{uniform_strain_mean(m), 0.0, 1};
  const auto trajs = run_experiments(m, fast_params(), sample_initial(m, law, 1));
  const auto times = measurement_times(trajs.front(), 9);
  const auto [ms, pool] = extract_strains(m, trajs, times);
  for (double v : pool.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  // weights sum to (d+1) * T
  CHECK(pool.total_weight() == doctest::Approx((m.d + 1) * 0.5).epsilon(1e-12));
  double wsum = 0.0;
  for (double w : ms.weights) wsum += w;
  CHECK(wsum == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pooled samples lie in the run-time window and land in occupied bins") {
  ChainModel m = quadratic_ramp(4);
  InitialLaw law{uniform_strain_mean(m), 0.1, 17};
  const auto trajs = run_experiments(m, fast_params(), sample_initial(m, law, 6));
  const auto times = measurement_times(trajs.front(), 15);
  const auto [ms, pool] = extract_strains(m, trajs, times);
  const double R = pool.window_halfwidth();
  for (double v : pool.values) {
    CHECK(v >= -R);
    CHECK(v <= R);
  }
  const StrainHistogram hist = strain_histogram(pool);
  double mass = 0.0;
  for (double b : hist.mass) mass += b;
  CHECK(mass == doctest::Approx(pool.total_weight()).epsilon(1e-12));
}

TEST_CASE("weighted quantiles interpolate the empirical distribution") {
  // uniform samples on [0,1]: quantiles match the levels
  oracles::TestRng rng(31);
  std::vector<double> v(4000);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  const auto s = make_samples(std::move(v));
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9})
    CHECK(weighted_quantile(s, q) == doctest::Approx(q).epsilon(0.05));
  CHECK(weighted_quantile(s, 0.0) == doctest::Approx(s.min_value()));
  CHECK(weighted_quantile(s, 1.0) == doctest::Approx(s.max_value()));
}

TEST_CASE("adaptive grid places nodes at quantiles and contains zero") {
  oracles::TestRng rng(13);
  std::vector<double> v(5000);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  const auto s = make_samples(std::move(v));
  const Grid g = adaptive_grid(s, 5, 1e-4);
  REQUIRE(g.has_zero);
  // the support is positive, so 0 is inserted below the sample minimum
  CHECK(g.nodes.front() == 0.0);
  CHECK(g.nodes.back() == doctest::Approx(s.max_value()));
  REQUIRE(g.size() == 6);
  // quantile nodes near min, .25, .5, .75, max plus the inserted 0
  auto contains_near = [&](double target, double tol) {
    for (double p : g.nodes)
      if (std::abs(p - target) <= tol) return true;
    return false;
  };
  CHECK(contains_near(s.min_value(), 1e-12));
  CHECK(contains_near(0.25, 0.05));
  CHECK(contains_near(0.5, 0.05));
  CHECK(contains_near(0.75, 0.05));
}

TEST_CASE("two-atom law yields the three-node grid with zero inserted") {
  const auto s = make_samples({-1.0, -1.0, 1.0, 1.0});
  const Grid g = adaptive_grid(s, 3, 0.1);
  REQUIRE(g.size() == 3);
  CHECK(g.nodes[0] == doctest::Approx(-1.0));
  CHECK(g.nodes[1] == doctest::Approx(0.0));
  CHECK(g.nodes[2] == doctest::Approx(1.0));
  CHECK(g.zero_index == 1);
}

TEST_CASE("grid nodes are strictly increasing with gaps above the floor") {
  oracles::TestRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(200);
    for (auto& x : v) x = rng.uniform(-2.0, 3.0);
    const double floor = 0.01;
    const auto s = make_samples(std::move(v));
    const Grid g = adaptive_grid(s, rng.integer(3, 40), floor);
    CHECK(g.has_zero);
    for (int k = 0; k + 1 < g.size(); ++k) {
      const double gap = g.nodes[k + 1] - g.nodes[k];
      CHECK(gap > 0.0);
      // the forced zero node may sit closer to a neighbor than the floor
      if (g.nodes[k] != 0.0 && g.nodes[k + 1] != 0.0)
        CHECK(gap >= floor * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("degenerate support raises instead of building a grid") {
  const auto s = make_samples({0.7, 0.7, 0.7});
  CHECK_THROWS_AS(adaptive_grid(s, 5, 1e-3), std::runtime_error);
}

TEST_CASE("unimodal strain pools put more nodes inside the inter-decile range") {
  // gaussian-shaped pool
  oracles::TestRng rng(5);
  std::vector<double> v;
  for (int i = 0; i < 4000; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 12; ++j) acc += rng.uniform(-0.5, 0.5);
    v.push_back(acc);
  }
  const auto s = make_samples(std::move(v));
  const Grid g = adaptive_grid(s, 41, 1e-5);
  const double lo = weighted_quantile(s, 0.1), hi = weighted_quantile(s, 0.9);
  int inside = 0, outside = 0;
  for (double p : g.nodes) (p >= lo && p <= hi ? inside : outside)++;
  CHECK(inside >= outside);
}

TEST_CASE("w1 distance of hand-computed pairs") {
  CHECK(w1_1d(make_samples({1.0, 2.0, 3.0}), make_samples({1.0, 2.0, 3.0})) ==
        doctest::Approx(0.0));
  CHECK(w1_1d(make_samples({0.0}), make_samples({1.0})) == doctest::Approx(1.0));
  CHECK(w1_1d(make_samples({0.0, 2.0}), make_samples({1.0, 3.0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(w1_1d(make_samples({}), make_samples({1.0})), std::invalid_argument);
}

TEST_CASE("strain pools of disjoint seed groups drift together as N grows") {
  ChainModel m = quadratic_ramp(4);
  FlowParams p = fast_params(1e-2, 0.5);
  const auto pool_of = [&](std::uint64_t seed, int n) {
    InitialLaw law{uniform_strain_mean(m), 0.1, seed};
    const auto trajs = run_experiments(m, p, sample_initial(m, law, n));
    const auto times = measurement_times(trajs.front(), 10);
    return extract_strains(m, trajs, times).second;
  };
  std::vector<double> medians;
  for (int n : {10, 40, 160}) {
    std::vector<double> dists;
    for (std::uint64_t pair = 0; pair < 3; ++pair)
      dists.push_back(w1_1d(pool_of(100 + pair, n), pool_of(200 + pair, n)));
    std::sort(dists.begin(), dists.end());
    medians.push_back(dists[1]);
  }
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] <= medians[1]);
}

TEST_CASE("criticality defect of measured ensembles scales with epsilon") {
  ChainModel m = quadratic_ramp(4);
  double cbar = 0.0;
  bool first = true;
  for (double eps : {1e-2, 5e-3, 2.5e-3}) {
    FlowParams p;
    p.epsilon = eps;
    p.horizon = 1.0;
    p.step = eps / 5.0;
    InitialLaw law{uniform_strain_mean(m), 0.05, 3};
    const auto trajs = run_experiments(m, p, sample_initial(m, law, 4));
    const auto times = measurement_times(trajs.front(), 20);
    const auto [ms, pool] = extract_strains(m, trajs, times);
    double defect = 0.0;
    for (std::size_t i = 0; i < ms.strains.size(); ++i)
      for (std::size_t mm = 0; mm < ms.times.size(); ++mm) {
        Vector ap(m.d + 1);
        for (int j = 0; j <= m.d; ++j) ap(j) = m.potential.slope(ms.strains[i][mm](j));
        defect += ms.weights[mm] * (dbar_transpose(ap) - ms.controls[i]).squaredNorm();
      }
    defect /= static_cast<double>(ms.strains.size());
    if (first) {
      cbar = defect / eps;
      first = false;
    } else {
      CHECK(defect <= cbar * eps);
    }
  }
}
