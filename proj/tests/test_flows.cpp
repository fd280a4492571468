#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pushforward/flows.hpp"
#include "pushforward/statmatch.hpp"
#include "test_util.hpp"

using namespace pf;
using namespace pf::testutil;

namespace {

std::pair<double, double> moments(const Tensor& s) {
  double mean = 0.0;
  for (double v : s.data) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.size());
  return {mean, var};
}

// discrete Euler-Maruyama moment recursion for the quadratic potential:
// the scheme's own mean/variance, free of Monte-Carlo noise
std::pair<double, double> em_moments(double x0, double t_end, double dt) {
  double m = x0, v = 0.0;
  double t = 0.0;
  while (t < t_end - 1e-12) {
    double h = std::min(dt, t_end - t);
    m *= 1.0 - h;
    v = (1.0 - h) * (1.0 - h) * v + 2.0 * h;
    t += h;
  }
  return {m, v};
}

}  // namespace

TEST_CASE("euler-maruyama against the analytic marginal at t = ln 2") {
  Rng rng(601);
  const std::size_t n = 100000;
  ParticleEnsemble start{Tensor::full({n, 1}, 2.0), 0.0};

  SUBCASE("zero duration leaves the ensemble untouched") {
    ParticleEnsemble out = simulate_sde(QuadraticPotential{}, start, 0.0, 1e-3, rng);
    CHECK(out.positions.data == start.positions.data);
  }

  SUBCASE("moments at t = ln 2 sit in the 3-sigma + O(dt) band around (1, 0.75)") {
    const double t = std::log(2.0), dt = 1e-4;
    ParticleEnsemble out = simulate_sde(QuadraticPotential{}, start, t, dt, rng);
    auto [mean, var] = moments(out.positions);
    auto [em_mean, em_var] = em_moments(2.0, t, dt);
    // discretization bias is the recursion-vs-continuum gap
    double bias_mean = std::abs(em_mean - 1.0);
    double bias_var = std::abs(em_var - 0.75);
    CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt(0.75 / n) + bias_mean);
    CHECK(std::abs(var - 0.75) < 3.0 * 0.75 * std::sqrt(2.0 / n) + bias_var);
  }

  SUBCASE("step size larger than the duration is rejected") {
    CHECK_THROWS_AS(simulate_sde(QuadraticPotential{}, start, 0.5, 0.6, rng), ContractError);
    CHECK_THROWS_AS(simulate_sde(QuadraticPotential{}, start, 1.0, 0.0, rng), ContractError);
  }
}

TEST_CASE("euler-maruyama weak error halves with the step size") {
  Rng rng(602);
  const std::size_t n = 100000;
  const double t_end = 0.5;
  ParticleEnsemble start{Tensor::full({n, 1}, 2.0), 0.0};

  for (double dt : {0.05, 0.025}) {
    ParticleEnsemble out = simulate_sde(QuadraticPotential{}, start, t_end, dt, rng);
    auto [mean, var] = moments(out.positions);
    auto [em_mean, em_var] = em_moments(2.0, t_end, dt);
    // the simulation matches its own discrete recursion to MC accuracy
    CHECK(std::abs(mean - em_mean) < 3.0 * std::sqrt(em_var / n));
    CHECK(std::abs(var - em_var) < 3.0 * em_var * std::sqrt(2.0 / n));
  }
  // and the recursion's distance to the continuum halves with dt
  double exact_mean = 2.0 * std::exp(-t_end);
  double err_coarse = std::abs(em_moments(2.0, t_end, 0.05).first - exact_mean);
  double err_fine = std::abs(em_moments(2.0, t_end, 0.025).first - exact_mean);
  CHECK(err_coarse / err_fine == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("long runs reach the stationary standard normal") {
  Rng rng(603);
  const std::size_t n = 50000;
  ParticleEnsemble start{Tensor::full({n, 1}, 2.0), 0.0};
  ParticleEnsemble out = simulate_sde(QuadraticPotential{}, start, 12.0, 1e-2, rng);
  Tensor reference = sample(StdGaussian{1}, n, rng);

  Rng null_rng(604);
  double null_max = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Tensor a = sample(StdGaussian{1}, n, null_rng);
    Tensor b = sample(StdGaussian{1}, n, null_rng);
    null_max = std::max(null_max, energy_distance(a, b));
  }
  // O(dt) bias inflates the statistic slightly; 3x the null max covers it
  CHECK(energy_distance(out.positions, reference) < 3.0 * null_max);
}

TEST_CASE("tabulated potentials interpolate their gradient") {
  TabulatedPotential tab;
  for (int i = 0; i <= 100; ++i) {
    double x = -5.0 + 0.1 * i;
    tab.xs.push_back(x);
    tab.energy.push_back(0.5 * x * x);
    tab.grad.push_back(x);
  }
  CHECK(potential_gradient(tab, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(potential_gradient(tab, -4.81) == doctest::Approx(-4.81).epsilon(1e-12));
  // clamped outside the table
  CHECK(potential_gradient(tab, 9.0) == 5.0);

  Rng rng(605);
  const std::size_t n = 20000;
  ParticleEnsemble start{Tensor::full({n, 1}, 1.0), 0.0};
  ParticleEnsemble out = simulate_sde(tab, start, 0.5, 1e-3, rng);
  auto [mean, var] = moments(out.positions);
  CHECK(mean == doctest::Approx(std::exp(-0.5)).epsilon(0.05));
  CHECK(var == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.05));
}

TEST_CASE("analytic flow state") {
  SUBCASE("t = 0 returns the initial component moments") {
    GaussianFlowState s = ou_flow_state(make_gaussian_mixture({{2.0, 0.25, 1.0}}), 0.0);
    CHECK(s.components[0].mean == 2.0);
    CHECK(s.components[0].var == 0.25);
  }

  SUBCASE("the standard normal is a fixed point") {
    for (double t : {0.0, 0.3, 2.0, 40.0}) {
      GaussianFlowState s = ou_flow_state(StdGaussian{1}, t);
      CHECK(s.components[0].mean == doctest::Approx(0.0));
      CHECK(s.components[0].var == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("closed-form moment map at t = ln 2") {
    GaussianFlowState s =
        ou_flow_state(make_gaussian_mixture({{2.0, 0.25, 1.0}}), std::log(2.0));
    CHECK(s.components[0].mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.components[0].var == doctest::Approx(0.8125).epsilon(1e-12));
  }

  SUBCASE("non-gaussian specs are rejected") {
    CHECK_THROWS_AS(ou_flow_state(Uniform{0.0, 1.0}, 1.0), UnsupportedError);
    CHECK_THROWS_AS(ou_flow_state(StdGaussian{1}, -1.0), DomainError);
  }

  SUBCASE("empirical closure turns atoms into equal-weight components") {
    Tensor data = Tensor::column({0.0, 1.0});
    GaussianFlowState s = ou_flow_state_empirical(data, 0.1);
    REQUIRE(s.components.size() == 2);
    CHECK(s.components[0].weight == doctest::Approx(0.5));
    CHECK(s.components[0].var == doctest::Approx(1.0 - std::exp(-0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(ou_flow_state_empirical(data, 0.0), DomainError);
  }
}

TEST_CASE("velocity field of the flow") {
  SUBCASE("vanishes at stationarity") {
    GaussianFlowState s = ou_flow_state(StdGaussian{1}, 1.7);
    for (double x : {-3.0, -1.0, 0.0, 0.5, 4.0})
      CHECK(velocity_field(s, x) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("single-component formula") {
    GaussianFlowState s;
    s.t = 0.5;
    s.components = {{1.0, 0.5, 1.0}};
    // v(x) = -x + (x - m)/var at x = 1: -1 + 0
    CHECK(velocity_field(s, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("mixture matches the finite-difference score to 1e-6") {
    GaussianFlowState s =
        ou_flow_state(make_gaussian_mixture({{-1.0, 0.3, 0.4}, {1.5, 0.8, 0.6}}), 0.4);
    const double h = 1e-6;
    for (int i = 0; i <= 60; ++i) {
      double x = -4.0 + 8.0 * i / 60.0;
      double fd = (std::log(s.density(x + h)) - std::log(s.density(x - h))) / (2.0 * h);
      CHECK(velocity_field(s, x) == doctest::Approx(-x - fd).epsilon(1e-6));
    }
  }

  SUBCASE("degenerate variance is a domain error") {
    GaussianFlowState s;
    s.t = 0.0;
    s.components = {{0.0, 0.0, 1.0}};
    CHECK_THROWS_AS(velocity_field(s, 0.0), DomainError);
  }
}

TEST_CASE("rk4 transport of the analytic gaussian flow") {
  DistributionSpec mu1 = make_gaussian_mixture({{2.0, 0.25, 1.0}});
  VelocityFn velocity = [&](double t, double x) {
    return velocity_field(ou_flow_state(mu1, t), x);
  };
  // affine quantile transport: x -> m_t + (sigma_t / sigma_0)(x - m_0)
  auto exact = [&](double x0, double t) {
    GaussianFlowState s = ou_flow_state(mu1, t);
    return s.components[0].mean +
           std::sqrt(s.components[0].var / 0.25) * (x0 - 2.0);
  };

  SUBCASE("zero velocity is the identity") {
    Tensor x0 = Tensor::column({-1.0, 0.0, 2.0});
    Tensor out = integrate_ode([](double, double) { return 0.0; }, x0, 0.0, 1.0, 32);
    CHECK(out.data == x0.data);
  }

  SUBCASE("quantile points ride to matching quantile points") {
    const double t = 1.0;
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      double x0 = 2.0 + 0.5 * normal_quantile(q);
      double got = integrate_ode_point(velocity, x0, 0.0, t, 400);
      CHECK(got == doctest::Approx(exact(x0, t)).epsilon(1e-6));
    }
  }

  SUBCASE("global error decays at fourth order") {
    const double t = 2.0, x0 = 2.5;
    double reference = exact(x0, t);
    double err8 = std::abs(integrate_ode_point(velocity, x0, 0.0, t, 8) - reference);
    double err16 = std::abs(integrate_ode_point(velocity, x0, 0.0, t, 16) - reference);
    double ratio = err8 / err16;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
  }

  SUBCASE("steps must be positive and velocities finite") {
    CHECK_THROWS_AS(integrate_ode_point(velocity, 0.0, 0.0, 1.0, 0), ContractError);
    VelocityFn bad = [](double t, double) {
      return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    };
    CHECK_THROWS_AS(integrate_ode_point(bad, 0.0, 0.0, 1.0, 8), NumericError);
  }
}

TEST_CASE("reverse-time transport reaches the target law") {
  Rng rng(606);
  const std::size_t n = 10000;
  // quantile-coupled target samples: same normal draws through the target
  // quantile function, so the comparison isolates the transport error
  std::vector<DistributionSpec> targets = {
      make_gaussian_mixture({{2.0, 0.25, 1.0}}),
      make_gaussian_mixture({{-1.0, 0.3, 0.5}, {1.5, 0.2, 0.5}})};
  for (const auto& target : targets) {
    VelocityFn velocity = [&](double t, double x) {
      return velocity_field(ou_flow_state(target, t), x);
    };
    Tensor z = sample(StdGaussian{1}, n, rng);
    Tensor transported = integrate_ode(velocity, z, 12.0, 0.0, 600);
    CdfQuantile cq = cdf_quantile(target);
    Tensor coupled({n, 1});
    for (std::size_t i = 0; i < n; ++i) coupled[i] = cq.quantile(normal_cdf(z[i]));
    CHECK(wasserstein1(transported, coupled) < 0.01);
  }
}

TEST_CASE("continuity equation residual") {
  SUBCASE("stationary flow has zero residual") {
    auto state_at = [](double t) { return ou_flow_state(StdGaussian{1}, t); };
    double r = continuity_residual(state_at, 1.0, -6.0, 6.0, 200, 1e-3, 1e-3);
    CHECK(r < 1e-10);
  }

  SUBCASE("second-order convergence on the moving gaussian") {
    DistributionSpec mu1 = make_gaussian_mixture({{2.0, 0.25, 1.0}});
    auto state_at = [&](double t) { return ou_flow_state(mu1, t); };
    const double t0 = 0.5;
    GaussianFlowState now = ou_flow_state(mu1, t0);
    double m = now.components[0].mean, sd = std::sqrt(now.components[0].var);
    double lo = m - 6.0 * sd, hi = m + 6.0 * sd;

    double r1 = continuity_residual(state_at, t0, lo, hi, 160, 1e-3, 1e-3);
    double r_half = continuity_residual(state_at, t0, lo, hi, 160, 5e-4, 5e-4);
    double r_double = continuity_residual(state_at, t0, lo, hi, 160, 2e-3, 2e-3);
    CHECK(r1 < 1e-4);
    CHECK(r1 / r_half == doctest::Approx(4.0).epsilon(0.2));
    CHECK(r_double / r1 == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("hermite moments decay as exp(-k t)") {
  CHECK(hermite_value(2, 1.7) == doctest::Approx(1.7 * 1.7 - 1.0).epsilon(1e-14));
  CHECK(hermite_value(3, -0.8) ==
        doctest::Approx(-0.8 * -0.8 * -0.8 - 3.0 * -0.8).epsilon(1e-14));
  CHECK_THROWS_AS(hermite_value(-1, 0.0), ContractError);

  Rng rng(607);
  const std::size_t n = 1000000;
  std::vector<double> times = {0.25, 0.5, 1.0, 2.0};

  SUBCASE("unit atom, first moment decays like exp(-t)") {
    DistributionSpec atom = make_empirical({1.0});
    auto rows = hermite_decay(atom, 1, times, n, rng);
    for (const auto& row : rows) {
      CHECK(row.predicted == doctest::Approx(std::exp(-row.t)).epsilon(1e-12));
      CHECK(std::abs(row.estimate - row.predicted) < 4.0 * row.mc_sigma);
    }
  }

  SUBCASE("stationary law has vanishing moments for every order") {
    for (int k : {1, 2, 3}) {
      auto rows = hermite_decay(StdGaussian{1}, k, times, n, rng);
      for (const auto& row : rows)
        CHECK(std::abs(row.estimate) < 4.0 * row.mc_sigma + 4.0 * std::abs(row.predicted));
    }
  }

  SUBCASE("unit atom, second moment starts and stays at zero") {
    DistributionSpec atom = make_empirical({1.0});
    auto rows = hermite_decay(atom, 2, times, n, rng);
    for (const auto& row : rows) {
      CHECK(row.predicted == 0.0);  // He_2(1) = 0 exactly
      CHECK(std::abs(row.estimate) < 4.0 * row.mc_sigma);
    }
  }

  CHECK_THROWS_AS(hermite_decay(StdGaussian{1}, 0, times, 100, rng), ContractError);
}
