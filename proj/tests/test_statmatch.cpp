#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pushforward/distributions.hpp"
#include "pushforward/statmatch.hpp"
#include "test_util.hpp"

using namespace pf;
using namespace pf::testutil;

namespace {

Tensor col(std::vector<double> v) { return Tensor::column(std::move(v)); }

// brute-force transport oracle: best matching over all permutations
double w1_brute_force(const Tensor& x, const Tensor& y) {
  REQUIRE(x.rows() == y.rows());
  REQUIRE(x.rows() <= 6);
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) cost += std::abs(x[i] - y[perm[i]]);
    best = std::min(best, cost / static_cast<double>(x.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("mean-formulation discrepancy: pinned examples") {
  TestFunctionFamily fourier1 = make_fourier_family({1});

  SUBCASE("identical sample arrays give exactly zero") {
    Rng rng(5);
    Tensor x = sample(Uniform{0.0, 1.0}, 257, rng);
    CHECK(moment_discrepancy(fourier1, x, x) == 0.0);
  }

  SUBCASE("uniform versus an atom at zero tends to 1") {
    // first fourier moment of U(0,1) vanishes, the atom contributes 1
    Rng rng(6);
    Tensor x = sample(Uniform{0.0, 1.0}, 1000000, rng);
    Tensor y = col({0.0});
    CHECK(moment_discrepancy(fourier1, x, y) == doctest::Approx(1.0).epsilon(0.01));
  }

  SUBCASE("unbiased estimator has mean zero under equal laws") {
    Rng rng(7);
    ExponentialMoments fam;
    fam.ts = {0.5, 1.0};
    const int resamples = 10000;
    const std::size_t n = 32;
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
      Tensor x = sample(StdGaussian{1}, n, rng);
      Tensor y = sample(StdGaussian{1}, n, rng);
      double v = moment_discrepancy(fam, x, y, Estimator::Unbiased);
      mean += v;
      m2 += v * v;
    }
    mean /= resamples;
    m2 /= resamples;
    double mc_sigma = std::sqrt((m2 - mean * mean) / resamples);
    CHECK(std::abs(mean) < 3.0 * mc_sigma);
  }

  SUBCASE("unbiased estimator rejects singleton samples") {
    Tensor x = col({1.0});
    CHECK_THROWS_AS(moment_discrepancy(fourier1, x, x, Estimator::Unbiased), ContractError);
  }
}

TEST_CASE("max-formulation discrepancy over finite families") {
  FiniteExplicit fam;
  fam.fns.push_back({{-10.0, 10.0}, {-10.0, 10.0}});    // f(x) = x
  fam.fns.push_back({{-10.0, 10.0}, {10.0, -10.0}});    // f(x) = -x

  SUBCASE("linear statistics") {
    auto res = max_discrepancy(fam, col({1.0}), col({0.0}));
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.argmax == 0);
  }

  SUBCASE("identical samples give zero for the symmetric family") {
    Rng rng(8);
    Tensor x = sample(StdGaussian{1}, 100, rng);
    auto res = max_discrepancy(fam, x, x);
    CHECK(res.value == 0.0);
  }

  SUBCASE("value dominates every single member") {
    Rng rng(9);
    Tensor x = sample(StdGaussian{1}, 50, rng);
    Tensor y = sample(Uniform{0.0, 1.0}, 50, rng);
    auto res = max_discrepancy(fam, x, y);
    auto fns = expand_family(fam);
    for (const auto& fn : fns) {
      double sx = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) sx += fn.eval(x[i]);
      for (std::size_t j = 0; j < y.rows(); ++j) sy += fn.eval(y[j]);
      CHECK(res.value >= sx / x.rows() - sy / y.rows() - 1e-15);
    }
  }

  SUBCASE("empty family is a contract error") {
    FiniteExplicit empty;
    CHECK_THROWS_AS(max_discrepancy(empty, col({1.0}), col({0.0})), ContractError);
  }
}

TEST_CASE("iterated best response settles into the two-interval 2-cycle") {
  // target: uniform on (0, 1/4) u (3/4, 1); adversary family: indicators of
  // the two half-intervals; model: U(a, a + 1/2)
  UnionOfIntervals target = make_union_of_intervals({{0.0, 0.25}, {0.75, 1.0}});
  std::vector<std::pair<double, double>> indicators = {{0.0, 0.5}, {0.5, 1.0}};
  BestResponseTrace trace =
      iterate_best_response(target, indicators, 0.5, 0.25, 0.0, 0.5, 12);
  REQUIRE(trace.a_values.size() == 12);
  // after the first refit the generator alternates between the endpoints
  for (std::size_t r = 1; r < trace.a_values.size(); ++r) {
    CHECK(trace.a_values[r] == (trace.a_values[r - 1] == 0.0 ? 0.5 : 0.0));
    CHECK(trace.adversary_picks[r] != trace.adversary_picks[r - 1]);
  }
}

TEST_CASE("squared mmd: pinned examples and the energy-distance identity") {
  KernelSpec gauss{KernelSpec::Type::Gaussian, 1.0};

  SUBCASE("coincident singletons") {
    CHECK(mmd_squared(gauss, col({0.0}), col({0.0})) == 0.0);
  }

  SUBCASE("unit separation with unit bandwidth") {
    // 2 - 2 exp(-1/2)
    CHECK(mmd_squared(gauss, col({0.0}), col({1.0})) ==
          doctest::Approx(0.7869386805747332).epsilon(1e-12));
  }

  SUBCASE("energy distance is the distance-kernel mmd") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      std::size_t n = 2 + rng.below(40), m = 2 + rng.below(40);
      Tensor x = sample(StdGaussian{1}, n, rng);
      Tensor y = sample(Uniform{-0.5, 1.5}, m, rng);
      double ed = energy_distance(x, y);
      double neg = mmd_squared(KernelSpec{KernelSpec::Type::NegDistance, 1.0}, x, y);
      double dist = mmd_squared(KernelSpec{KernelSpec::Type::Distance, 1.0}, x, y);
      CHECK(rel_error(ed, neg) < 1e-12);
      CHECK(rel_error(ed, -dist) < 1e-12);
    }
  }

  SUBCASE("unbiased needs two samples per side") {
    CHECK_THROWS_AS(mmd_squared(gauss, col({0.0}), col({1.0}), Estimator::Unbiased),
                    ContractError);
  }
}

TEST_CASE("energy distance: pinned examples and the null") {
  CHECK(energy_distance(col({0.0}), col({1.0})) == doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(13);
  Tensor x = sample(StdGaussian{1}, 100, rng);
  CHECK(energy_distance(x, x) == 0.0);

  // V-statistic under the null at n = 1e4: within 3 MC sigma of 0 (the
  // V-statistic has a positive O(1/n) bias, covered by the band)
  const std::size_t n = 10000;
  Rng null_rng(14);
  std::vector<double> null_values;
  for (int r = 0; r < 50; ++r) {
    Tensor a = sample(StdGaussian{1}, n, null_rng);
    Tensor b = sample(StdGaussian{1}, n, null_rng);
    null_values.push_back(energy_distance(a, b));
  }
  double mean = 0.0, m2 = 0.0;
  for (double v : null_values) mean += v;
  mean /= null_values.size();
  for (double v : null_values) m2 += (v - mean) * (v - mean);
  double sd = std::sqrt(m2 / null_values.size());
  Tensor a = sample(StdGaussian{1}, n, rng);
  Tensor b = sample(StdGaussian{1}, n, rng);
  CHECK(energy_distance(a, b) < mean + 3.0 * sd + 1e-12);
  // 1-D fast path agrees with the quadratic-time kernels
  KernelSpec dist{KernelSpec::Type::Distance, 1.0};
  double nn = static_cast<double>(n);
  double quad = 2.0 * pairwise_kernel_sum(a, b, dist, false, Exec::Serial) / (nn * nn) -
                pairwise_kernel_sum(a, a, dist, false, Exec::Serial) / (nn * nn) -
                pairwise_kernel_sum(b, b, dist, false, Exec::Serial) / (nn * nn);
  CHECK(rel_error(energy_distance(a, b), quad) < 1e-10);
}

TEST_CASE("histogram total variation") {
  std::vector<double> quarters = {0.0, 0.25, 0.5, 0.75, 1.0};

  SUBCASE("identical arrays") {
    Rng rng(15);
    Tensor x = sample(Uniform{0.0, 1.0}, 100, rng);
    CHECK(histogram_tv(x, x, quarters).tv == 0.0);
  }

  SUBCASE("exact masses on the 4-bin grid") {
    // U(0, 1/2) puts 1/2 in each of the first two bins; the two-interval law
    // puts 1/2 in the first and 1/2 in the last: tv = 1/2
    Rng rng(16);
    const std::size_t n = 200000;
    Tensor x = sample(Uniform{0.0, 0.5}, n, rng);
    Tensor y = sample(make_union_of_intervals({{0.0, 0.25}, {0.75, 1.0}}), n, rng);
    auto res = histogram_tv(x, y, quarters);
    CHECK(res.tv == doctest::Approx(0.5).epsilon(0.01));
    CHECK(res.outside_x == 0);
    CHECK(res.outside_y == 0);
  }

  SUBCASE("disjoint supports saturate at one") {
    Rng rng(17);
    Tensor x = sample(Uniform{0.0, 0.25}, 1000, rng);
    Tensor y = sample(Uniform{0.75, 1.0}, 1000, rng);
    CHECK(histogram_tv(x, y, quarters).tv == 1.0);
  }

  SUBCASE("overflow samples land in edge bins and are reported") {
    Tensor x = col({-1.0, 0.1, 2.0});
    Tensor y = col({0.1, 0.2, 0.3});
    auto res = histogram_tv(x, y, quarters);
    CHECK(res.outside_x == 2);
    CHECK(res.outside_y == 0);
  }
}

TEST_CASE("one-dimensional wasserstein") {
  SUBCASE("pinned pair and brute-force oracle") {
    CHECK(wasserstein1(col({0.0, 1.0}), col({1.0, 2.0})) == doctest::Approx(1.0).epsilon(1e-14));
    Rng rng(18);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t n = 2 + rng.below(5);
      Tensor x({n, 1}), y({n, 1});
      for (double& v : x.data) v = rng.normal();
      for (double& v : y.data) v = rng.normal();
      CHECK(wasserstein1(x, y) == doctest::Approx(w1_brute_force(x, y)).epsilon(1e-12));
    }
  }

  SUBCASE("identical arrays") {
    Rng rng(19);
    Tensor x = sample(StdGaussian{1}, 500, rng);
    CHECK(wasserstein1(x, x) == 0.0);
  }

  SUBCASE("shifted uniforms") {
    Rng rng(20);
    const std::size_t n = 100000;
    Tensor x = sample(Uniform{0.0, 1.0}, n, rng);
    Tensor y = sample(Uniform{0.5, 1.5}, n, rng);
    CHECK(wasserstein1(x, y) == doctest::Approx(0.5).epsilon(0.02));
  }

  SUBCASE("unequal counts agree with a common refinement") {
    Rng rng(21);
    Tensor x = sample(StdGaussian{1}, 24, rng);
    Tensor y = sample(Uniform{0.0, 1.0}, 36, rng);
    // refine both to lcm(24,36) = 72 by repeating sorted entries
    auto repeat_sorted = [](const Tensor& s, std::size_t k) {
      std::vector<double> v(s.data);
      std::sort(v.begin(), v.end());
      std::vector<double> out;
      for (double val : v)
        for (std::size_t r = 0; r < k; ++r) out.push_back(val);
      return Tensor::column(std::move(out));
    };
    CHECK(wasserstein1(x, y) ==
          doctest::Approx(wasserstein1(repeat_sorted(x, 3), repeat_sorted(y, 2))).epsilon(1e-12));
  }
}

TEST_CASE("kantorovich dual lower bound") {
  Rng rng(22);

  SUBCASE("dual never exceeds primal") {
    for (int trial = 0; trial < 50; ++trial) {
      std::size_t n = 2 + rng.below(100), m = 2 + rng.below(100);
      Tensor x = sample(StdGaussian{1}, n, rng);
      Tensor y = sample(make_gaussian_mixture({{1.0, 0.5, 0.5}, {-1.0, 0.25, 0.5}}), m, rng);
      double primal = wasserstein1(x, y);
      double dual = wasserstein1_dual_bound(x, y, 128);
      CHECK(dual <= primal + 1e-9);
    }
  }

  SUBCASE("gap below 2 percent at resolution 1e4 on a bounded interval") {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 3000;
      Tensor x = sample(Uniform{0.0, 1.0}, n, rng);
      Tensor y = sample(make_union_of_intervals({{0.0, 0.25}, {0.75, 1.0}}), n, rng);
      double primal = wasserstein1(x, y);
      double dual = wasserstein1_dual_bound(x, y, 10000);
      CHECK(dual <= primal + 1e-9);
      CHECK(primal - dual < 0.02 * primal);
    }
  }
}

TEST_CASE("divergence symmetry and nonnegativity on random pairs") {
  Rng rng(23);
  TestFunctionFamily fourier = make_fourier_family({1, 2, 3});
  FiniteExplicit symmetric;
  symmetric.fns.push_back({{-10.0, 10.0}, {-10.0, 10.0}});
  symmetric.fns.push_back({{-10.0, 10.0}, {10.0, -10.0}});
  std::vector<double> edges;
  for (int i = 0; i <= 16; ++i) edges.push_back(-4.0 + 8.0 * i / 16.0);

  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 8 + rng.below(64), m = 8 + rng.below(64);
    Tensor x = sample(Uniform{0.0, 1.0}, n, rng);
    Tensor y = sample(make_union_of_intervals({{0.0, 0.25}, {0.75, 1.0}}), m, rng);

    double d2xy = moment_discrepancy(fourier, x, y);
    CHECK(d2xy >= 0.0);
    CHECK(rel_error(d2xy, moment_discrepancy(fourier, y, x)) < 1e-12);
    CHECK(rel_error(moment_discrepancy(fourier, x, y, Estimator::Unbiased),
                    moment_discrepancy(fourier, y, x, Estimator::Unbiased)) < 1e-12);

    double mmd = mmd_squared(KernelSpec{KernelSpec::Type::Gaussian, 0.5}, x, y);
    CHECK(mmd >= 0.0);
    CHECK(rel_error(mmd, mmd_squared(KernelSpec{KernelSpec::Type::Gaussian, 0.5}, y, x)) <
          1e-12);

    double ed = energy_distance(x, y);
    CHECK(ed >= 0.0);
    CHECK(rel_error(ed, energy_distance(y, x)) < 1e-12);

    auto tv = histogram_tv(x, y, edges);
    CHECK(tv.tv >= 0.0);
    CHECK(tv.tv <= 1.0);
    CHECK(tv.tv == histogram_tv(y, x, edges).tv);

    double w = wasserstein1(x, y);
    CHECK(w >= 0.0);
    CHECK(rel_error(w, wasserstein1(y, x)) < 1e-12);

    // max formulation symmetric over a sign-symmetric family
    CHECK(rel_error(max_discrepancy(symmetric, x, y).value,
                    max_discrepancy(symmetric, y, x).value) < 1e-10);
  }
}

TEST_CASE("statistical separation against the same-law null at n = 1e4") {
  const std::size_t n = 10000;
  DistributionSpec mu = Uniform{0.0, 1.0};
  std::vector<DistributionSpec> alternatives = {
      make_union_of_intervals({{0.0, 0.25}, {0.75, 1.0}}), Uniform{0.0, 0.5},
      make_union_of_intervals({{0.25, 0.75}})};

  TestFunctionFamily fourier = make_fourier_family({1, 2, 3, 4, 5});
  ExponentialMoments charfn;
  charfn.ts = {1.0, 3.0, 7.0};
  std::vector<double> edges;
  for (int i = 0; i <= 20; ++i) edges.push_back(i / 20.0);
  KernelSpec gauss{KernelSpec::Type::Gaussian, 0.25};

  auto all_divergences = [&](const Tensor& x, const Tensor& y) {
    return std::vector<double>{moment_discrepancy(fourier, x, y),
                               moment_discrepancy(TestFunctionFamily{charfn}, x, y),
                               mmd_squared(gauss, x, y),
                               energy_distance(x, y),
                               histogram_tv(x, y, edges).tv,
                               wasserstein1(x, y)};
  };

  // null 99th percentile per divergence from same-law resamples (fixed seed)
  Rng null_rng(303);
  std::vector<std::vector<double>> null_values(6);
  const int reps = 25;
  for (int r = 0; r < reps; ++r) {
    Tensor a = sample(mu, n, null_rng);
    Tensor b = sample(mu, n, null_rng);
    auto values = all_divergences(a, b);
    for (std::size_t k = 0; k < values.size(); ++k) null_values[k].push_back(values[k]);
  }
  std::vector<double> threshold(6);
  for (std::size_t k = 0; k < 6; ++k) {
    std::sort(null_values[k].begin(), null_values[k].end());
    threshold[k] = null_values[k][static_cast<std::size_t>(std::ceil(0.99 * reps)) - 1];
  }

  Rng rng(304);
  for (const auto& alt : alternatives) {
    Tensor x = sample(mu, n, rng);
    Tensor y = sample(alt, n, rng);
    auto values = all_divergences(x, y);
    for (std::size_t k = 0; k < 6; ++k) {
      INFO("divergence ", k);
      CHECK(values[k] > threshold[k]);
    }
  }
}

TEST_CASE("objective gradients pass finite-difference checks") {
  Rng rng(42);
  auto check_objective = [&](auto&& build_loss, int trials) {
    for (int trial = 0; trial < trials; ++trial) {
      std::size_t n = 4 + rng.below(5);
      Tensor x({n, 1});
      for (double& v : x.data) v = rng.normal() * 0.7 + 0.4;
      Tensor y({6, 1});
      for (double& v : y.data) v = rng.uniform();

      Tape t;
      Var xv = t.input(x);
      Var loss = build_loss(t, xv, y);
      t.backward(loss);
      Tensor autodiff = t.grad(xv);

      auto value = [&](const std::vector<Tensor>& p) {
        Tape t2;
        Var xv2 = t2.input(p[0]);
        Var l2 = build_loss(t2, xv2, y);
        return t2.value(l2)[0];
      };
      std::vector<Tensor> fd = finite_difference_grads(value, {x});
      CHECK(max_grad_rel_error({autodiff}, fd) < 1e-4);
    }
  };

  TestFunctionFamily fourier = make_fourier_family({1, 2, 3});
  ExponentialMoments charfn;
  charfn.ts = {0.7, 2.0};
  FiniteExplicit grid;
  {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 64; ++i) {
      double v = -6.0 + 12.0 * i / 64.0;
      xs.push_back(v);
      ys.push_back(std::tanh(v) + 0.1 * v);
    }
    grid.fns.push_back({xs, ys});
  }

  SUBCASE("fourier moment discrepancy, biased and unbiased") {
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return moment_discrepancy_loss(t, x, fourier, y);
    }, 20);
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return moment_discrepancy_loss(t, x, fourier, y, Estimator::Unbiased);
    }, 20);
  }
  SUBCASE("characteristic-function moments") {
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return moment_discrepancy_loss(t, x, TestFunctionFamily{charfn}, y);
    }, 20);
  }
  SUBCASE("grid-table family (piecewise linear)") {
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return moment_discrepancy_loss(t, x, TestFunctionFamily{grid}, y);
    }, 20);
  }
  SUBCASE("gaussian mmd, biased and unbiased") {
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return mmd_loss(t, x, y, KernelSpec{KernelSpec::Type::Gaussian, 0.8});
    }, 20);
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return mmd_loss(t, x, y, KernelSpec{KernelSpec::Type::Gaussian, 0.8},
                      Estimator::Unbiased);
    }, 20);
  }
  SUBCASE("energy distance") {
    check_objective([&](Tape& t, Var x, const Tensor& y) {
      return energy_loss(t, x, y);
    }, 20);
  }
  SUBCASE("indicator families are rejected on the tape") {
    IndicatorBins bins;
    bins.edges = {0.0, 0.5, 1.0};
    Tape t;
    Var x = t.input(col({0.25, 0.75}));
    CHECK_THROWS_AS(moment_discrepancy_loss(t, x, TestFunctionFamily{bins}, col({0.5})),
                    UnsupportedError);
  }
}

TEST_CASE("tape losses agree with the plain estimators") {
  Rng rng(77);
  Tensor x = sample(StdGaussian{1}, 40, rng);
  Tensor y = sample(Uniform{0.0, 1.0}, 30, rng);
  TestFunctionFamily fourier = make_fourier_family({1, 2});

  Tape t;
  Var xv = t.input(x);
  CHECK(t.value(moment_discrepancy_loss(t, xv, fourier, y))[0] ==
        doctest::Approx(moment_discrepancy(fourier, x, y)).epsilon(1e-14));
  CHECK(t.value(mmd_loss(t, xv, y, KernelSpec{KernelSpec::Type::Gaussian, 1.0}))[0] ==
        doctest::Approx(mmd_squared(KernelSpec{KernelSpec::Type::Gaussian, 1.0}, x, y))
            .epsilon(1e-14));
  CHECK(t.value(energy_loss(t, xv, y))[0] ==
        doctest::Approx(energy_distance(x, y)).epsilon(1e-12));
}
