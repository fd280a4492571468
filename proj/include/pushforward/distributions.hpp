#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "pushforward/rng.hpp"
#include "pushforward/tensor.hpp"

namespace pf {

// ---- sampleable measures ----

struct StdGaussian {
  std::size_t dim = 1;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct UnionOfIntervals {
  struct Part {
    double lo, hi;
    double weight;  // normalized mass of the part
  };
  std::vector<Part> parts;  // disjoint, sorted by lo
};

struct GaussianMixture {
  struct Component {
    double mean, var, weight;
  };
  std::vector<Component> components;
};

struct Empirical {
  Tensor samples;  // [n, d]
};

using DistributionSpec =
    std::variant<StdGaussian, Uniform, UnionOfIntervals, GaussianMixture, Empirical>;

// Factories validate invariants (disjoint sorted intervals, positive weights
// normalized to 1, nonempty sample sets) and throw ContractError otherwise.
// Omitted interval weights default to length-proportional (uniform measure
// on the union).
UnionOfIntervals make_union_of_intervals(std::vector<std::pair<double, double>> intervals,
                                         std::vector<double> weights = {});
GaussianMixture make_gaussian_mixture(std::vector<GaussianMixture::Component> comps);
Empirical make_empirical(Tensor samples);
Empirical make_empirical(std::vector<double> samples_1d);

std::size_t dim(const DistributionSpec& spec);

// i.i.d. draws, one row per sample.
Tensor sample(const DistributionSpec& spec, std::size_t n, Rng& rng);

// Natural log of the density at x; -inf outside the support.
// Throws UnsupportedError for Empirical specs.
double log_density(const DistributionSpec& spec, std::span<const double> x);
double log_density(const DistributionSpec& spec, double x);

// Paired CDF / quantile for 1-D continuous specs. quantile(cdf(x)) and
// cdf(quantile(u)) agree to 1e-10. Throws UnsupportedError for
// multi-dimensional or Empirical specs.
struct CdfQuantile {
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
};
CdfQuantile cdf_quantile(const DistributionSpec& spec);

// Exact marginal of the unit-quadratic-potential diffusion at time t:
// exp(-t) x0 + sqrt(1 - exp(-2t)) Z with Z standard normal. t == 0 returns
// x0 untouched and consumes no randomness. Throws DomainError for t < 0.
Tensor ou_noise(const Tensor& x0, double t, Rng& rng);

// Standard normal CDF (|abs err| < 1e-12) and its inverse.
double normal_cdf(double x);
double normal_quantile(double u);

// Analytic mean/variance where defined (used by tests and flow states).
double spec_mean(const DistributionSpec& spec);
double spec_variance(const DistributionSpec& spec);

}  // namespace pf
