#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pushforward/distributions.hpp"
#include "pushforward/pairwise.hpp"
#include "pushforward/tape.hpp"
#include "pushforward/tensor.hpp"

namespace pf {

// ---- test-function families (1-D) ----
//
// Complex-valued families (Fourier, characteristic-function moments) are
// expanded into real/imaginary real-valued pairs; the pair jointly carries
// the function's weight, so the weighted sum reduces to tau * |<f,mu> -
// <f,mu1>|^2 with the full squared modulus.

struct FourierOnInterval {
  std::vector<int> frequencies;  // distinct nonzero integers
  double lo = 0.0, hi = 1.0;
  std::vector<double> weights;  // normalized; empty = uniform
};

struct ExponentialMoments {
  std::vector<double> ts;
  bool imaginary_axis = true;  // exp(i t x) (characteristic function) vs exp(t x)
  std::vector<double> weights;
};

struct FiniteExplicit {
  struct GridFn {
    std::vector<double> xs;  // strictly increasing
    std::vector<double> ys;
  };
  std::vector<GridFn> fns;  // evaluated by linear interpolation, clamped ends
  std::vector<double> weights;
};

struct IndicatorBins {
  std::vector<double> edges;  // shared histogram grid, strictly increasing
  std::vector<double> weights;
};

using TestFunctionFamily =
    std::variant<FourierOnInterval, ExponentialMoments, FiniteExplicit, IndicatorBins>;

FourierOnInterval make_fourier_family(std::vector<int> frequencies, double lo = 0.0,
                                      double hi = 1.0, std::vector<double> weights = {});

// One real-valued member of the expanded family.
struct ExpandedFunction {
  double coeff;
  std::function<double(double)> eval;
  std::string label;
};
std::vector<ExpandedFunction> expand_family(const TestFunctionFamily& family);

enum class Estimator { Biased, Unbiased };

// ---- objectives ----

// Mean formulation: weighted sum over the family of squared differences of
// test statistics. Biased uses plug-in means; Unbiased replaces the squared
// means with U-statistics over distinct index pairs (needs >= 2 samples per
// side, may be negative).
double moment_discrepancy(const TestFunctionFamily& family, const Tensor& x, const Tensor& y,
                          Estimator estimator = Estimator::Biased);

// Maximum formulation over the expanded (finite) family:
// max_f [mean f(x) - mean f(y)] and the maximizing function index.
struct MaxDiscrepancyResult {
  double value;
  std::size_t argmax;
  std::string label;
};
MaxDiscrepancyResult max_discrepancy(const TestFunctionFamily& family, const Tensor& x,
                                     const Tensor& y);

// Squared maximum mean discrepancy E[k(X,X') + k(Y,Y') - 2 k(X,Y)];
// Biased = V-statistics, Unbiased excludes diagonals.
double mmd_squared(KernelSpec kernel, const Tensor& x, const Tensor& y,
                   Estimator estimator = Estimator::Biased, Exec exec = default_exec());

// 2 E|X-Y| - E|X-X'| - E|Y-Y'|; equals mmd_squared with the NegDistance
// kernel. V-statistic by default. d == 1 uses an O(n log n) sort/prefix
// path, higher dimensions the pairwise kernels.
double energy_distance(const Tensor& x, const Tensor& y,
                       Estimator estimator = Estimator::Biased, Exec exec = default_exec());

// One-half L1 distance between shared-grid histograms. Samples outside the
// grid are counted in the edge bins and reported.
struct HistogramTvResult {
  double tv;
  std::size_t outside_x = 0, outside_y = 0;
};
HistogramTvResult histogram_tv(const Tensor& x, const Tensor& y,
                               const std::vector<double>& edges);

// ---- 1-D Wasserstein ----

// Exact W1 between the two empirical measures (sorted matching for equal
// counts, exact quantile-function integral otherwise).
double wasserstein1(const Tensor& x, const Tensor& y);

// Exact W1 between an empirical measure and an analytic 1-D spec, via the
// spec quantile function on a midpoint grid of each sample cell.
double wasserstein1_to_spec(const Tensor& x, const DistributionSpec& target,
                            std::size_t subdivisions = 8);

// Kantorovich dual lower bound: best piecewise-linear 1-Lipschitz potential
// on a uniform grid of `grid_cells` cells covering the pooled samples,
// solved by the cumulative-difference construction. Always <= wasserstein1.
double wasserstein1_dual_bound(const Tensor& x, const Tensor& y, std::size_t grid_cells);

// ---- differentiable losses (tape builders) ----

// Smooth families (Fourier, exponential moments) build on tape primitives;
// FiniteExplicit uses a piecewise-linear custom node; IndicatorBins is not
// differentiable and throws UnsupportedError.
Var moment_discrepancy_loss(Tape& tape, Var x, const TestFunctionFamily& family,
                            const Tensor& y, Estimator estimator = Estimator::Biased);
Var mmd_loss(Tape& tape, Var x, const Tensor& y, KernelSpec kernel,
             Estimator estimator = Estimator::Biased);
Var energy_loss(Tape& tape, Var x, const Tensor& y,
                Estimator estimator = Estimator::Biased);

// ---- exact best-response dynamics (interval-mass arithmetic) ----
//
// Alternating argmax/refit between indicator test functions and a sliding
// uniform window U(a, a + window): the adversary picks the indicator with
// the largest model-vs-target mass gap, the generator moves `a` to minimize
// the picked indicator's model mass. All masses are exact.
struct BestResponseTrace {
  std::vector<double> a_values;              // a after each refit
  std::vector<std::size_t> adversary_picks;  // indicator index per round
};
BestResponseTrace iterate_best_response(const UnionOfIntervals& target,
                                        const std::vector<std::pair<double, double>>& indicators,
                                        double window, double a0, double a_lo, double a_hi,
                                        int rounds);

}  // namespace pf
