#include "pushforward/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pushforward/errors.hpp"

namespace pf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double logsumexp(const std::vector<double>& xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

UnionOfIntervals make_union_of_intervals(std::vector<std::pair<double, double>> intervals,
                                         std::vector<double> weights) {
  if (intervals.empty()) throw ContractError("union-of-intervals: empty interval list");
  std::vector<std::size_t> order(intervals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return intervals[a].first < intervals[b].first; });

  bool length_proportional = weights.empty();
  if (!length_proportional && weights.size() != intervals.size())
    throw ContractError("union-of-intervals: weight count mismatch");

  UnionOfIntervals u;
  double prev_hi = -kInf;
  double total = 0.0;
  for (std::size_t idx : order) {
    auto [lo, hi] = intervals[idx];
    if (!(hi > lo)) throw ContractError("union-of-intervals: degenerate interval");
    if (lo < prev_hi) throw ContractError("union-of-intervals: intervals overlap");
    prev_hi = hi;
    double w = length_proportional ? hi - lo : weights[idx];
    if (!(w > 0.0)) throw ContractError("union-of-intervals: nonpositive weight");
    u.parts.push_back({lo, hi, w});
    total += w;
  }
  for (auto& p : u.parts) p.weight /= total;
  return u;
}

GaussianMixture make_gaussian_mixture(std::vector<GaussianMixture::Component> comps) {
  if (comps.empty()) throw ContractError("gaussian-mixture: empty component list");
  double total = 0.0;
  for (const auto& c : comps) {
    if (!(c.var > 0.0)) throw ContractError("gaussian-mixture: nonpositive variance");
    if (!(c.weight > 0.0)) throw ContractError("gaussian-mixture: nonpositive weight");
    total += c.weight;
  }
  GaussianMixture g{std::move(comps)};
  for (auto& c : g.components) c.weight /= total;
  return g;
}

Empirical make_empirical(Tensor samples) {
  if (samples.rows() == 0) throw ContractError("empirical: no samples");
  if (samples.rank() != 2) throw ContractError("empirical: samples must be [n,d]");
  return Empirical{std::move(samples)};
}

Empirical make_empirical(std::vector<double> samples_1d) {
  return make_empirical(Tensor::column(std::move(samples_1d)));
}

std::size_t dim(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>)
          return s.dim;
        else if constexpr (std::is_same_v<T, Empirical>)
          return s.samples.cols();
        else
          return 1;
      },
      spec);
}

Tensor sample(const DistributionSpec& spec, std::size_t n, Rng& rng) {
  if (n < 1) throw ContractError("sample: n must be >= 1");
  const std::size_t d = dim(spec);
  Tensor out({n, d});
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          for (double& v : out.data) v = rng.normal();
        } else if constexpr (std::is_same_v<T, Uniform>) {
          for (double& v : out.data) v = rng.uniform(s.lo, s.hi);
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          for (std::size_t i = 0; i < n; ++i) {
            double u = rng.uniform();
            double acc = 0.0;
            const auto* chosen = &s.parts.back();
            for (const auto& p : s.parts) {
              acc += p.weight;
              if (u < acc) {
                chosen = &p;
                break;
              }
            }
            out[i] = rng.uniform(chosen->lo, chosen->hi);
          }
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          for (std::size_t i = 0; i < n; ++i) {
            double u = rng.uniform();
            double acc = 0.0;
            const auto* chosen = &s.components.back();
            for (const auto& c : s.components) {
              acc += c.weight;
              if (u < acc) {
                chosen = &c;
                break;
              }
            }
            out[i] = chosen->mean + std::sqrt(chosen->var) * rng.normal();
          }
        } else if constexpr (std::is_same_v<T, Empirical>) {
          const std::size_t m = s.samples.rows();
          for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = static_cast<std::size_t>(rng.below(m));
            for (std::size_t c = 0; c < d; ++c) out(i, c) = s.samples(j, c);
          }
        }
      },
      spec);
  return out;
}

double log_density(const DistributionSpec& spec, std::span<const double> x) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          if (x.size() != s.dim) throw ShapeError("log_density: point dim mismatch");
          double q = 0.0;
          for (double v : x) q += v * v;
          return -0.5 * q - static_cast<double>(s.dim) * kLogSqrt2Pi;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          double v = x[0];
          if (v < s.lo || v > s.hi) return -kInf;
          return -std::log(s.hi - s.lo);
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          double v = x[0];
          for (const auto& p : s.parts)
            if (v >= p.lo && v <= p.hi) return std::log(p.weight / (p.hi - p.lo));
          return -kInf;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double v = x[0];
          std::vector<double> terms;
          terms.reserve(s.components.size());
          for (const auto& c : s.components) {
            double z = v - c.mean;
            terms.push_back(std::log(c.weight) - 0.5 * z * z / c.var -
                            0.5 * std::log(c.var) - kLogSqrt2Pi);
          }
          return logsumexp(terms);
        } else {
          throw UnsupportedError("log_density: empirical measures have no density");
        }
      },
      spec);
}

double log_density(const DistributionSpec& spec, double x) {
  return log_density(spec, std::span<const double>(&x, 1));
}

// ---- normal CDF / quantile ----

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -kInf;
    if (u == 1.0) return kInf;
    throw DomainError("normal_quantile: u outside [0,1]");
  }
  // bisection bracket, then Newton polish
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < u)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-8) break;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    double f = normal_cdf(x) - u;
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0.0) break;
    double step = f / pdf;
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return x;
}

namespace {

// Generic monotone inversion: safeguarded Newton on the CDF.
double invert_cdf(const std::function<double(double)>& cdf,
                  const std::function<double(double)>& pdf, double u, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    double f = cdf(mid) - u;
    if (f < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-6) break;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 20; ++i) {
    double f = cdf(x) - u;
    double d = pdf(x);
    if (!(d > 0.0)) break;
    double step = f / d;
    double next = x - step;
    if (next < lo || next > hi) break;  // keep inside the bracket
    x = next;
    if (std::abs(step) < 1e-14) break;
  }
  return x;
}

}  // namespace

CdfQuantile cdf_quantile(const DistributionSpec& spec) {
  if (dim(spec) != 1)
    throw UnsupportedError("cdf_quantile: only 1-D specs are supported");
  return std::visit(
      [&](const auto& s) -> CdfQuantile {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          return {[](double x) { return normal_cdf(x); },
                  [](double u) { return normal_quantile(u); }};
        } else if constexpr (std::is_same_v<T, Uniform>) {
          double lo = s.lo, hi = s.hi;
          return {[lo, hi](double x) {
                    if (x <= lo) return 0.0;
                    if (x >= hi) return 1.0;
                    return (x - lo) / (hi - lo);
                  },
                  [lo, hi](double u) { return lo + u * (hi - lo); }};
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          // weighted piecewise-linear CDF; quantile by direct inversion
          auto parts = s.parts;
          auto cdf = [parts](double x) {
            double acc = 0.0;
            for (const auto& p : parts) {
              if (x >= p.hi)
                acc += p.weight;
              else if (x > p.lo)
                return acc + p.weight * (x - p.lo) / (p.hi - p.lo);
              else
                break;
            }
            return acc;
          };
          auto quantile = [parts](double u) {
            u = std::clamp(u, 0.0, 1.0);
            double acc = 0.0;
            for (const auto& p : parts) {
              if (u <= acc + p.weight || &p == &parts.back())
                return p.lo + (p.hi - p.lo) * std::clamp((u - acc) / p.weight, 0.0, 1.0);
              acc += p.weight;
            }
            return parts.back().hi;
          };
          return {cdf, quantile};
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          auto comps = s.components;
          auto cdf = [comps](double x) {
            double acc = 0.0;
            for (const auto& c : comps)
              acc += c.weight * normal_cdf((x - c.mean) / std::sqrt(c.var));
            return acc;
          };
          auto pdf = [comps](double x) {
            double acc = 0.0;
            for (const auto& c : comps) {
              double z = x - c.mean;
              acc += c.weight * std::exp(-0.5 * z * z / c.var) /
                     std::sqrt(2.0 * std::numbers::pi * c.var);
            }
            return acc;
          };
          double lo = kInf, hi = -kInf;
          for (const auto& c : comps) {
            lo = std::min(lo, c.mean - 12.0 * std::sqrt(c.var));
            hi = std::max(hi, c.mean + 12.0 * std::sqrt(c.var));
          }
          auto quantile = [cdf, pdf, lo, hi](double u) {
            return invert_cdf(cdf, pdf, std::clamp(u, 1e-300, 1.0 - 1e-16), lo, hi);
          };
          return {cdf, quantile};
        } else {
          throw UnsupportedError(
              "cdf_quantile: empirical spec has a step CDF with no continuous inverse");
        }
      },
      spec);
}

Tensor ou_noise(const Tensor& x0, double t, Rng& rng) {
  if (t < 0.0) throw DomainError("ou_noise: negative time");
  if (t == 0.0) return x0;
  Tensor out = x0;
  const double decay = std::exp(-t);
  const double sigma = std::sqrt(1.0 - std::exp(-2.0 * t));
  for (double& v : out.data) v = decay * v + sigma * rng.normal();
  return out;
}

double spec_mean(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return 0.5 * (s.lo + s.hi);
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          double m = 0.0;
          for (const auto& p : s.parts) m += p.weight * 0.5 * (p.lo + p.hi);
          return m;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double m = 0.0;
          for (const auto& c : s.components) m += c.weight * c.mean;
          return m;
        } else {
          double m = 0.0;
          for (double v : s.samples.data) m += v;
          return m / static_cast<double>(s.samples.size());
        }
      },
      spec);
}

double spec_variance(const DistributionSpec& spec) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          double w = s.hi - s.lo;
          return w * w / 12.0;
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          double m = spec_mean(spec), e2 = 0.0;
          for (const auto& p : s.parts)
            e2 += p.weight * (p.lo * p.lo + p.lo * p.hi + p.hi * p.hi) / 3.0;
          return e2 - m * m;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double m = spec_mean(spec), e2 = 0.0;
          for (const auto& c : s.components) e2 += c.weight * (c.var + c.mean * c.mean);
          return e2 - m * m;
        } else {
          double m = spec_mean(spec), e2 = 0.0;
          for (double v : s.samples.data) e2 += v * v;
          return e2 / static_cast<double>(s.samples.size()) - m * m;
        }
      },
      spec);
}

}  // namespace pf
