#include "pushforward/statmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pushforward/errors.hpp"

namespace pf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> normalized_weights(std::vector<double> w, std::size_t count,
                                       const char* what) {
  if (w.empty()) w.assign(count, 1.0 / static_cast<double>(count));
  if (w.size() != count) throw ContractError(std::string(what) + ": weight count mismatch");
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw ContractError(std::string(what) + ": negative weight");
    total += v;
  }
  if (!(total > 0.0)) throw ContractError(std::string(what) + ": zero total weight");
  for (double& v : w) v /= total;
  return w;
}

void require_1d(const Tensor& x, const char* where) {
  if (x.cols() != 1) throw UnsupportedError(std::string(where) + ": expects 1-D samples");
  if (x.rows() == 0) throw ContractError(std::string(where) + ": empty sample array");
}

double interp_clamped(const std::vector<double>& xs, const std::vector<double>& ys, double v) {
  if (v <= xs.front()) return ys.front();
  if (v >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), v);
  std::size_t j = static_cast<std::size_t>(it - xs.begin());
  double t = (v - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

double interp_slope(const std::vector<double>& xs, const std::vector<double>& ys, double v) {
  if (v <= xs.front() || v >= xs.back()) return 0.0;
  auto it = std::upper_bound(xs.begin(), xs.end(), v);
  std::size_t j = static_cast<std::size_t>(it - xs.begin());
  return (ys[j] - ys[j - 1]) / (xs[j] - xs[j - 1]);
}

}  // namespace

FourierOnInterval make_fourier_family(std::vector<int> frequencies, double lo, double hi,
                                      std::vector<double> weights) {
  if (frequencies.empty()) throw ContractError("fourier family: no frequencies");
  if (!(hi > lo)) throw ContractError("fourier family: empty interval");
  std::vector<int> sorted = frequencies;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ContractError("fourier family: frequencies must be distinct");
  FourierOnInterval f;
  f.frequencies = std::move(frequencies);
  f.lo = lo;
  f.hi = hi;
  f.weights = normalized_weights(std::move(weights), f.frequencies.size(), "fourier family");
  return f;
}

std::vector<ExpandedFunction> expand_family(const TestFunctionFamily& family) {
  std::vector<ExpandedFunction> out;
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, FourierOnInterval>) {
          auto w = normalized_weights(fam.weights, fam.frequencies.size(), "fourier family");
          for (std::size_t i = 0; i < fam.frequencies.size(); ++i) {
            double omega = kTwoPi * fam.frequencies[i] / (fam.hi - fam.lo);
            double lo = fam.lo;
            std::string base = "exp(2pi*i*" + std::to_string(fam.frequencies[i]) + "*x)";
            out.push_back({w[i], [omega, lo](double v) { return std::cos(omega * (v - lo)); },
                           "Re " + base});
            out.push_back({w[i], [omega, lo](double v) { return std::sin(omega * (v - lo)); },
                           "Im " + base});
          }
        } else if constexpr (std::is_same_v<T, ExponentialMoments>) {
          auto w = normalized_weights(fam.weights, fam.ts.size(), "exponential moments");
          for (std::size_t i = 0; i < fam.ts.size(); ++i) {
            double t = fam.ts[i];
            if (fam.imaginary_axis) {
              out.push_back(
                  {w[i], [t](double v) { return std::cos(t * v); }, "Re exp(i*" + std::to_string(t) + "*x)"});
              out.push_back(
                  {w[i], [t](double v) { return std::sin(t * v); }, "Im exp(i*" + std::to_string(t) + "*x)"});
            } else {
              out.push_back(
                  {w[i], [t](double v) { return std::exp(t * v); }, "exp(" + std::to_string(t) + "*x)"});
            }
          }
        } else if constexpr (std::is_same_v<T, FiniteExplicit>) {
          auto w = normalized_weights(fam.weights, fam.fns.size(), "finite explicit family");
          for (std::size_t i = 0; i < fam.fns.size(); ++i) {
            const auto& g = fam.fns[i];
            if (g.xs.size() < 2 || g.xs.size() != g.ys.size())
              throw ContractError("finite explicit family: bad grid table");
            out.push_back({w[i],
                           [xs = g.xs, ys = g.ys](double v) { return interp_clamped(xs, ys, v); },
                           "grid-fn " + std::to_string(i)});
          }
        } else if constexpr (std::is_same_v<T, IndicatorBins>) {
          if (fam.edges.size() < 2) throw ContractError("indicator bins: need >= 2 edges");
          std::size_t bins = fam.edges.size() - 1;
          auto w = normalized_weights(fam.weights, bins, "indicator bins");
          for (std::size_t i = 0; i < bins; ++i) {
            double lo = fam.edges[i], hi = fam.edges[i + 1];
            bool last = i + 1 == bins;
            out.push_back({w[i],
                           [lo, hi, last](double v) {
                             return (v >= lo && (v < hi || (last && v <= hi))) ? 1.0 : 0.0;
                           },
                           "1[" + std::to_string(lo) + "," + std::to_string(hi) + ")"});
          }
        }
      },
      family);
  if (out.empty()) throw ContractError("test-function family expands to nothing");
  return out;
}

double moment_discrepancy(const TestFunctionFamily& family, const Tensor& x, const Tensor& y,
                          Estimator estimator) {
  require_1d(x, "moment_discrepancy");
  require_1d(y, "moment_discrepancy");
  const std::size_t n = x.rows(), m = y.rows();
  if (estimator == Estimator::Unbiased && (n < 2 || m < 2))
    throw ContractError("moment_discrepancy: unbiased estimator needs >= 2 samples per side");
  auto fns = expand_family(family);
  double total = 0.0;
  for (const auto& fn : fns) {
    double sx = 0.0, sx2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = fn.eval(x[i]);
      sx += v;
      sx2 += v * v;
    }
    double sy = 0.0, sy2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double v = fn.eval(y[j]);
      sy += v;
      sy2 += v * v;
    }
    double mean_x = sx / n, mean_y = sy / m;
    if (estimator == Estimator::Biased) {
      double d = mean_x - mean_y;
      total += fn.coeff * d * d;
    } else {
      double xx = (sx * sx - sx2) / (static_cast<double>(n) * (n - 1));
      double yy = (sy * sy - sy2) / (static_cast<double>(m) * (m - 1));
      total += fn.coeff * (xx + yy - 2.0 * mean_x * mean_y);
    }
  }
  return total;
}

MaxDiscrepancyResult max_discrepancy(const TestFunctionFamily& family, const Tensor& x,
                                     const Tensor& y) {
  require_1d(x, "max_discrepancy");
  require_1d(y, "max_discrepancy");
  auto fns = expand_family(family);
  MaxDiscrepancyResult best{-std::numeric_limits<double>::infinity(), 0, ""};
  for (std::size_t f = 0; f < fns.size(); ++f) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sx += fns[f].eval(x[i]);
    for (std::size_t j = 0; j < y.rows(); ++j) sy += fns[f].eval(y[j]);
    double gap = sx / x.rows() - sy / y.rows();
    if (gap > best.value) best = {gap, f, fns[f].label};
  }
  return best;
}

double mmd_squared(KernelSpec kernel, const Tensor& x, const Tensor& y, Estimator estimator,
                   Exec exec) {
  if (x.rows() == 0 || y.rows() == 0) throw ContractError("mmd_squared: empty sample array");
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(y.rows());
  if (estimator == Estimator::Unbiased && (n < 2 || m < 2))
    throw ContractError("mmd_squared: unbiased estimator needs >= 2 samples per side");
  const bool excl = estimator == Estimator::Unbiased;
  double sxx = pairwise_kernel_sum(x, x, kernel, excl, exec);
  double syy = pairwise_kernel_sum(y, y, kernel, excl, exec);
  double sxy = pairwise_kernel_sum(x, y, kernel, false, exec);
  double dxx = excl ? n * (n - 1.0) : n * n;
  double dyy = excl ? m * (m - 1.0) : m * m;
  return sxx / dxx + syy / dyy - 2.0 * sxy / (n * m);
}

double energy_distance(const Tensor& x, const Tensor& y, Estimator estimator, Exec exec) {
  if (x.rows() == 0 || y.rows() == 0) throw ContractError("energy_distance: empty sample array");
  if (x.cols() != y.cols()) throw ShapeError("energy_distance: dimension mismatch");
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(y.rows());
  if (estimator == Estimator::Unbiased && (n < 2 || m < 2))
    throw ContractError("energy_distance: unbiased estimator needs >= 2 samples per side");
  const bool excl = estimator == Estimator::Unbiased;
  double sxx, syy, sxy;
  if (x.cols() == 1) {
    // same accumulation routine for all three sums so identical inputs
    // cancel exactly
    sxx = sum_abs_cross_1d(x, x);
    syy = sum_abs_cross_1d(y, y);
    sxy = sum_abs_cross_1d(x, y);
  } else {
    KernelSpec dist{KernelSpec::Type::Distance, 1.0};
    sxx = pairwise_kernel_sum(x, x, dist, false, exec);
    syy = pairwise_kernel_sum(y, y, dist, false, exec);
    sxy = pairwise_kernel_sum(x, y, dist, false, exec);
  }
  double dxx = excl ? n * (n - 1.0) : n * n;
  double dyy = excl ? m * (m - 1.0) : m * m;
  return 2.0 * sxy / (n * m) - sxx / dxx - syy / dyy;
}

HistogramTvResult histogram_tv(const Tensor& x, const Tensor& y,
                               const std::vector<double>& edges) {
  require_1d(x, "histogram_tv");
  require_1d(y, "histogram_tv");
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw ContractError("histogram_tv: edges must be sorted with >= 2 entries");
  const std::size_t bins = edges.size() - 1;
  HistogramTvResult res;
  auto histogram = [&](const Tensor& s, std::size_t& outside) {
    std::vector<double> h(bins, 0.0);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double v = s[i];
      std::size_t b;
      if (v < edges.front()) {
        b = 0;
        ++outside;
      } else if (v >= edges.back()) {
        b = bins - 1;
        if (v > edges.back()) ++outside;
      } else {
        b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) -
                                     edges.begin()) -
            1;
      }
      h[b] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(s.rows());
    return h;
  };
  auto hx = histogram(x, res.outside_x);
  auto hy = histogram(y, res.outside_y);
  double l1 = 0.0;
  for (std::size_t b = 0; b < bins; ++b) l1 += std::abs(hx[b] - hy[b]);
  res.tv = 0.5 * l1;
  return res;
}

// ---- Wasserstein ----

double wasserstein1(const Tensor& x, const Tensor& y) {
  require_1d(x, "wasserstein1");
  require_1d(y, "wasserstein1");
  std::vector<double> sx(x.data), sy(y.data);
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  const std::size_t n = sx.size(), m = sy.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(sx[i] - sy[i]);
    return s / static_cast<double>(n);
  }
  // exact integral of |F_x^{-1}(u) - F_y^{-1}(u)| over u in (0,1);
  // breakpoints compared in integer arithmetic
  double total = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    unsigned long long a = static_cast<unsigned long long>(i + 1) * m;
    unsigned long long b = static_cast<unsigned long long>(j + 1) * n;
    double next = (a <= b) ? static_cast<double>(i + 1) / n : static_cast<double>(j + 1) / m;
    total += (next - u) * std::abs(sx[i] - sy[j]);
    u = next;
    if (a <= b) ++i;
    if (b <= a) ++j;
  }
  return total;
}

double wasserstein1_to_spec(const Tensor& x, const DistributionSpec& target,
                            std::size_t subdivisions) {
  require_1d(x, "wasserstein1_to_spec");
  auto cq = cdf_quantile(target);
  std::vector<double> sx(x.data);
  std::sort(sx.begin(), sx.end());
  const std::size_t n = sx.size();
  double total = 0.0;
  const double du = 1.0 / static_cast<double>(n * subdivisions);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < subdivisions; ++k) {
      double u = (static_cast<double>(i) + (k + 0.5) / subdivisions) / n;
      total += std::abs(sx[i] - cq.quantile(u)) * du;
    }
  }
  return total;
}

namespace {

// integral of the empirical CDF of `sorted` over each grid cell
std::vector<double> cdf_cell_integrals(const std::vector<double>& sorted, double lo, double h,
                                       std::size_t cells) {
  std::vector<double> out(cells, 0.0);
  const double n = static_cast<double>(sorted.size());
  std::size_t k = 0;
  while (k < sorted.size() && sorted[k] <= lo) ++k;
  for (std::size_t c = 0; c < cells; ++c) {
    double a = lo + c * h, b = lo + (c + 1) * h;
    double pos = a, acc = 0.0;
    while (k < sorted.size() && sorted[k] <= b) {
      acc += (sorted[k] - pos) * (static_cast<double>(k) / n);
      pos = sorted[k];
      ++k;
    }
    acc += (b - pos) * (static_cast<double>(k) / n);
    out[c] = acc;
  }
  return out;
}

}  // namespace

double wasserstein1_dual_bound(const Tensor& x, const Tensor& y, std::size_t grid_cells) {
  require_1d(x, "wasserstein1_dual_bound");
  require_1d(y, "wasserstein1_dual_bound");
  if (grid_cells < 1) throw ContractError("wasserstein1_dual_bound: need >= 1 grid cell");
  std::vector<double> sx(x.data), sy(y.data);
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  double lo = std::min(sx.front(), sy.front());
  double hi = std::max(sx.back(), sy.back());
  if (hi == lo) return 0.0;
  double h = (hi - lo) / static_cast<double>(grid_cells);
  auto ix = cdf_cell_integrals(sx, lo, h, grid_cells);
  auto iy = cdf_cell_integrals(sy, lo, h, grid_cells);
  // optimal slope on each cell is sign(int F_y - int F_x); the potential's
  // value at the samples telescopes into the cumulative differences
  double total = 0.0;
  for (std::size_t c = 0; c < grid_cells; ++c) total += std::abs(iy[c] - ix[c]);
  return total;
}

// ---- differentiable losses ----

namespace {

struct FamilyTapeTerm {
  double coeff;
  Var stat_x;      // scalar node: mean or sums, depending on estimator
  double target;   // matching y-side constant
};

// builds mean f(x) nodes for one smooth expanded function
struct SmoothFn {
  double coeff;
  std::function<Var(Tape&, Var)> apply;  // elementwise transform on tape
  std::function<double(double)> eval;    // plain evaluation for y stats
};

std::vector<SmoothFn> smooth_parts(const TestFunctionFamily& family) {
  std::vector<SmoothFn> parts;
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, FourierOnInterval>) {
          auto w = normalized_weights(fam.weights, fam.frequencies.size(), "fourier family");
          for (std::size_t i = 0; i < fam.frequencies.size(); ++i) {
            double omega = kTwoPi * fam.frequencies[i] / (fam.hi - fam.lo);
            double shift = -omega * fam.lo;
            parts.push_back({w[i],
                             [omega, shift](Tape& t, Var v) { return t.cos(t.affine(v, omega, shift)); },
                             [omega, shift](double v) { return std::cos(omega * v + shift); }});
            parts.push_back({w[i],
                             [omega, shift](Tape& t, Var v) { return t.sin(t.affine(v, omega, shift)); },
                             [omega, shift](double v) { return std::sin(omega * v + shift); }});
          }
        } else if constexpr (std::is_same_v<T, ExponentialMoments>) {
          auto w = normalized_weights(fam.weights, fam.ts.size(), "exponential moments");
          for (std::size_t i = 0; i < fam.ts.size(); ++i) {
            double s = fam.ts[i];
            if (fam.imaginary_axis) {
              parts.push_back({w[i], [s](Tape& t, Var v) { return t.cos(t.scale(v, s)); },
                               [s](double v) { return std::cos(s * v); }});
              parts.push_back({w[i], [s](Tape& t, Var v) { return t.sin(t.scale(v, s)); },
                               [s](double v) { return std::sin(s * v); }});
            } else {
              parts.push_back({w[i], [s](Tape& t, Var v) { return t.exp(t.scale(v, s)); },
                               [s](double v) { return std::exp(s * v); }});
            }
          }
        } else if constexpr (std::is_same_v<T, FiniteExplicit>) {
          auto w = normalized_weights(fam.weights, fam.fns.size(), "finite explicit family");
          for (std::size_t i = 0; i < fam.fns.size(); ++i) {
            const auto& g = fam.fns[i];
            auto plain = [xs = g.xs, ys = g.ys](double v) { return interp_clamped(xs, ys, v); };
            auto apply = [xs = g.xs, ys = g.ys](Tape& t, Var v) {
              const Tensor& xv = t.value(v);
              Tensor out = xv;
              for (double& e : out.data) e = interp_clamped(xs, ys, e);
              Tensor input = xv;
              return t.custom(std::move(out), {v},
                              [vi = v.id, input = std::move(input), xs, ys](const Tensor& gadj, Tape& tt) {
                                Tensor& da = tt.adjoint_mut(Var{vi});
                                for (std::size_t e = 0; e < gadj.size(); ++e)
                                  da[e] += gadj[e] * interp_slope(xs, ys, input[e]);
                              });
            };
            parts.push_back({w[i], apply, plain});
          }
        } else {
          throw UnsupportedError(
              "moment_discrepancy_loss: indicator families are piecewise constant and not "
              "differentiable");
        }
      },
      family);
  return parts;
}

}  // namespace

Var moment_discrepancy_loss(Tape& tape, Var x, const TestFunctionFamily& family,
                            const Tensor& y, Estimator estimator) {
  const Tensor& xv = tape.value(x);
  if (xv.cols() != 1) throw UnsupportedError("moment_discrepancy_loss: expects 1-D samples");
  require_1d(y, "moment_discrepancy_loss");
  const double n = static_cast<double>(xv.rows());
  const double m = static_cast<double>(y.rows());
  if (estimator == Estimator::Unbiased && (n < 2 || m < 2))
    throw ContractError("moment_discrepancy_loss: unbiased estimator needs >= 2 samples per side");

  auto parts = smooth_parts(family);
  Var loss = tape.input(Tensor::scalar(0.0));
  for (const auto& p : parts) {
    double sy = 0.0, sy2 = 0.0;
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double v = p.eval(y[j]);
      sy += v;
      sy2 += v * v;
    }
    double mean_y = sy / m;
    Var u = p.apply(tape, x);
    if (estimator == Estimator::Biased) {
      Var gap = tape.add_const(tape.mean_all(u), -mean_y);
      loss = tape.add(loss, tape.scale(tape.square(gap), p.coeff));
    } else {
      Var su = tape.sum_all(u);
      Var su2 = tape.sum_all(tape.square(u));
      Var xx = tape.scale(tape.sub(tape.square(su), su2), 1.0 / (n * (n - 1.0)));
      double yy = (sy * sy - sy2) / (m * (m - 1.0));
      Var cross = tape.scale(tape.mean_all(u), -2.0 * mean_y);
      Var term = tape.add_const(tape.add(xx, cross), yy);
      loss = tape.add(loss, tape.scale(term, p.coeff));
    }
  }
  return loss;
}

namespace {

Var pairwise_objective_node(Tape& tape, Var x, const Tensor& y, KernelSpec kernel,
                            Estimator estimator, bool energy_sign) {
  const Tensor xv = tape.value(x);
  if (xv.cols() != y.cols()) throw ShapeError("pairwise objective: dimension mismatch");
  const double n = static_cast<double>(xv.rows());
  const double m = static_cast<double>(y.rows());
  if (n == 0 || m == 0) throw ContractError("pairwise objective: empty sample array");
  if (estimator == Estimator::Unbiased && (n < 2 || m < 2))
    throw ContractError("pairwise objective: unbiased estimator needs >= 2 samples per side");
  const bool excl = estimator == Estimator::Unbiased;
  const Exec exec = default_exec();

  double sxx = pairwise_kernel_sum(xv, xv, kernel, excl, exec);
  double syy = pairwise_kernel_sum(y, y, kernel, excl, exec);
  double sxy = pairwise_kernel_sum(xv, y, kernel, false, exec);
  double dxx = excl ? n * (n - 1.0) : n * n;
  double dyy = excl ? m * (m - 1.0) : m * m;
  double value = sxx / dxx + syy / dyy - 2.0 * sxy / (n * m);
  if (energy_sign) value = -value;  // ED = -MMD^2 with the distance kernel

  const double sign = energy_sign ? -1.0 : 1.0;
  Tensor xcopy = xv;
  return tape.custom(
      Tensor::scalar(value), {x},
      [xi = x.id, xcopy = std::move(xcopy), y, kernel, dxx, n, m, excl, sign](
          const Tensor& g, Tape& t) {
        PairwiseGradTerms terms;
        terms.self_coeff = sign * g[0] * 2.0 / dxx;
        terms.cross_coeff = sign * g[0] * (-2.0 / (n * m));
        terms.exclude_self_diagonal = excl;
        pairwise_kernel_grad_x(xcopy, y, kernel, terms, t.adjoint_mut(Var{xi}), default_exec());
      });
}

}  // namespace

Var mmd_loss(Tape& tape, Var x, const Tensor& y, KernelSpec kernel, Estimator estimator) {
  return pairwise_objective_node(tape, x, y, kernel, estimator, false);
}

Var energy_loss(Tape& tape, Var x, const Tensor& y, Estimator estimator) {
  return pairwise_objective_node(tape, x, y, KernelSpec{KernelSpec::Type::Distance, 1.0},
                                 estimator, true);
}

// ---- exact best-response dynamics ----

namespace {

double overlap(double a, double b, double c, double d) {
  return std::max(0.0, std::min(b, d) - std::max(a, c));
}

double union_mass(const UnionOfIntervals& u, double c, double d) {
  double mass = 0.0;
  for (const auto& p : u.parts) mass += p.weight * overlap(p.lo, p.hi, c, d) / (p.hi - p.lo);
  return mass;
}

}  // namespace

BestResponseTrace iterate_best_response(const UnionOfIntervals& target,
                                        const std::vector<std::pair<double, double>>& indicators,
                                        double window, double a0, double a_lo, double a_hi,
                                        int rounds) {
  if (indicators.empty()) throw ContractError("iterate_best_response: no indicators");
  if (!(window > 0.0)) throw ContractError("iterate_best_response: window must be positive");
  BestResponseTrace trace;
  double a = a0;
  for (int round = 0; round < rounds; ++round) {
    // adversary: indicator with the largest model-minus-target mass gap
    std::size_t pick = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < indicators.size(); ++f) {
      auto [c, d] = indicators[f];
      double model_mass = overlap(a, a + window, c, d) / window;
      double gap = model_mass - union_mass(target, c, d);
      if (gap > best_gap) {
        best_gap = gap;
        pick = f;
      }
    }
    trace.adversary_picks.push_back(pick);
    // generator: slide the window to minimize the picked indicator's mass;
    // the mass is piecewise linear in a, so checking breakpoints is exact
    auto [c, d] = indicators[pick];
    std::vector<double> candidates = {a_lo, a_hi, c - window, d - window, c, d};
    double best_a = a_lo;
    double best_mass = std::numeric_limits<double>::infinity();
    std::sort(candidates.begin(), candidates.end());
    for (double cand : candidates) {
      if (cand < a_lo || cand > a_hi) continue;
      double mass = overlap(cand, cand + window, c, d) / window;
      if (mass < best_mass - 1e-15) {
        best_mass = mass;
        best_a = cand;
      }
    }
    a = best_a;
    trace.a_values.push_back(a);
  }
  return trace;
}

}  // namespace pf
