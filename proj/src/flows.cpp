#include "pushforward/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pushforward/errors.hpp"

namespace pf {

double potential_gradient(const PotentialSpec& potential, double x) {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, QuadraticPotential>) {
          return x;
        } else {
          const auto& xs = p.xs;
          if (xs.size() < 2 || xs.size() != p.grad.size())
            throw ContractError("tabulated potential: bad grid");
          if (x <= xs.front()) return p.grad.front();
          if (x >= xs.back()) return p.grad.back();
          auto it = std::upper_bound(xs.begin(), xs.end(), x);
          std::size_t j = static_cast<std::size_t>(it - xs.begin());
          double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
          return p.grad[j - 1] + t * (p.grad[j] - p.grad[j - 1]);
        }
      },
      potential);
}

ParticleEnsemble simulate_sde(const PotentialSpec& potential, const ParticleEnsemble& start,
                              double t_end, double dt, Rng& rng, Exec exec) {
  if (!(dt > 0.0)) throw ContractError("simulate_sde: dt must be positive");
  if (t_end < 0.0) throw DomainError("simulate_sde: negative duration");
  if (t_end == 0.0) return start;
  if (dt > t_end)
    throw ContractError("simulate_sde: step size " + std::to_string(dt) +
                        " exceeds duration " + std::to_string(t_end));
  if (std::holds_alternative<TabulatedPotential>(potential) && start.positions.cols() != 1)
    throw UnsupportedError("simulate_sde: tabulated potentials are 1-D");

  const std::size_t n = start.positions.rows(), d = start.positions.cols();
  const std::size_t full_steps = static_cast<std::size_t>(t_end / dt);
  const double remainder = t_end - static_cast<double>(full_steps) * dt;

  ParticleEnsemble out = start;
  out.time = start.time + t_end;
  const std::uint64_t salt = rng.next_u64();
  const Rng base(salt);

  auto advance_particle = [&](std::size_t i) {
    Rng prng = base.fork(i);
    std::vector<double> x(d);
    for (std::size_t c = 0; c < d; ++c) x[c] = start.positions(i, c);
    auto step = [&](double h) {
      const double noise = std::sqrt(2.0 * h);
      for (std::size_t c = 0; c < d; ++c)
        x[c] += -potential_gradient(potential, x[c]) * h + noise * prng.normal();
    };
    for (std::size_t s = 0; s < full_steps; ++s) step(dt);
    if (remainder > 0.0) step(remainder);
    for (std::size_t c = 0; c < d; ++c) out.positions(i, c) = x[c];
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) advance_particle(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) advance_particle(i);
  }
  return out;
}

double GaussianFlowState::density(double x) const {
  double acc = 0.0;
  for (const auto& c : components) {
    double z = x - c.mean;
    acc += c.weight * std::exp(-0.5 * z * z / c.var) /
           std::sqrt(2.0 * std::numbers::pi * c.var);
  }
  return acc;
}

double GaussianFlowState::grad_log_density(double x) const {
  // responsibility-weighted component scores
  double dens = 0.0, num = 0.0;
  for (const auto& c : components) {
    double z = x - c.mean;
    double comp = c.weight * std::exp(-0.5 * z * z / c.var) /
                  std::sqrt(2.0 * std::numbers::pi * c.var);
    dens += comp;
    num += comp * (-z / c.var);
  }
  return num / dens;
}

namespace {

GaussianFlowState::Component noised(double mean, double var, double weight, double t) {
  const double decay = std::exp(-t);
  const double decay2 = std::exp(-2.0 * t);
  return {decay * mean, decay2 * var + 1.0 - decay2, weight};
}

}  // namespace

GaussianFlowState ou_flow_state(const DistributionSpec& mu1, double t) {
  if (t < 0.0) throw DomainError("ou_flow_state: negative time");
  GaussianFlowState state;
  state.t = t;
  if (std::holds_alternative<StdGaussian>(mu1)) {
    if (dim(mu1) != 1) throw UnsupportedError("ou_flow_state: 1-D only");
    state.components.push_back(noised(0.0, 1.0, 1.0, t));
  } else if (const auto* gm = std::get_if<GaussianMixture>(&mu1)) {
    for (const auto& c : gm->components)
      state.components.push_back(noised(c.mean, c.var, c.weight, t));
  } else {
    throw UnsupportedError(
        "ou_flow_state: analytic flow state needs a Gaussian-family law; use the particle "
        "ensemble path instead");
  }
  return state;
}

GaussianFlowState ou_flow_state_empirical(const Tensor& data, double t) {
  if (data.cols() != 1) throw UnsupportedError("ou_flow_state_empirical: 1-D data only");
  if (data.rows() == 0) throw ContractError("ou_flow_state_empirical: empty data");
  if (!(t > 0.0))
    throw DomainError("ou_flow_state_empirical: atoms have zero variance at t = 0");
  GaussianFlowState state;
  state.t = t;
  const double w = 1.0 / static_cast<double>(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i)
    state.components.push_back(noised(data[i], 0.0, w, t));
  return state;
}

double velocity_field(const GaussianFlowState& state, double x) {
  for (const auto& c : state.components)
    if (!(c.var > 0.0)) throw DomainError("velocity_field: degenerate component variance");
  return -x - state.grad_log_density(x);
}

double integrate_ode_point(const VelocityFn& velocity, double x0, double t_from, double t_to,
                           int steps) {
  if (steps < 1) throw ContractError("integrate_ode: steps must be >= 1");
  double x = x0;
  double t = t_from;
  for (int s = 0; s < steps; ++s) {
    // land each step on the exact node so rounding never pushes the final
    // evaluation past t_to
    double t_next = (s + 1 == steps) ? t_to
                                     : t_from + (t_to - t_from) * (s + 1) / steps;
    double h = t_next - t;
    double k1 = velocity(t, x);
    double k2 = velocity(t + 0.5 * h, x + 0.5 * h * k1);
    double k3 = velocity(t + 0.5 * h, x + 0.5 * h * k2);
    double k4 = velocity(t_next, x + h * k3);
    if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3) || !std::isfinite(k4))
      throw NumericError("integrate_ode: non-finite velocity at t = " + std::to_string(t) +
                         ", x = " + std::to_string(x));
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
  }
  return x;
}

Tensor integrate_ode(const VelocityFn& velocity, const Tensor& x0, double t_from, double t_to,
                     int steps, Exec exec) {
  if (x0.cols() != 1) throw UnsupportedError("integrate_ode: 1-D ensembles only");
  Tensor out = x0;
  const std::size_t n = x0.rows();
  if (exec == Exec::Parallel) {
    // NumericError must not escape an OpenMP region; collect and rethrow.
    bool failed = false;
    std::string message;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        out[i] = integrate_ode_point(velocity, x0[i], t_from, t_to, steps);
      } catch (const std::exception& e) {
#pragma omp critical
        {
          failed = true;
          message = e.what();
        }
      }
    }
    if (failed) throw NumericError(message);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = integrate_ode_point(velocity, x0[i], t_from, t_to, steps);
  }
  return out;
}

double continuity_residual(const std::function<GaussianFlowState(double)>& state_at, double t0,
                           double x_lo, double x_hi, std::size_t grid_points, double dx,
                           double dt) {
  if (grid_points < 2) throw ContractError("continuity_residual: need >= 2 grid points");
  GaussianFlowState before = state_at(t0 - dt);
  GaussianFlowState now = state_at(t0);
  GaussianFlowState after = state_at(t0 + dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    double x = x_lo + (x_hi - x_lo) * i / (grid_points - 1.0);
    double ddt = (after.density(x) - before.density(x)) / (2.0 * dt);
    double flux_hi = velocity_field(now, x + dx) * now.density(x + dx);
    double flux_lo = velocity_field(now, x - dx) * now.density(x - dx);
    double ddx = (flux_hi - flux_lo) / (2.0 * dx);
    worst = std::max(worst, std::abs(ddt + ddx));
  }
  return worst;
}

double hermite_value(int k, double x) {
  if (k < 0) throw ContractError("hermite_value: order must be >= 0");
  double prev = 1.0;  // He_0
  if (k == 0) return prev;
  double cur = x;  // He_1
  for (int j = 1; j < k; ++j) {
    double next = x * cur - static_cast<double>(j) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<HermiteDecayRow> hermite_decay(const DistributionSpec& mu1, int k,
                                           const std::vector<double>& times, std::size_t n,
                                           Rng& rng) {
  if (k < 1) throw ContractError("hermite_decay: order must be >= 1");
  if (dim(mu1) != 1) throw UnsupportedError("hermite_decay: 1-D only");
  Tensor x0 = sample(mu1, n, rng);
  double base_moment = 0.0;
  for (std::size_t i = 0; i < n; ++i) base_moment += hermite_value(k, x0[i]);
  base_moment /= static_cast<double>(n);

  std::vector<HermiteDecayRow> rows;
  for (double t : times) {
    Tensor xt = ou_noise(x0, t, rng);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = hermite_value(k, xt[i]);
      mean += v;
      m2 += v * v;
    }
    mean /= static_cast<double>(n);
    double var = m2 / static_cast<double>(n) - mean * mean;
    rows.push_back({t, mean, std::exp(-k * t) * base_moment,
                    std::sqrt(std::max(var, 0.0) / static_cast<double>(n))});
  }
  return rows;
}

}  // namespace pf
